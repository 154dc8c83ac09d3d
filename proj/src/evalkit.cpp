#include "csla/evalkit.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csla/rng.hpp"

namespace csla {

ToyIdentityEmbedder::ToyIdentityEmbedder(int dim, std::uint64_t seed, int pool) : dim_(dim), pool_(pool), seed_(seed) {
    require(dim > 0 && pool > 0, "ToyIdentityEmbedder: dim and pool must be positive");
}

std::vector<float> ToyIdentityEmbedder::embed(const Image& image) const {
    require_valid(image);
    const int ph = image.height / pool_, pw = image.width / pool_;
    require(ph > 0 && pw > 0, "ToyIdentityEmbedder: image smaller than pool size");
    const int in = ph * pw * 3;
    if (in_features_ != in) {
        Rng rng(seed_ ^ static_cast<std::uint64_t>(in));
        proj_.resize(dim_, in);
        const float scale = 1.0f / std::sqrt(static_cast<float>(in));
        for (int r = 0; r < dim_; ++r)
            for (int c = 0; c < in; ++c) proj_(r, c) = static_cast<float>(rng.normal()) * scale;
        in_features_ = in;
    }
    Eigen::VectorXf x(in);
    const float norm = 1.0f / static_cast<float>(pool_ * pool_);
    for (int y = 0; y < ph; ++y)
        for (int xx = 0; xx < pw; ++xx)
            for (int c = 0; c < 3; ++c) {
                float acc = 0.0f;
                for (int dy = 0; dy < pool_; ++dy)
                    for (int dx = 0; dx < pool_; ++dx) acc += image.at(y * pool_ + dy, xx * pool_ + dx, c);
                x((y * pw + xx) * 3 + c) = acc * norm;
            }
    const Eigen::VectorXf e = proj_ * x;
    return {e.data(), e.data() + e.size()};
}

double cosine(std::span<const float> a, std::span<const float> b) {
    require(a.size() == b.size(), "cosine: length mismatch");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return std::nan("");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

IdScore id_score_detail(const std::vector<Image>& sources, const std::vector<Image>& edits,
                        const IdentityEmbedder& embedder) {
    require(!sources.empty(), "id_score: empty image list");
    require(sources.size() == edits.size(), "id_score: " + std::to_string(sources.size()) + " sources vs " +
                                                std::to_string(edits.size()) + " edits");
    IdScore out;
    double sum = 0.0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const double c = cosine(embedder.embed(sources[i]), embedder.embed(edits[i]));
        if (std::isnan(c)) {
            ++out.skipped;
            continue;
        }
        sum += std::clamp(c, -1.0, 1.0);
        ++out.counted;
    }
    out.score = out.counted > 0 ? sum / out.counted : 0.0;
    return out;
}

double id_score(const std::vector<Image>& sources, const std::vector<Image>& edits, const IdentityEmbedder& embedder) {
    return id_score_detail(sources, edits, embedder).score;
}

double text_pair_accuracy(const std::vector<Image>& edits, const TextPair& pair, const EncoderAdapter& enc) {
    require(!edits.empty(), "text_pair_accuracy: empty image list");
    const Embedding pos = enc.encode_text(pair.positive);
    const Embedding neg = enc.encode_text(pair.negative);
    int correct = 0;
    for (const auto& image : edits) {
        const Embedding f = enc.encode_image(image);
        const double sp = cosine(f.view(), pos.view());
        const double sn = cosine(f.view(), neg.view());
        if (sp > sn) ++correct;  // NaN compares false
    }
    return static_cast<double>(correct) / static_cast<double>(edits.size());
}

std::vector<TextPair> parse_text_pairs(const std::string& text) {
    std::vector<TextPair> pairs;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(number) + ": " + e.what(), number);
        }
        auto field = [&](const char* key) {
            if (!j.is_object() || !j.contains(key) || !j[key].is_string())
                throw ParseError("line " + std::to_string(number) + ": missing string field '" + key + "'", number);
            return j[key].get<std::string>();
        };
        TextPair p{field("mode"), field("positive"), field("negative")};
        if (p.positive.empty() || p.negative.empty() || p.positive == p.negative)
            throw ParseError("line " + std::to_string(number) + ": prompts must be non-empty and distinct", number);
        pairs.push_back(std::move(p));
    }
    require(!pairs.empty(), "text pair file contains no pairs");
    return pairs;
}

std::vector<TextPair> load_text_pairs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open text pair file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text_pairs(ss.str());
}

std::string format_text_pairs(const std::vector<TextPair>& pairs) {
    std::string out;
    for (const auto& p : pairs)
        out += nlohmann::json{{"mode", p.mode}, {"positive", p.positive}, {"negative", p.negative}}.dump() + "\n";
    return out;
}

EvalReport evaluate(const Model& model, const std::vector<TextPair>& pairs, const IdentityEmbedder& embedder,
                    const EvalOptions& options) {
    require(options.n > 0, "evaluate: population size must be positive");
    require(!pairs.empty(), "evaluate: no text pairs");
    const auto& gen = model.generator();
    Rng rng(options.seed);
    std::vector<Image> sources;
    std::vector<Latents> inverted;
    for (int i = 0; i < options.n; ++i) {
        const auto z = rng.normal_vector(gen.config().d_z);
        sources.push_back(gen.sample(z).image);
        inverted.push_back(model.invert(sources.back()));
    }
    EvalReport report{{}, options.n, options.seed, options.strength, options.space};
    for (const auto& pair : pairs) {
        const Direction d = model.direction_from_texts(pair.negative, pair.positive);
        std::vector<Image> edits;
        edits.reserve(sources.size());
        for (const auto& lat : inverted)
            edits.push_back(model.decode(model.apply_direction(lat, d, options.strength, std::nullopt, options.space),
                                         EditSpace::s));
        const IdScore ids = id_score_detail(sources, edits, embedder);
        report.rows.push_back({pair.mode, ids.score, text_pair_accuracy(edits, pair, model.encoder()), ids.skipped});
    }
    return report;
}

void print_report(std::ostream& out, const EvalReport& report) {
    out << "# n=" << report.n << " seed=" << report.seed << " strength=" << report.strength
        << " space=" << to_string(report.space) << "\n";
    out << std::left << std::setw(10) << "mode" << std::right << std::setw(10) << "faceID" << std::setw(10) << "Acc"
        << "\n";
    for (const auto& r : report.rows)
        out << std::left << std::setw(10) << r.mode << std::right << std::fixed << std::setprecision(4)
            << std::setw(10) << r.face_id << std::setw(10) << r.acc << "\n";
    out.unsetf(std::ios::fixed);
}

AlignmentReport alignment_report(const GeneratorAdapter& gen, const EncoderAdapter& enc, const MapperStack& mappers,
                                 const CenterSet& centers, int n, std::uint64_t seed) {
    require(n > 0, "alignment_report: n must be positive");
    Rng rng(seed);
    AlignmentReport out;
    out.n = n;
    out.s_cosine.assign(static_cast<std::size_t>(mappers.n_layers()), 0.0);
    for (int k = 0; k < n; ++k) {
        const auto sample = gen.sample(rng.normal_vector(gen.config().d_z));
        const Embedding df = residual(enc.encode_image(sample.image), centers.f_base);
        const WLatent dw = mappers.map_w(df);
        const SBundle ds = mappers.map_s(dw);
        out.w_cosine += cosine(dw.view(), residual(sample.w, centers.w_base).view());
        const SBundle target = residual(sample.s, centers.s_base);
        for (std::size_t i = 0; i < out.s_cosine.size(); ++i)
            out.s_cosine[i] += cosine(ds.layers[i], target.layers[i]);
    }
    out.w_cosine /= n;
    for (auto& c : out.s_cosine) {
        c /= n;
        out.s_cosine_mean += c;
    }
    out.s_cosine_mean /= static_cast<double>(out.s_cosine.size());
    return out;
}

} // namespace csla
