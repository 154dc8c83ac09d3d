#include "csla/generator.hpp"

#include <cmath>

#include "csla/rng.hpp"

namespace csla {

namespace {

constexpr std::uint64_t kAverageSalt = 0x9e3779b97f4a7c15ULL;

Eigen::MatrixXf random_matrix(Rng& rng, int rows, int cols, int fan_in) {
    const float scale = 1.0f / std::sqrt(static_cast<float>(fan_in));
    Eigen::MatrixXf m(rows, cols);
    // Row-major fill so the draw order is independent of Eigen's storage.
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = static_cast<float>(rng.normal()) * scale;
    return m;
}

Eigen::VectorXf random_vector(Rng& rng, int n, int fan_in) {
    const float scale = 1.0f / std::sqrt(static_cast<float>(fan_in));
    Eigen::VectorXf v(n);
    for (int i = 0; i < n; ++i) v(i) = static_cast<float>(rng.normal()) * scale;
    return v;
}

Eigen::Map<const Eigen::VectorXf> as_vec(std::span<const float> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

} // namespace

GeneratorConfig GeneratorConfig::stylegan2_1024() {
    GeneratorConfig c;
    c.d_z = 512;
    c.d_w = 512;
    c.dim_s = {512, 512,                      // 4x4: conv, toRGB
               512, 512, 512, 512, 512, 512,  // 8, 16
               512, 512, 512, 512, 512, 512,  // 32, 64
               512, 256, 256, 256, 128, 128,  // 128, 256
               128, 64,  64,  64,  32,  32};  // 512, 1024
    c.n_layers = static_cast<int>(c.dim_s.size());
    c.height = 1024;
    c.width = 1024;
    return c;
}

void GeneratorConfig::validate() const {
    require(n_layers >= 1, "generator config: n_layers must be >= 1");
    require(d_z >= 1 && d_w >= 1, "generator config: d_z and d_w must be >= 1");
    require(static_cast<int>(dim_s.size()) == n_layers, "generator config: dim_s length must equal n_layers");
    for (int d : dim_s) require(d >= 1, "generator config: every dim_s entry must be >= 1");
    require(height >= 1 && width >= 1, "generator config: resolution must be positive");
}

void GeneratorAdapter::check_z(std::span<const float> z) const {
    require(static_cast<int>(z.size()) == config().d_z,
            "z has length " + std::to_string(z.size()) + ", expected " + std::to_string(config().d_z));
    require_finite(z, "z");
}

void GeneratorAdapter::check_w(const WLatent& w) const {
    require(static_cast<int>(w.size()) == config().d_w,
            "w has length " + std::to_string(w.size()) + ", expected " + std::to_string(config().d_w));
}

void GeneratorAdapter::check_s(const SBundle& s) const {
    require_same_shape(s, SBundle::zeros(config().dim_s), "synthesize_from_s");
}

ToyGenerator::ToyGenerator(GeneratorConfig config) : config_(std::move(config)) {
    config_.validate();
    Rng rng(config_.seed);
    map_weight_ = random_matrix(rng, config_.d_w, config_.d_z, config_.d_z);
    map_bias_ = random_vector(rng, config_.d_w, config_.d_z);
    const int pixels = config_.height * config_.width * 3;
    for (int i = 0; i < config_.n_layers; ++i) {
        style_weight_.push_back(random_matrix(rng, config_.dim_s[i], config_.d_w, config_.d_w));
        style_bias_.push_back(random_vector(rng, config_.dim_s[i], config_.d_w));
    }
    for (int i = 0; i < config_.n_layers; ++i) {
        synth_weight_.push_back(random_matrix(rng, pixels, config_.dim_s[i], config_.dim_s[i]));
        synth_bias_.push_back(random_vector(rng, pixels, config_.dim_s[i]));
    }
}

std::string ToyGenerator::model_id() const { return "toy-generator/seed=" + std::to_string(config_.seed); }

WLatent ToyGenerator::map(std::span<const float> z) const {
    Eigen::VectorXf w = map_weight_ * as_vec(z) + map_bias_;
    return WLatent(std::vector<float>(w.data(), w.data() + w.size()));
}

GeneratorSample ToyGenerator::sample(std::span<const float> z) const {
    check_z(z);
    GeneratorSample out;
    out.w = map(z);
    out.s = styles_of(out.w);
    out.image = synthesize_from_s(out.s);
    return out;
}

SBundle ToyGenerator::styles_of(const WLatent& w) const {
    check_w(w);
    SBundle s;
    s.layers.reserve(config_.n_layers);
    const auto wv = as_vec(w.view());
    for (int i = 0; i < config_.n_layers; ++i) {
        Eigen::VectorXf si = style_weight_[i] * wv + style_bias_[i];
        s.layers.emplace_back(si.data(), si.data() + si.size());
    }
    return s;
}

Image ToyGenerator::synthesize_from_s(const SBundle& s) const {
    check_s(s);
    const int pixels = config_.height * config_.width * 3;
    Eigen::VectorXf acc = Eigen::VectorXf::Zero(pixels);
    for (int i = 0; i < config_.n_layers; ++i)
        acc += (synth_weight_[i] * as_vec(s.layers[i]) + synth_bias_[i]).array().tanh().matrix();
    const float scale = 1.0f / std::sqrt(static_cast<float>(config_.n_layers));
    Image image(config_.height, config_.width);
    for (int p = 0; p < pixels; ++p) image.pixels[p] = std::tanh(scale * acc(p));
    return image;
}

Rng ToyGenerator::average_rng(const GeneratorConfig& config) { return Rng(config.seed ^ kAverageSalt); }

WLatent ToyGenerator::average_w(int num_samples) const {
    require(num_samples >= 1, "average_w: num_samples must be >= 1");
    Rng rng = average_rng(config_);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(config_.d_w);
    for (int k = 0; k < num_samples; ++k) {
        const auto z = rng.normal_vector(static_cast<std::size_t>(config_.d_z));
        sum += as_vec(map(z).view()).cast<double>();
    }
    Eigen::VectorXf mean = (sum / static_cast<double>(num_samples)).cast<float>();
    return WLatent(std::vector<float>(mean.data(), mean.data() + mean.size()));
}

std::vector<double> ToyGenerator::synthesize_f64(const std::vector<std::vector<double>>& s) const {
    require(static_cast<int>(s.size()) == config_.n_layers, "synthesize_f64: layer count mismatch");
    const int pixels = config_.height * config_.width * 3;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(pixels);
    for (int i = 0; i < config_.n_layers; ++i) {
        Eigen::Map<const Eigen::VectorXd> si(s[i].data(), static_cast<Eigen::Index>(s[i].size()));
        acc += (synth_weight_[i].cast<double>() * si + synth_bias_[i].cast<double>()).array().tanh().matrix();
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(config_.n_layers));
    std::vector<double> out(pixels);
    for (int p = 0; p < pixels; ++p) out[p] = std::tanh(scale * acc(p));
    return out;
}

std::vector<double> ToyGenerator::synthesize_jvp_f64(const std::vector<std::vector<double>>& s,
                                                     const std::vector<std::vector<double>>& tangent) const {
    require(static_cast<int>(s.size()) == config_.n_layers && tangent.size() == s.size(),
            "synthesize_jvp_f64: layer count mismatch");
    const int pixels = config_.height * config_.width * 3;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(pixels);
    Eigen::VectorXd dacc = Eigen::VectorXd::Zero(pixels);
    for (int i = 0; i < config_.n_layers; ++i) {
        Eigen::Map<const Eigen::VectorXd> si(s[i].data(), static_cast<Eigen::Index>(s[i].size()));
        Eigen::Map<const Eigen::VectorXd> ti(tangent[i].data(), static_cast<Eigen::Index>(tangent[i].size()));
        const Eigen::MatrixXd u = synth_weight_[i].cast<double>();
        Eigen::ArrayXd h = (u * si + synth_bias_[i].cast<double>()).array().tanh();
        acc += h.matrix();
        dacc += ((1.0 - h.square()) * (u * ti).array()).matrix();
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(config_.n_layers));
    std::vector<double> out(pixels);
    for (int p = 0; p < pixels; ++p) {
        const double y = std::tanh(scale * acc(p));
        out[p] = (1.0 - y * y) * scale * dacc(p);
    }
    return out;
}

std::vector<float> ToyGenerator::parameter_snapshot() const {
    std::vector<float> out;
    auto append = [&out](const auto& m) { out.insert(out.end(), m.data(), m.data() + m.size()); };
    append(map_weight_);
    append(map_bias_);
    for (const auto& m : style_weight_) append(m);
    for (const auto& m : style_bias_) append(m);
    for (const auto& m : synth_weight_) append(m);
    for (const auto& m : synth_bias_) append(m);
    return out;
}

GeneratorSample CountingGenerator::sample(std::span<const float> z) const {
    ++samples_;
    return inner_->sample(z);
}

SBundle CountingGenerator::styles_of(const WLatent& w) const {
    ++styles_;
    return inner_->styles_of(w);
}

Image CountingGenerator::synthesize_from_s(const SBundle& s) const {
    ++synth_;
    return inner_->synthesize_from_s(s);
}

WLatent CountingGenerator::average_w(int num_samples) const {
    ++averages_;
    return inner_->average_w(num_samples);
}

void CountingGenerator::reset_counters() {
    samples_ = 0;
    styles_ = 0;
    synth_ = 0;
    averages_ = 0;
}

} // namespace csla
