#include "csla/encoder.hpp"

#include <cctype>
#include <cmath>

#include "csla/imaging.hpp"
#include "csla/rng.hpp"

namespace csla {

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x100000001b3ULL);
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

void EncoderConfig::validate() const {
    require(d_clip >= 1, "encoder config: d_clip must be >= 1");
    require(vocab >= 1, "encoder config: vocab must be >= 1");
    require(pool >= 1 && height % pool == 0 && width % pool == 0,
            "encoder config: resolution must be divisible by pool");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

ToyEncoder::ToyEncoder(EncoderConfig config) : config_(config) {
    config_.validate();
    Rng rng(config_.seed);
    const int feats = (config_.height / config_.pool) * (config_.width / config_.pool) * 3;
    const float scale = 1.0f / std::sqrt(static_cast<float>(feats));
    proj_.resize(config_.d_clip, feats);
    for (int r = 0; r < config_.d_clip; ++r)
        for (int c = 0; c < feats; ++c) proj_(r, c) = static_cast<float>(rng.normal()) * scale;
    proj_bias_.resize(config_.d_clip);
    for (int r = 0; r < config_.d_clip; ++r) proj_bias_(r) = static_cast<float>(rng.normal()) * scale;
    buckets_.resize(config_.d_clip, config_.vocab);
    for (int b = 0; b < config_.vocab; ++b)
        for (int r = 0; r < config_.d_clip; ++r) buckets_(r, b) = static_cast<float>(rng.normal()) * 0.5f;
}

std::string ToyEncoder::model_id() const { return "toy-encoder/seed=" + std::to_string(config_.seed); }

std::size_t ToyEncoder::bucket_of(std::string_view token) const {
    return static_cast<std::size_t>(fnv1a(token, config_.seed) % static_cast<std::uint64_t>(config_.vocab));
}

Eigen::VectorXf ToyEncoder::features(const Image& image) const {
    const int p = config_.pool;
    const int oh = config_.height / p;
    const int ow = config_.width / p;
    Eigen::VectorXf x(oh * ow * 3);
    const float inv = 1.0f / static_cast<float>(p * p);
    for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx)
            for (int c = 0; c < 3; ++c) {
                float acc = 0.0f;
                for (int dy = 0; dy < p; ++dy)
                    for (int dx = 0; dx < p; ++dx) acc += image.at(y * p + dy, xx * p + dx, c);
                x((y * ow + xx) * 3 + c) = acc * inv;
            }
    return x;
}

Embedding ToyEncoder::finish(Eigen::VectorXf v) const {
    if (config_.normalize) {
        const float n = v.norm();
        if (n > 0.0f) v /= n;
    }
    return Embedding(std::vector<float>(v.data(), v.data() + v.size()));
}

Embedding ToyEncoder::encode_image(const Image& image) const {
    require_valid(image);
    const bool matches = image.height == config_.height && image.width == config_.width;
    require(matches || config_.resize, "encode_image: expected " + std::to_string(config_.height) + "x" +
                                           std::to_string(config_.width) + " image");
    const Image& input = matches ? image : resize_bilinear(image, config_.height, config_.width);
    Eigen::VectorXf pre = proj_ * features(input) + proj_bias_;
    return finish(pre.array().tanh().matrix());
}

Embedding ToyEncoder::encode_text(std::string_view text) const {
    const auto tokens = tokenize(text);
    require(!tokens.empty(), "encode_text: text must contain at least one token");
    Eigen::VectorXf sum = Eigen::VectorXf::Zero(config_.d_clip);
    for (const auto& t : tokens) sum += buckets_.col(static_cast<Eigen::Index>(bucket_of(t)));
    return finish(sum / static_cast<float>(tokens.size()));
}

Eigen::VectorXd ToyEncoder::features_f64(const std::vector<double>& pixels) const {
    require(pixels.size() == static_cast<std::size_t>(config_.height) * config_.width * 3,
            "encode_pixels_f64: pixel count mismatch");
    const int p = config_.pool;
    const int oh = config_.height / p;
    const int ow = config_.width / p;
    Eigen::VectorXd x(oh * ow * 3);
    for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int dy = 0; dy < p; ++dy)
                    for (int dx = 0; dx < p; ++dx)
                        acc += pixels[((static_cast<std::size_t>(y) * p + dy) * config_.width + xx * p + dx) * 3 + c];
                x((y * ow + xx) * 3 + c) = acc / (p * p);
            }
    return x;
}

std::vector<double> ToyEncoder::encode_pixels_f64(const std::vector<double>& pixels) const {
    Eigen::VectorXd u = (proj_.cast<double>() * features_f64(pixels) + proj_bias_.cast<double>()).array().tanh();
    if (config_.normalize) u /= u.norm();
    return {u.data(), u.data() + u.size()};
}

std::vector<double> ToyEncoder::encode_pixels_jvp_f64(const std::vector<double>& pixels,
                                                      const std::vector<double>& tangent) const {
    const Eigen::MatrixXd proj = proj_.cast<double>();
    Eigen::ArrayXd u = (proj * features_f64(pixels) + proj_bias_.cast<double>()).array().tanh();
    Eigen::VectorXd du = ((1.0 - u.square()) * (proj * features_f64(tangent)).array()).matrix();
    if (config_.normalize) {
        const double n = u.matrix().norm();
        const Eigen::VectorXd y = u.matrix() / n;
        du = (du - y * y.dot(du)) / n;
    }
    return {du.data(), du.data() + du.size()};
}

std::vector<float> ToyEncoder::parameter_snapshot() const {
    std::vector<float> out;
    auto append = [&out](const auto& m) { out.insert(out.end(), m.data(), m.data() + m.size()); };
    append(proj_);
    append(proj_bias_);
    append(buckets_);
    return out;
}

Embedding CountingEncoder::encode_image(const Image& image) const {
    ++images_;
    return inner_->encode_image(image);
}

Embedding CountingEncoder::encode_text(std::string_view text) const {
    ++texts_;
    return inner_->encode_text(text);
}

void CountingEncoder::reset_counters() {
    images_ = 0;
    texts_ = 0;
}

} // namespace csla
