#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "csla/spaces.hpp"

namespace csla {

struct EncoderConfig {
    int d_clip = 64;
    int vocab = 4096;
    // Expected input resolution; other sizes are resampled when `resize` is set.
    int height = 32;
    int width = 32;
    int pool = 2;
    bool resize = true;
    // Unit-normalize embeddings. Off by default: residual norms carry signal.
    bool normalize = false;
    std::uint64_t seed = 1;

    static EncoderConfig toy() { return {}; }
    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

// Frozen vision-language encoder pair sharing one embedding space.
class EncoderAdapter {
public:
    virtual ~EncoderAdapter() = default;

    virtual int d_clip() const = 0;
    virtual Embedding encode_image(const Image& image) const = 0;
    virtual Embedding encode_text(std::string_view text) const = 0;
    virtual std::string model_id() const = 0;
};

// Lowercases and splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

// Image tower: box-downsample, frozen linear map, tanh.
// Text tower: hashed bag-of-tokens over frozen bucket embeddings. The two
// towers share no structure, so text/image agreement is not meaningful.
class ToyEncoder final : public EncoderAdapter {
public:
    explicit ToyEncoder(EncoderConfig config = EncoderConfig::toy());

    int d_clip() const override { return config_.d_clip; }
    Embedding encode_image(const Image& image) const override;
    Embedding encode_text(std::string_view text) const override;
    std::string model_id() const override;

    const EncoderConfig& config() const { return config_; }
    std::size_t bucket_of(std::string_view token) const;

    // Double-precision image path over already-resized pixels, and its
    // forward-mode derivative.
    std::vector<double> encode_pixels_f64(const std::vector<double>& pixels) const;
    std::vector<double> encode_pixels_jvp_f64(const std::vector<double>& pixels,
                                              const std::vector<double>& tangent) const;

    std::vector<float> parameter_snapshot() const;

private:
    Eigen::VectorXf features(const Image& image) const;
    Eigen::VectorXd features_f64(const std::vector<double>& pixels) const;
    Embedding finish(Eigen::VectorXf v) const;

    EncoderConfig config_;
    Eigen::MatrixXf proj_;
    Eigen::VectorXf proj_bias_;
    Eigen::MatrixXf buckets_;  // d_clip x vocab
};

class CountingEncoder final : public EncoderAdapter {
public:
    explicit CountingEncoder(std::shared_ptr<const EncoderAdapter> inner) : inner_(std::move(inner)) {}

    int d_clip() const override { return inner_->d_clip(); }
    Embedding encode_image(const Image& image) const override;
    Embedding encode_text(std::string_view text) const override;
    std::string model_id() const override { return inner_->model_id(); }

    std::uint64_t image_calls() const { return images_.load(); }
    std::uint64_t text_calls() const { return texts_.load(); }
    void reset_counters();

private:
    std::shared_ptr<const EncoderAdapter> inner_;
    mutable std::atomic<std::uint64_t> images_{0};
    mutable std::atomic<std::uint64_t> texts_{0};
};

} // namespace csla
