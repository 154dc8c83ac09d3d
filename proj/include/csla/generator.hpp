#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csla/rng.hpp"
#include "csla/spaces.hpp"

namespace csla {

struct GeneratorConfig {
    int d_z = 16;
    int d_w = 32;
    int n_layers = 4;
    std::vector<int> dim_s{32, 32, 16, 16};
    int height = 32;
    int width = 32;
    std::uint64_t seed = 0;

    static GeneratorConfig toy() { return {}; }
    // Layer layout of a 1024x1024 StyleGAN2: 26 style vectors, 9088 channels.
    static GeneratorConfig stylegan2_1024();

    void validate() const;
    bool operator==(const GeneratorConfig&) const = default;
};

struct GeneratorSample {
    WLatent w;
    SBundle s;
    Image image;
};

// Frozen style-based generator. Implementations are immutable after
// construction and deterministic in their inputs.
class GeneratorAdapter {
public:
    virtual ~GeneratorAdapter() = default;

    virtual const GeneratorConfig& config() const = 0;
    virtual GeneratorSample sample(std::span<const float> z) const = 0;
    virtual SBundle styles_of(const WLatent& w) const = 0;
    virtual Image synthesize_from_s(const SBundle& s) const = 0;
    virtual WLatent average_w(int num_samples) const = 0;

    virtual std::string model_id() const = 0;

protected:
    void check_z(std::span<const float> z) const;
    void check_w(const WLatent& w) const;
    void check_s(const SBundle& s) const;
};

// Seeded random generator used for weight-free testing:
//   w   = M z + c
//   s_i = A_i w + b_i
//   I   = tanh( (1/sqrt(n)) * sum_i tanh(U_i s_i + d_i) )
class ToyGenerator final : public GeneratorAdapter {
public:
    explicit ToyGenerator(GeneratorConfig config = GeneratorConfig::toy());

    const GeneratorConfig& config() const override { return config_; }
    GeneratorSample sample(std::span<const float> z) const override;
    SBundle styles_of(const WLatent& w) const override;
    Image synthesize_from_s(const SBundle& s) const override;
    WLatent average_w(int num_samples) const override;
    std::string model_id() const override;

    // Stream used by average_w; exposed so callers can reproduce its draws.
    static Rng average_rng(const GeneratorConfig& config);

    const Eigen::MatrixXf& mapping_weight() const { return map_weight_; }
    const Eigen::VectorXf& mapping_bias() const { return map_bias_; }
    const Eigen::VectorXf& style_bias(int layer) const { return style_bias_.at(layer); }

    // Double-precision synthesis and its forward-mode derivative, for
    // gradient verification.
    std::vector<double> synthesize_f64(const std::vector<std::vector<double>>& s) const;
    std::vector<double> synthesize_jvp_f64(const std::vector<std::vector<double>>& s,
                                           const std::vector<std::vector<double>>& tangent) const;

    // Copy of every frozen parameter, in a fixed order.
    std::vector<float> parameter_snapshot() const;

private:
    WLatent map(std::span<const float> z) const;

    GeneratorConfig config_;
    Eigen::MatrixXf map_weight_;
    Eigen::VectorXf map_bias_;
    std::vector<Eigen::MatrixXf> style_weight_;
    std::vector<Eigen::VectorXf> style_bias_;
    std::vector<Eigen::MatrixXf> synth_weight_;
    std::vector<Eigen::VectorXf> synth_bias_;
};

// Decorator that counts calls into a wrapped adapter. Used to verify the
// per-iteration forward-pass budget of training.
class CountingGenerator final : public GeneratorAdapter {
public:
    explicit CountingGenerator(std::shared_ptr<const GeneratorAdapter> inner) : inner_(std::move(inner)) {}

    const GeneratorConfig& config() const override { return inner_->config(); }
    GeneratorSample sample(std::span<const float> z) const override;
    SBundle styles_of(const WLatent& w) const override;
    Image synthesize_from_s(const SBundle& s) const override;
    WLatent average_w(int num_samples) const override;
    std::string model_id() const override { return inner_->model_id(); }

    std::uint64_t sample_calls() const { return samples_.load(); }
    std::uint64_t styles_calls() const { return styles_.load(); }
    std::uint64_t synthesize_calls() const { return synth_.load(); }
    std::uint64_t average_calls() const { return averages_.load(); }
    void reset_counters();

private:
    std::shared_ptr<const GeneratorAdapter> inner_;
    mutable std::atomic<std::uint64_t> samples_{0};
    mutable std::atomic<std::uint64_t> styles_{0};
    mutable std::atomic<std::uint64_t> synth_{0};
    mutable std::atomic<std::uint64_t> averages_{0};
};

} // namespace csla
