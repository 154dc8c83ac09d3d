#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csla/spaces.hpp"

namespace csla {

template <typename T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class AsmActivation {
    sigmoid,  // alpha, beta in (0, 1)
    tanh,     // experimental: alpha = 1 + tanh in (0, 2), beta = tanh in (-1, 1)
};

struct MapperConfig {
    int fc_w_layers = 8;
    int fc_w_hidden = 0;  // 0 means d_w
    int fc_s_layers = 2;
    int fc_s_hidden = 0;  // 0 means d_w
    int asm_hidden = 0;   // 0 means d_w
    double lrelu_slope = 0.2;
    bool pixel_norm = false;
    bool asm_enabled = true;
    AsmActivation asm_activation = AsmActivation::sigmoid;
    bool learnable_center = false;
    double fc_s_output_scale = 0.01;
    std::uint64_t seed = 7;

    void validate() const;
    bool operator==(const MapperConfig&) const = default;
};

/// Per-layer scalar scale and shift signals produced by the style-mixing net.
struct AsmSignals {
    std::vector<float> alpha;
    std::vector<float> beta;
};

/// Scales layer i of `delta_s` by alpha_i and shifts it by beta_i.
SBundle apply_asm(const SBundle& delta_s, const AsmSignals& signals);

enum class OutputActivation { linear, sigmoid, tanh };

template <typename T>
struct DenseLayer {
    MatT<T> weight;  // out x in
    VecT<T> bias;
};

// Fully connected stack, leaky-ReLU between layers. Batches are columns.
template <typename T>
struct Mlp {
    std::vector<DenseLayer<T>> layers;
    OutputActivation output = OutputActivation::linear;
    T slope = T(0.2);

    struct Tape {
        std::vector<MatT<T>> inputs;
        std::vector<MatT<T>> pre;
        MatT<T> out;
    };

    int in_dim() const { return static_cast<int>(layers.front().weight.cols()); }
    int out_dim() const { return static_cast<int>(layers.back().weight.rows()); }

    MatT<T> forward(const MatT<T>& x, Tape* tape = nullptr) const;
    // Accumulates parameter gradients into `grad` (same structure) and
    // returns the gradient with respect to the input.
    MatT<T> backward(const Tape& tape, const MatT<T>& d_out, Mlp& grad) const;
};

template <typename T>
struct ParamView {
    std::string name;
    T* data;
    Eigen::Index rows;
    Eigen::Index cols;  // 1 for vectors
    bool is_vector;

    Eigen::Index size() const { return rows * cols; }
};

/// FC_w (embedding residual to w residual), one FC_s sub-network per style
/// layer, the adaptive style-mixing net, and the optional learnable center.
template <typename T>
class MapperStackT {
public:
    struct WTape {
        typename Mlp<T>::Tape fc;
    };
    struct STape {
        std::vector<typename Mlp<T>::Tape> fc_s;
        typename Mlp<T>::Tape asm_net;
        MatT<T> signals;  // 2n x B, empty if ASM is off
        std::vector<MatT<T>> raw;
    };

    MapperStackT() = default;
    static MapperStackT build(const MapperConfig& config, int d_clip, int d_w, std::vector<int> dim_s);

    const MapperConfig& config() const { return config_; }
    int d_clip() const { return d_clip_; }
    int d_w() const { return d_w_; }
    int n_layers() const { return static_cast<int>(dim_s_.size()); }
    const std::vector<int>& dim_s() const { return dim_s_; }
    bool asm_enabled() const { return config_.asm_enabled; }
    void set_asm_enabled(bool on) { config_.asm_enabled = on; }

    MatT<T> map_w(const MatT<T>& delta_f, WTape* tape = nullptr) const;
    std::vector<MatT<T>> map_s(const MatT<T>& delta_w, STape* tape = nullptr) const;
    // Runs the FC_s bank and modulates with the given 2n x B signals
    // (rows 0..n-1 alpha, n..2n-1 beta), bypassing the ASM net.
    std::vector<MatT<T>> map_s_with_signals(const MatT<T>& delta_w, const MatT<T>& signals) const;
    MatT<T> asm_signals(const MatT<T>& delta_w, typename Mlp<T>::Tape* tape = nullptr) const;

    MatT<T> backward_s(const STape& tape, const std::vector<MatT<T>>& d_delta_s, MapperStackT& grad) const;
    MatT<T> backward_w(const WTape& tape, const MatT<T>& d_delta_w, MapperStackT& grad) const;

    MapperStackT zeros_like() const;
    template <typename U>
    MapperStackT<U> cast() const;

    std::vector<ParamView<T>> parameters();
    std::vector<ParamView<const T>> parameters() const;
    std::size_t parameter_count() const;

    Mlp<T>& fc_w() { return fc_w_; }
    const Mlp<T>& fc_w() const { return fc_w_; }
    std::vector<Mlp<T>>& fc_s() { return fc_s_; }
    const std::vector<Mlp<T>>& fc_s() const { return fc_s_; }
    Mlp<T>& asm_net() { return asm_; }
    const Mlp<T>& asm_net() const { return asm_; }
    VecT<T>& center_bias() { return center_bias_; }
    const VecT<T>& center_bias() const { return center_bias_; }

    void zero_biases();

    // Single-sample float conveniences.
    WLatent map_w(const Embedding& delta_f) const requires std::is_same_v<T, float>;
    SBundle map_s(const WLatent& delta_w) const requires std::is_same_v<T, float>;
    AsmSignals asm_signals(const WLatent& delta_w) const requires std::is_same_v<T, float>;

    template <typename U>
    friend class MapperStackT;

private:
    MapperConfig config_;
    int d_clip_ = 0;
    int d_w_ = 0;
    std::vector<int> dim_s_;
    Mlp<T> fc_w_;
    std::vector<Mlp<T>> fc_s_;
    Mlp<T> asm_;
    VecT<T> center_bias_;
};

using MapperStack = MapperStackT<float>;

/// Parameter count of a stack without allocating it.
std::size_t mapper_parameter_count(const MapperConfig& config, int d_clip, int d_w, const std::vector<int>& dim_s);

template <typename T>
template <typename U>
MapperStackT<U> MapperStackT<T>::cast() const {
    auto cast_mlp = [](const Mlp<T>& m) {
        Mlp<U> out;
        out.output = m.output;
        out.slope = static_cast<U>(m.slope);
        for (const auto& l : m.layers) out.layers.push_back({l.weight.template cast<U>(), l.bias.template cast<U>()});
        return out;
    };
    MapperStackT<U> out;
    out.config_ = config_;
    out.d_clip_ = d_clip_;
    out.d_w_ = d_w_;
    out.dim_s_ = dim_s_;
    out.fc_w_ = cast_mlp(fc_w_);
    for (const auto& m : fc_s_) out.fc_s_.push_back(cast_mlp(m));
    out.asm_ = cast_mlp(asm_);
    out.center_bias_ = center_bias_.template cast<U>();
    return out;
}

extern template struct Mlp<float>;
extern template struct Mlp<double>;
extern template class MapperStackT<float>;
extern template class MapperStackT<double>;

} // namespace csla
