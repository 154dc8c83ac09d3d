#include "csla/mappers.hpp"

#include <cmath>

#include "csla/rng.hpp"

namespace csla {

void MapperConfig::validate() const {
    require(!pixel_norm, "mapper config: pixel normalization must stay disabled");
    require(fc_w_layers >= 1 && fc_s_layers >= 1, "mapper config: layer counts must be >= 1");
    require(fc_w_hidden >= 0 && fc_s_hidden >= 0 && asm_hidden >= 0, "mapper config: hidden sizes must be >= 0");
    require(lrelu_slope >= 0.0 && lrelu_slope < 1.0, "mapper config: leaky slope must lie in [0, 1)");
}

SBundle apply_asm(const SBundle& delta_s, const AsmSignals& signals) {
    require(signals.alpha.size() == delta_s.n_layers() && signals.beta.size() == delta_s.n_layers(),
            "apply_asm: " + std::to_string(delta_s.n_layers()) + " layers but " +
                std::to_string(signals.alpha.size()) + "/" + std::to_string(signals.beta.size()) + " signals");
    SBundle out = delta_s;
    for (std::size_t i = 0; i < out.layers.size(); ++i)
        for (auto& v : out.layers[i]) v = signals.alpha[i] * v + signals.beta[i];
    return out;
}

namespace {

template <typename T>
T activate(OutputActivation a, T x) {
    switch (a) {
        case OutputActivation::linear: return x;
        case OutputActivation::sigmoid: return T(1) / (T(1) + std::exp(-x));
        case OutputActivation::tanh: return std::tanh(x);
    }
    return x;
}

// Derivative expressed through the activation's output.
template <typename T>
T activate_grad(OutputActivation a, T y) {
    switch (a) {
        case OutputActivation::linear: return T(1);
        case OutputActivation::sigmoid: return y * (T(1) - y);
        case OutputActivation::tanh: return T(1) - y * y;
    }
    return T(1);
}

template <typename T>
DenseLayer<T> init_layer(Rng& rng, int in, int out, double extra_scale) {
    const double scale = extra_scale / std::sqrt(static_cast<double>(in));
    DenseLayer<T> l;
    l.weight.resize(out, in);
    for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) l.weight(r, c) = static_cast<T>(rng.normal() * scale);
    l.bias = VecT<T>::Zero(out);
    return l;
}

template <typename T>
Mlp<T> init_mlp(Rng& rng, int in, int hidden, int out, int depth, T slope, OutputActivation act,
                double last_scale) {
    Mlp<T> m;
    m.output = act;
    m.slope = slope;
    int cur = in;
    for (int j = 0; j < depth; ++j) {
        const bool last = j + 1 == depth;
        const int next = last ? out : hidden;
        m.layers.push_back(init_layer<T>(rng, cur, next, last ? last_scale : 1.0));
        cur = next;
    }
    return m;
}

template <typename T>
Mlp<T> zeros_mlp(const Mlp<T>& m) {
    Mlp<T> z = m;
    for (auto& l : z.layers) {
        l.weight.setZero();
        l.bias.setZero();
    }
    return z;
}

template <typename T, typename View>
void append_mlp_views(std::vector<View>& out, const std::string& prefix, auto& mlp) {
    for (std::size_t j = 0; j < mlp.layers.size(); ++j) {
        auto& l = mlp.layers[j];
        const std::string base = prefix + ".layer" + std::to_string(j);
        out.push_back({base + ".weight", l.weight.data(), l.weight.rows(), l.weight.cols(), false});
        out.push_back({base + ".bias", l.bias.data(), l.bias.rows(), 1, true});
    }
}

} // namespace

template <typename T>
MatT<T> Mlp<T>::forward(const MatT<T>& x, Tape* tape) const {
    MatT<T> h = x;
    if (tape) {
        tape->inputs.clear();
        tape->pre.clear();
    }
    for (std::size_t j = 0; j < layers.size(); ++j) {
        const auto& l = layers[j];
        MatT<T> z = l.weight * h;
        z.colwise() += l.bias;
        if (tape) {
            tape->inputs.push_back(std::move(h));
            tape->pre.push_back(z);
        }
        if (j + 1 == layers.size()) {
            h = z.unaryExpr([this](T v) { return activate(output, v); });
        } else {
            const T s = slope;
            h = z.unaryExpr([s](T v) { return v > T(0) ? v : s * v; });
        }
    }
    if (tape) tape->out = h;
    return h;
}

template <typename T>
MatT<T> Mlp<T>::backward(const Tape& tape, const MatT<T>& d_out, Mlp& grad) const {
    MatT<T> g = d_out.binaryExpr(tape.out, [this](T d, T y) { return d * activate_grad(output, y); });
    for (std::size_t jj = layers.size(); jj-- > 0;) {
        if (jj + 1 != layers.size()) {
            const T s = slope;
            g = g.binaryExpr(tape.pre[jj], [s](T d, T z) { return z > T(0) ? d : s * d; });
        }
        grad.layers[jj].weight.noalias() += g * tape.inputs[jj].transpose();
        grad.layers[jj].bias += g.rowwise().sum();
        g = (layers[jj].weight.transpose() * g).eval();
    }
    return g;
}

template <typename T>
MapperStackT<T> MapperStackT<T>::build(const MapperConfig& config, int d_clip, int d_w, std::vector<int> dim_s) {
    config.validate();
    require(d_clip >= 1 && d_w >= 1 && !dim_s.empty(), "MapperStack::build: invalid dimensions");
    MapperStackT s;
    s.config_ = config;
    s.d_clip_ = d_clip;
    s.d_w_ = d_w;
    s.dim_s_ = std::move(dim_s);
    const T slope = static_cast<T>(config.lrelu_slope);
    const int w_hidden = config.fc_w_hidden > 0 ? config.fc_w_hidden : d_w;
    const int s_hidden = config.fc_s_hidden > 0 ? config.fc_s_hidden : d_w;
    const int a_hidden = config.asm_hidden > 0 ? config.asm_hidden : d_w;
    const int n = static_cast<int>(s.dim_s_.size());
    Rng rng(config.seed);
    s.fc_w_ = init_mlp<T>(rng, d_clip, w_hidden, d_w, config.fc_w_layers, slope, OutputActivation::linear, 1.0);
    for (int i = 0; i < n; ++i)
        s.fc_s_.push_back(init_mlp<T>(rng, d_w, s_hidden, s.dim_s_[i], config.fc_s_layers, slope,
                                      OutputActivation::linear, config.fc_s_output_scale));
    const auto act = config.asm_activation == AsmActivation::sigmoid ? OutputActivation::sigmoid
                                                                     : OutputActivation::tanh;
    s.asm_ = init_mlp<T>(rng, d_w, a_hidden, 2 * n, 2, slope, act, 1.0);
    s.center_bias_ = config.learnable_center ? VecT<T>::Zero(d_clip) : VecT<T>();
    return s;
}

template <typename T>
MatT<T> MapperStackT<T>::map_w(const MatT<T>& delta_f, WTape* tape) const {
    require(delta_f.rows() == d_clip_, "map_w: input has " + std::to_string(delta_f.rows()) + " rows, expected " +
                                           std::to_string(d_clip_));
    if (center_bias_.size() > 0) {
        MatT<T> shifted = delta_f;
        shifted.colwise() += center_bias_;
        return fc_w_.forward(shifted, tape ? &tape->fc : nullptr);
    }
    return fc_w_.forward(delta_f, tape ? &tape->fc : nullptr);
}

template <typename T>
MatT<T> MapperStackT<T>::asm_signals(const MatT<T>& delta_w, typename Mlp<T>::Tape* tape) const {
    require(delta_w.rows() == d_w_, "asm_signals: input has " + std::to_string(delta_w.rows()) + " rows, expected " +
                                        std::to_string(d_w_));
    MatT<T> out = asm_.forward(delta_w, tape);
    if (config_.asm_activation == AsmActivation::tanh) out.topRows(n_layers()).array() += T(1);
    return out;
}

template <typename T>
std::vector<MatT<T>> MapperStackT<T>::map_s_with_signals(const MatT<T>& delta_w, const MatT<T>& signals) const {
    require(delta_w.rows() == d_w_, "map_s: input has " + std::to_string(delta_w.rows()) + " rows, expected " +
                                        std::to_string(d_w_));
    const int n = n_layers();
    require(signals.rows() == 2 * n && signals.cols() == delta_w.cols(), "map_s_with_signals: signal shape mismatch");
    std::vector<MatT<T>> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        MatT<T> raw = fc_s_[i].forward(delta_w);
        for (Eigen::Index b = 0; b < raw.cols(); ++b) {
            const T a = signals(i, b);
            const T c = signals(n + i, b);
            raw.col(b) = (raw.col(b) * a).array() + c;
        }
        out.push_back(std::move(raw));
    }
    return out;
}

template <typename T>
std::vector<MatT<T>> MapperStackT<T>::map_s(const MatT<T>& delta_w, STape* tape) const {
    require(delta_w.rows() == d_w_, "map_s: input has " + std::to_string(delta_w.rows()) + " rows, expected " +
                                        std::to_string(d_w_));
    const int n = n_layers();
    std::vector<MatT<T>> out;
    out.reserve(n);
    if (tape) {
        tape->fc_s.assign(n, {});
        tape->raw.clear();
        tape->signals.resize(0, 0);
    }
    for (int i = 0; i < n; ++i) out.push_back(fc_s_[i].forward(delta_w, tape ? &tape->fc_s[i] : nullptr));
    if (!config_.asm_enabled) return out;
    MatT<T> signals = asm_signals(delta_w, tape ? &tape->asm_net : nullptr);
    if (tape) {
        tape->raw = out;
        tape->signals = signals;
    }
    for (int i = 0; i < n; ++i)
        for (Eigen::Index b = 0; b < out[i].cols(); ++b) {
            const T a = signals(i, b);
            const T c = signals(n + i, b);
            out[i].col(b) = (out[i].col(b) * a).array() + c;
        }
    return out;
}

template <typename T>
MatT<T> MapperStackT<T>::backward_s(const STape& tape, const std::vector<MatT<T>>& d_delta_s,
                                    MapperStackT& grad) const {
    const int n = n_layers();
    require(static_cast<int>(d_delta_s.size()) == n, "backward_s: layer count mismatch");
    const Eigen::Index batch = d_delta_s.front().cols();
    MatT<T> d_w = MatT<T>::Zero(d_w_, batch);
    MatT<T> d_signals;
    if (config_.asm_enabled) d_signals = MatT<T>::Zero(2 * n, batch);
    for (int i = 0; i < n; ++i) {
        MatT<T> d_raw = d_delta_s[i];
        if (config_.asm_enabled) {
            for (Eigen::Index b = 0; b < batch; ++b) {
                d_signals(i, b) = d_delta_s[i].col(b).dot(tape.raw[i].col(b));
                d_signals(n + i, b) = d_delta_s[i].col(b).sum();
                d_raw.col(b) *= tape.signals(i, b);
            }
        }
        d_w += fc_s_[i].backward(tape.fc_s[i], d_raw, grad.fc_s_[i]);
    }
    if (config_.asm_enabled) d_w += asm_.backward(tape.asm_net, d_signals, grad.asm_);
    return d_w;
}

template <typename T>
MatT<T> MapperStackT<T>::backward_w(const WTape& tape, const MatT<T>& d_delta_w, MapperStackT& grad) const {
    MatT<T> d_f = fc_w_.backward(tape.fc, d_delta_w, grad.fc_w_);
    if (center_bias_.size() > 0) grad.center_bias_ += d_f.rowwise().sum();
    return d_f;
}

template <typename T>
MapperStackT<T> MapperStackT<T>::zeros_like() const {
    MapperStackT z = *this;
    z.fc_w_ = zeros_mlp(fc_w_);
    for (auto& m : z.fc_s_) m = zeros_mlp(m);
    z.asm_ = zeros_mlp(asm_);
    z.center_bias_.setZero();
    return z;
}

template <typename T>
void MapperStackT<T>::zero_biases() {
    auto zero = [](Mlp<T>& m) {
        for (auto& l : m.layers) l.bias.setZero();
    };
    zero(fc_w_);
    for (auto& m : fc_s_) zero(m);
    zero(asm_);
    center_bias_.setZero();
}

template <typename T>
std::vector<ParamView<T>> MapperStackT<T>::parameters() {
    std::vector<ParamView<T>> out;
    append_mlp_views<T>(out, "fc_w", fc_w_);
    for (std::size_t i = 0; i < fc_s_.size(); ++i) append_mlp_views<T>(out, "fc_s." + std::to_string(i), fc_s_[i]);
    append_mlp_views<T>(out, "asm", asm_);
    if (center_bias_.size() > 0) out.push_back({"center_bias", center_bias_.data(), center_bias_.rows(), 1, true});
    return out;
}

template <typename T>
std::vector<ParamView<const T>> MapperStackT<T>::parameters() const {
    std::vector<ParamView<const T>> out;
    append_mlp_views<T>(out, "fc_w", fc_w_);
    for (std::size_t i = 0; i < fc_s_.size(); ++i) append_mlp_views<T>(out, "fc_s." + std::to_string(i), fc_s_[i]);
    append_mlp_views<T>(out, "asm", asm_);
    if (center_bias_.size() > 0) out.push_back({"center_bias", center_bias_.data(), center_bias_.rows(), 1, true});
    return out;
}

template <typename T>
std::size_t MapperStackT<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += static_cast<std::size_t>(p.size());
    return n;
}

template <typename T>
WLatent MapperStackT<T>::map_w(const Embedding& delta_f) const requires std::is_same_v<T, float> {
    require(static_cast<int>(delta_f.size()) == d_clip_, "map_w: delta_f has length " +
                                                             std::to_string(delta_f.size()) + ", expected " +
                                                             std::to_string(d_clip_));
    const MatT<float> x = Eigen::Map<const VecT<float>>(delta_f.values.data(), d_clip_);
    const MatT<float> y = map_w(x);
    return WLatent(std::vector<float>(y.data(), y.data() + y.size()));
}

template <typename T>
SBundle MapperStackT<T>::map_s(const WLatent& delta_w) const requires std::is_same_v<T, float> {
    require(static_cast<int>(delta_w.size()) == d_w_, "map_s: delta_w has length " + std::to_string(delta_w.size()) +
                                                          ", expected " + std::to_string(d_w_));
    const MatT<float> x = Eigen::Map<const VecT<float>>(delta_w.values.data(), d_w_);
    SBundle s;
    for (const auto& layer : map_s(x)) s.layers.emplace_back(layer.data(), layer.data() + layer.size());
    return s;
}

template <typename T>
AsmSignals MapperStackT<T>::asm_signals(const WLatent& delta_w) const requires std::is_same_v<T, float> {
    require(static_cast<int>(delta_w.size()) == d_w_, "asm_signals: delta_w has length " +
                                                          std::to_string(delta_w.size()) + ", expected " +
                                                          std::to_string(d_w_));
    const MatT<float> x = Eigen::Map<const VecT<float>>(delta_w.values.data(), d_w_);
    const MatT<float> sig = asm_signals(x);
    AsmSignals out;
    const int n = n_layers();
    for (int i = 0; i < n; ++i) {
        out.alpha.push_back(sig(i, 0));
        out.beta.push_back(sig(n + i, 0));
    }
    return out;
}

std::size_t mapper_parameter_count(const MapperConfig& config, int d_clip, int d_w, const std::vector<int>& dim_s) {
    auto mlp = [](int in, int hidden, int out, int depth) {
        std::size_t n = 0;
        int cur = in;
        for (int j = 0; j < depth; ++j) {
            const int next = j + 1 == depth ? out : hidden;
            n += static_cast<std::size_t>(cur) * next + next;
            cur = next;
        }
        return n;
    };
    const int w_hidden = config.fc_w_hidden > 0 ? config.fc_w_hidden : d_w;
    const int s_hidden = config.fc_s_hidden > 0 ? config.fc_s_hidden : d_w;
    const int a_hidden = config.asm_hidden > 0 ? config.asm_hidden : d_w;
    std::size_t n = mlp(d_clip, w_hidden, d_w, config.fc_w_layers);
    for (int d : dim_s) n += mlp(d_w, s_hidden, d, config.fc_s_layers);
    n += mlp(d_w, a_hidden, 2 * static_cast<int>(dim_s.size()), 2);
    if (config.learnable_center) n += static_cast<std::size_t>(d_clip);
    return n;
}

template struct Mlp<float>;
template struct Mlp<double>;
template class MapperStackT<float>;
template class MapperStackT<double>;

} // namespace csla
