#include "csla/objective.hpp"

#include <algorithm>
#include <cmath>

namespace csla {

template <typename T>
ResidualTerms<T> residual_terms(const VecRef<T>& x, const VecRef<T>& y, T abs_scale, T dir_scale, VecT<T>* grad) {
    require(x.size() == y.size() && x.size() > 0, "residual_terms: shape mismatch (" + std::to_string(x.size()) +
                                                      ",) vs (" + std::to_string(y.size()) + ",)");
    ResidualTerms<T> out;
    const T inv_d = T(1) / static_cast<T>(x.size());
    const VecT<T> diff = x - y;
    out.abs = diff.cwiseAbs().sum() * inv_d;

    const T nx = x.norm();
    const T ny = y.norm();
    if (nx < T(kDegenerateNormEps) || ny < T(kDegenerateNormEps)) {
        out.degenerate = true;
    } else {
        const T dot = x.dot(y);
        out.dir = std::max(T(0), T(1) - dot / (nx * ny));  // rounding can push cos past 1
    }

    if (grad) {
        require(grad->size() == x.size(), "residual_terms: gradient buffer shape mismatch");
        if (abs_scale != T(0)) {
            const T s = abs_scale * inv_d;
            *grad += diff.unaryExpr([s](T v) { return v > T(0) ? s : (v < T(0) ? -s : T(0)); });
        }
        if (!out.degenerate && dir_scale != T(0)) {
            const T dot = x.dot(y);
            const T inv = T(1) / (nx * ny);
            *grad -= dir_scale * (y * inv - x * (dot * inv / (nx * nx)));
        }
    }
    return out;
}

double direction_loss(std::span<const float> x, std::span<const float> y, bool* degenerate) {
    require(x.size() == y.size(), "direction_loss: shape mismatch " + shape_string(x) + " vs " + shape_string(y));
    require(!x.empty(), "direction_loss: empty vectors");
    const Eigen::Map<const VecT<float>> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::Map<const VecT<float>> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    const auto t = residual_terms<double>(xv.cast<double>(), yv.cast<double>());
    if (degenerate) *degenerate = t.degenerate;
    return t.dir;
}

double loss_w(const WLatent& delta_w, const WLatent& delta_w_trg, const LossWeights& weights, LossReport* parts) {
    require(delta_w.size() == delta_w_trg.size(), "loss_w: shape mismatch " + shape_string(delta_w.view()) + " vs " +
                                                       shape_string(delta_w_trg.view()));
    const Eigen::Map<const VecT<float>> x(delta_w.values.data(), static_cast<Eigen::Index>(delta_w.size()));
    const Eigen::Map<const VecT<float>> y(delta_w_trg.values.data(), static_cast<Eigen::Index>(delta_w_trg.size()));
    const auto t = residual_terms<double>(x.cast<double>(), y.cast<double>());
    const double l = t.abs + weights.lambda_w_dir * t.dir;
    if (parts) {
        parts->l_w_abs = t.abs;
        parts->l_w_dir = t.dir;
        parts->l_w = l;
        parts->degenerate_norms += t.degenerate ? 1 : 0;
    }
    return l;
}

double loss_s(const SBundle& delta_s, const SBundle& delta_s_trg, const LossWeights& weights, LossReport* parts) {
    require_same_shape(delta_s, delta_s_trg, "loss_s");
    require(delta_s.n_layers() > 0, "loss_s: empty bundle");
    double abs_sum = 0;
    double dir_sum = 0;
    int degenerate = 0;
    for (std::size_t i = 0; i < delta_s.n_layers(); ++i) {
        const auto& a = delta_s.layers[i];
        const auto& b = delta_s_trg.layers[i];
        const Eigen::Map<const VecT<float>> x(a.data(), static_cast<Eigen::Index>(a.size()));
        const Eigen::Map<const VecT<float>> y(b.data(), static_cast<Eigen::Index>(b.size()));
        const auto t = residual_terms<double>(x.cast<double>(), y.cast<double>());
        abs_sum += t.abs;
        dir_sum += t.dir;
        degenerate += t.degenerate ? 1 : 0;
    }
    const double n = static_cast<double>(delta_s.n_layers());
    const double l = (abs_sum + weights.lambda_s_dir * dir_sum) / n;
    if (parts) {
        parts->l_s_abs = abs_sum / n;
        parts->l_s_dir = dir_sum / n;
        parts->l_s = l;
        parts->degenerate_norms += degenerate;
    }
    return l;
}

double total_loss(double l_w, double l_s, const LossWeights& weights) { return l_w + weights.lambda_s * l_s; }

template <typename T>
T loss_w_batch(const MatT<T>& pred, const MatT<T>& target, std::span<const T> column_weights,
               const LossWeights& weights, MatT<T>* grad, LossReport* parts) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols(), "loss_w_batch: shape mismatch");
    require(static_cast<Eigen::Index>(column_weights.size()) == pred.cols(), "loss_w_batch: weight count mismatch");
    const T lambda = static_cast<T>(weights.lambda_w_dir);
    T abs_acc = 0;
    T dir_acc = 0;
    int degenerate = 0;
    VecT<T> g(pred.rows());
    for (Eigen::Index b = 0; b < pred.cols(); ++b) {
        const T cw = column_weights[static_cast<std::size_t>(b)];
        if (cw == T(0)) continue;
        g.setZero();
        const auto t = residual_terms<T>(pred.col(b), target.col(b), cw, cw * lambda, grad ? &g : nullptr);
        if (grad) grad->col(b) += g;
        abs_acc += cw * t.abs;
        dir_acc += cw * t.dir;
        degenerate += t.degenerate ? 1 : 0;
    }
    const T l = abs_acc + lambda * dir_acc;
    if (parts) {
        parts->l_w_abs = static_cast<double>(abs_acc);
        parts->l_w_dir = static_cast<double>(dir_acc);
        parts->l_w = static_cast<double>(l);
        parts->degenerate_norms += degenerate;
    }
    return l;
}

template <typename T>
T loss_s_column(const std::vector<MatT<T>>& pred, const std::vector<MatT<T>>& target, Eigen::Index col,
                const LossWeights& weights, T scale, std::vector<MatT<T>>* grad, LossReport* parts) {
    require(pred.size() == target.size() && !pred.empty(), "loss_s_column: layer count mismatch");
    const T n = static_cast<T>(pred.size());
    const T lambda = static_cast<T>(weights.lambda_s_dir);
    T abs_acc = 0;
    T dir_acc = 0;
    int degenerate = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        require(pred[i].rows() == target[i].rows(), "loss_s_column: layer shape mismatch");
        VecT<T> g;
        if (grad) g = VecT<T>::Zero(pred[i].rows());
        const auto t = residual_terms<T>(pred[i].col(col), target[i].col(col), scale / n, scale * lambda / n,
                                         grad ? &g : nullptr);
        if (grad) (*grad)[i].col(col) += g;
        abs_acc += t.abs;
        dir_acc += t.dir;
        degenerate += t.degenerate ? 1 : 0;
    }
    const T l = (abs_acc + lambda * dir_acc) / n;
    if (parts) {
        parts->l_s_abs = static_cast<double>(abs_acc / n);
        parts->l_s_dir = static_cast<double>(dir_acc / n);
        parts->l_s = static_cast<double>(l);
        parts->degenerate_norms += degenerate;
    }
    return l;
}

template <typename T>
LossReport mapper_objective(const MapperStackT<T>& stack, const ObjectiveBatch<T>& batch, const LossWeights& weights,
                            MapperStackT<T>* grad, MatT<T>* d_delta_f) {
    const Eigen::Index ncols = batch.delta_f.cols();
    const int n = stack.n_layers();
    const auto nb = static_cast<Eigen::Index>(batch.main_col.size());
    require(batch.delta_w_trg.cols() == ncols && static_cast<Eigen::Index>(batch.column_weight.size()) == ncols,
            "mapper_objective: column count mismatch");
    require(nb >= 1 && static_cast<int>(batch.delta_s_trg.size()) == n, "mapper_objective: bad s targets");

    typename MapperStackT<T>::WTape w_tape;
    const MatT<T> delta_w = stack.map_w(batch.delta_f, grad ? &w_tape : nullptr);
    LossReport report;
    MatT<T> d_delta_w;
    if (grad) d_delta_w = MatT<T>::Zero(delta_w.rows(), ncols);
    loss_w_batch<T>(delta_w, batch.delta_w_trg, batch.column_weight, weights, grad ? &d_delta_w : nullptr, &report);

    MatT<T> main_w(delta_w.rows(), nb);
    for (Eigen::Index b = 0; b < nb; ++b) main_w.col(b) = delta_w.col(batch.main_col[b]);
    typename MapperStackT<T>::STape s_tape;
    const auto delta_s = stack.map_s(main_w, grad ? &s_tape : nullptr);
    std::vector<MatT<T>> d_delta_s;
    if (grad)
        for (int i = 0; i < n; ++i) d_delta_s.push_back(MatT<T>::Zero(delta_s[i].rows(), nb));
    const T s_scale = static_cast<T>(weights.lambda_s) / static_cast<T>(nb);
    double l_s = 0, l_s_abs = 0, l_s_dir = 0;
    for (Eigen::Index b = 0; b < nb; ++b) {
        LossReport part;
        loss_s_column<T>(delta_s, batch.delta_s_trg, b, weights, s_scale, grad ? &d_delta_s : nullptr, &part);
        l_s += part.l_s;
        l_s_abs += part.l_s_abs;
        l_s_dir += part.l_s_dir;
        report.degenerate_norms += part.degenerate_norms;
    }
    report.l_s = l_s / static_cast<double>(nb);
    report.l_s_abs = l_s_abs / static_cast<double>(nb);
    report.l_s_dir = l_s_dir / static_cast<double>(nb);
    report.total = total_loss(report.l_w, report.l_s, weights);

    if (grad && std::isfinite(report.total)) {
        const MatT<T> d_main_w = stack.backward_s(s_tape, d_delta_s, *grad);
        for (Eigen::Index b = 0; b < nb; ++b) d_delta_w.col(batch.main_col[b]) += d_main_w.col(b);
        const MatT<T> d_f = stack.backward_w(w_tape, d_delta_w, *grad);
        if (d_delta_f) *d_delta_f += d_f;
    }
    return report;
}

template ResidualTerms<float> residual_terms<float>(const VecRef<float>&, const VecRef<float>&, float, float,
                                                    VecT<float>*);
template ResidualTerms<double> residual_terms<double>(const VecRef<double>&, const VecRef<double>&, double, double,
                                                      VecT<double>*);
template float loss_w_batch<float>(const MatT<float>&, const MatT<float>&, std::span<const float>,
                                   const LossWeights&, MatT<float>*, LossReport*);
template double loss_w_batch<double>(const MatT<double>&, const MatT<double>&, std::span<const double>,
                                     const LossWeights&, MatT<double>*, LossReport*);
template float loss_s_column<float>(const std::vector<MatT<float>>&, const std::vector<MatT<float>>&, Eigen::Index,
                                    const LossWeights&, float, std::vector<MatT<float>>*, LossReport*);
template double loss_s_column<double>(const std::vector<MatT<double>>&, const std::vector<MatT<double>>&,
                                      Eigen::Index, const LossWeights&, double, std::vector<MatT<double>>*,
                                      LossReport*);

template LossReport mapper_objective<float>(const MapperStackT<float>&, const ObjectiveBatch<float>&,
                                            const LossWeights&, MapperStackT<float>*, MatT<float>*);
template LossReport mapper_objective<double>(const MapperStackT<double>&, const ObjectiveBatch<double>&,
                                             const LossWeights&, MapperStackT<double>*, MatT<double>*);

} // namespace csla
