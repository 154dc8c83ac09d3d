#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "csla/mappers.hpp"
#include "csla/spaces.hpp"

namespace csla {

struct LossWeights {
    double lambda_s = 10.0;
    double lambda_w_dir = 10.0;
    double lambda_s_dir = 1.0;

    bool operator==(const LossWeights&) const = default;
};

/// Diagnostic decomposition of one evaluation of the objective.
///   l_w   = l_w_abs + lambda_w_dir * l_w_dir
///   l_s   = l_s_abs + lambda_s_dir * l_s_dir   (both averaged over layers)
///   total = l_w + lambda_s * l_s
struct LossReport {
    double total = 0;
    double l_w = 0;
    double l_s = 0;
    double l_w_dir = 0;
    double l_s_dir = 0;
    double l_w_abs = 0;
    double l_s_abs = 0;
    int degenerate_norms = 0;
};

// Direction term is skipped (contributes 0, flagged) below this norm.
inline constexpr double kDegenerateNormEps = 1e-8;

template <typename T>
using VecRef = Eigen::Ref<const VecT<T>>;

template <typename T>
struct ResidualTerms {
    T abs = 0;  // mean absolute error
    T dir = 0;  // 1 - cosine
    bool degenerate = false;
};

// Mean-absolute and direction terms of `x` against target `y`. When `grad`
// is given, abs_scale * d(abs)/dx + dir_scale * d(dir)/dx is added to it.
// The absolute-value subgradient at zero is zero.
template <typename T>
ResidualTerms<T> residual_terms(const VecRef<T>& x, const VecRef<T>& y, T abs_scale = T(0), T dir_scale = T(0),
                                VecT<T>* grad = nullptr);

/// 1 - cos(x, y). Returns 0 and sets `degenerate` when either norm is tiny.
double direction_loss(std::span<const float> x, std::span<const float> y, bool* degenerate = nullptr);

double loss_w(const WLatent& delta_w, const WLatent& delta_w_trg, const LossWeights& weights = {},
              LossReport* parts = nullptr);
double loss_s(const SBundle& delta_s, const SBundle& delta_s_trg, const LossWeights& weights = {},
              LossReport* parts = nullptr);
double total_loss(double l_w, double l_s, const LossWeights& weights = {});

// Loss on w-space columns with per-column weights (weights sum to 1 for a
// mean). Adds weighted gradients to `grad` (same shape as pred) if given.
template <typename T>
T loss_w_batch(const MatT<T>& pred, const MatT<T>& target, std::span<const T> column_weights,
               const LossWeights& weights, MatT<T>* grad, LossReport* parts);

// Per-layer s-space loss averaged over layers, for a single column `col`
// of each layer matrix. Gradients are scaled by `scale` and added to `grad`.
template <typename T>
T loss_s_column(const std::vector<MatT<T>>& pred, const std::vector<MatT<T>>& target, Eigen::Index col,
                const LossWeights& weights, T scale, std::vector<MatT<T>>* grad, LossReport* parts);

// One optimization step's worth of residuals. FC_w sees every column of
// `delta_f`; the s path sees only the `main_col` columns (one per sample),
// against `delta_s_trg` (layer i is dim_s[i] x batch).
template <typename T>
struct ObjectiveBatch {
    MatT<T> delta_f;
    MatT<T> delta_w_trg;
    std::vector<T> column_weight;
    std::vector<Eigen::Index> main_col;
    std::vector<MatT<T>> delta_s_trg;
};

// Forward through the mappers and evaluate the total loss: weighted column
// mean of the w loss plus lambda_s times the batch mean of the s loss.
// With `grad`, parameter gradients are added into it (and the input
// gradient into `d_delta_f` if given).
template <typename T>
LossReport mapper_objective(const MapperStackT<T>& stack, const ObjectiveBatch<T>& batch, const LossWeights& weights,
                            MapperStackT<T>* grad = nullptr, MatT<T>* d_delta_f = nullptr);

} // namespace csla
