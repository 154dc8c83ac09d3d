#include <gtest/gtest.h>

#include <cmath>

#include "csla/objective.hpp"
#include "csla/rng.hpp"
#include "support.hpp"

using namespace csla;

namespace {
std::vector<float> v(std::initializer_list<float> x) { return x; }
}

TEST(DirectionLoss, Identities) {
    EXPECT_NEAR(direction_loss(v({0.3f, -2, 5}), v({0.3f, -2, 5})), 0.0, 1e-9);
    EXPECT_NEAR(direction_loss(v({1, 0}), v({-1, 0})), 2.0, 1e-9);
    EXPECT_NEAR(direction_loss(v({1, 0}), v({0, 1})), 1.0, 1e-9);
}

TEST(DirectionLoss, DegenerateNormFlagged) {
    bool degenerate = false;
    EXPECT_EQ(direction_loss(v({0, 0}), v({1, 0}), &degenerate), 0.0);
    EXPECT_TRUE(degenerate);
    degenerate = false;
    EXPECT_EQ(direction_loss(v({1, 0}), v({1e-10f, 0}), &degenerate), 0.0);
    EXPECT_TRUE(degenerate);
    degenerate = true;
    direction_loss(v({1, 0}), v({0, 1}), &degenerate);
    EXPECT_FALSE(degenerate);
}

TEST(DirectionLoss, LengthMismatch) { EXPECT_THROW(direction_loss(v({1}), v({1, 2})), ContractViolation); }

TEST(DirectionLoss, ScaleInvarianceAndSymmetry) {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.index(20);
        const auto x = rng.normal_vector(n), y = rng.normal_vector(n);
        const float c = static_cast<float>(std::exp(2.0 * rng.normal()));
        std::vector<float> cx(x);
        for (auto& e : cx) e *= c;
        const double l = direction_loss(x, y);
        EXPECT_NEAR(direction_loss(cx, y), l, 1e-6);
        EXPECT_NEAR(direction_loss(y, x), l, 1e-6);
        EXPECT_GE(l, 0.0);
        EXPECT_LE(l, 2.0);
    }
}

TEST(LossW, WorkedExample) {
    LossReport parts;
    EXPECT_NEAR(loss_w(WLatent(v({1, 0})), WLatent(v({0, 1})), {}, &parts), 11.0, 1e-9);
    EXPECT_NEAR(parts.l_w_abs, 1.0, 1e-12);
    EXPECT_NEAR(parts.l_w_dir, 1.0, 1e-12);
}

TEST(LossW, EqualInputsZero) {
    const WLatent x(v({0.5f, -1, 2}));
    EXPECT_EQ(loss_w(x, x), 0.0);
}

TEST(LossW, ScalingDoublesAbsTermOnly) {
    const WLatent a(v({1, 2, -1})), b(v({0.5f, -1, 3}));
    const WLatent a2(v({2, 4, -2})), b2(v({1, -2, 6}));
    LossReport p1, p2;
    loss_w(a, b, {}, &p1);
    loss_w(a2, b2, {}, &p2);
    EXPECT_NEAR(p2.l_w_abs, 2 * p1.l_w_abs, 1e-6);
    EXPECT_NEAR(p2.l_w_dir, p1.l_w_dir, 1e-6);
}

TEST(LossS, MeanOverLayers) {
    // Layer 0 loss 1 (abs 0, antiparallel... use pure abs terms), layer 1 loss 3.
    LossWeights w;
    w.lambda_s_dir = 0.0;
    const SBundle pred({{1}, {3, 3}});
    const SBundle trg({{0}, {0, 0}});
    EXPECT_NEAR(loss_s(pred, trg, w), 2.0, 1e-12);
}

TEST(LossS, EqualBundlesZero) {
    const SBundle s({{1, 2}, {3}});
    EXPECT_GE(loss_s(s, s), 0.0);
    EXPECT_LT(loss_s(s, s), 1e-12);
}

TEST(LossS, SingleLayerMatchesLossW) {
    Rng rng(12);
    const auto x = rng.normal_vector(6), y = rng.normal_vector(6);
    LossWeights w;
    w.lambda_s_dir = 3.5;
    LossWeights ww;
    ww.lambda_w_dir = 3.5;
    EXPECT_NEAR(loss_s(SBundle({x}), SBundle({y}), w), loss_w(WLatent(x), WLatent(y), ww), 1e-12);
}

TEST(LossS, ShapeMismatch) {
    using L = std::vector<std::vector<float>>;
    EXPECT_THROW(loss_s(SBundle(L{{1}}), SBundle(L{{1}, {2}})), ContractViolation);
}

TEST(TotalLoss, Combination) {
    EXPECT_NEAR(total_loss(0.5, 0.2), 2.5, 1e-12);
    EXPECT_EQ(total_loss(1.25, 0.0), 1.25);
    LossWeights w;
    w.lambda_s = 0;
    EXPECT_EQ(total_loss(1.25, 99.0, w), 1.25);
}

TEST(LossWeightsTest, Defaults) {
    const LossWeights w;
    EXPECT_EQ(w.lambda_s, 10.0);
    EXPECT_EQ(w.lambda_w_dir, 10.0);
    EXPECT_EQ(w.lambda_s_dir, 1.0);
}

TEST(LossReportTest, TotalReproducibleFromParts) {
    Rng rng(13);
    for (int t = 0; t < 50; ++t) {
        const WLatent a(rng.normal_vector(8)), b(rng.normal_vector(8));
        SBundle s1, s2;
        for (int d : {4, 3}) {
            s1.layers.push_back(rng.normal_vector(d));
            s2.layers.push_back(rng.normal_vector(d));
        }
        LossReport p;
        const LossWeights w;
        const double lw = loss_w(a, b, w, &p);
        const double ls = loss_s(s1, s2, w, &p);
        EXPECT_NEAR(p.l_w, p.l_w_abs + w.lambda_w_dir * p.l_w_dir, 1e-6 * std::abs(p.l_w));
        EXPECT_NEAR(p.l_s, p.l_s_abs + w.lambda_s_dir * p.l_s_dir, 1e-6 * std::abs(p.l_s));
        EXPECT_NEAR(total_loss(lw, ls, w), lw + 10 * ls, 1e-9);
    }
}

TEST(ObjectiveProperty, NonNegativeZeroIffEqual) {
    Rng rng(14);
    for (int t = 0; t < 100; ++t) {
        const WLatent a(rng.normal_vector(5)), b(rng.normal_vector(5));
        EXPECT_GT(loss_w(a, b), 0.0);
        EXPECT_GE(loss_w(a, a), 0.0);
        EXPECT_LT(loss_w(a, a), 1e-12);
    }
}

// Gradient of the loss with respect to predictions, against central
// differences in double precision.
TEST(ObjectiveGradient, ResidualTermsMatchFiniteDifferences) {
    Rng rng(15);
    int checked = 0;
    for (int t = 0; t < 60; ++t) {
        const int n = 2 + static_cast<int>(rng.index(10));
        VecT<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x(i) = rng.normal();
            y(i) = rng.normal();
        }
        const double as = 1.0 + rng.uniform(), ds = 10.0 * rng.uniform();
        VecT<double> g = VecT<double>::Zero(n);
        residual_terms<double>(x, y, as, ds, &g);
        const int k = static_cast<int>(rng.index(n));
        if (std::abs(x(k) - y(k)) < 1e-2) continue;  // MAE kink
        const double h = 1e-3;
        auto f = [&](double xv) {
            VecT<double> xx = x;
            xx(k) = xv;
            const auto r = residual_terms<double>(xx, y);
            return as * r.abs + ds * r.dir;
        };
        const double num = (f(x(k) + h) - f(x(k) - h)) / (2 * h);
        EXPECT_TRUE(support::fd_close(g(k), num)) << g(k) << " vs " << num;
        ++checked;
    }
    EXPECT_GE(checked, 40);
}

TEST(ObjectiveGradient, ZeroResidualHasZeroGradient) {
    VecT<double> x(3);
    x << 1, -2, 0.5;
    VecT<double> g = VecT<double>::Zero(3);
    residual_terms<double>(x, x, 1.0, 10.0, &g);
    EXPECT_NEAR(g.norm(), 0.0, 1e-12);
}

TEST(ObjectiveGradient, DegenerateTargetSkipsDirection) {
    VecT<double> x(2), y = VecT<double>::Zero(2);
    x << 1, 2;
    VecT<double> g = VecT<double>::Zero(2);
    const auto r = residual_terms<double>(x, y, 1.0, 10.0, &g);
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.dir, 0.0);
    EXPECT_NEAR(g(0), 0.5, 1e-12);  // d(MAE)/dx = sign / n
    EXPECT_NEAR(g(1), 0.5, 1e-12);
}

TEST(ObjectiveGradient, FullObjectiveMatchesFiniteDifferences) {
    const auto result = support::mapper_gradient_suite(21, 40);
    EXPECT_GE(result.checked(), 100);
    for (const auto& p : result.probes)
        if (!p.excluded) EXPECT_TRUE(p.ok) << p.name << ": " << p.analytic << " vs " << p.numeric;
}
