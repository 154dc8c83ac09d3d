#include <gtest/gtest.h>

#include <cmath>

#include "csla/generator.hpp"
#include "csla/mappers.hpp"
#include "csla/rng.hpp"
#include "support.hpp"

using namespace csla;

namespace {

MapperStack toy_stack(MapperConfig cfg = {}) { return MapperStack::build(cfg, 64, 32, {32, 32, 16, 16}); }

std::vector<float> flat(const SBundle& s) { return s.flatten(); }

} // namespace

TEST(MapperConfigTest, Defaults) {
    const MapperConfig c;
    EXPECT_EQ(c.fc_w_layers, 8);
    EXPECT_EQ(c.fc_s_layers, 2);
    EXPECT_EQ(c.lrelu_slope, 0.2);
    EXPECT_FALSE(c.pixel_norm);
    EXPECT_TRUE(c.asm_enabled);
    EXPECT_FALSE(c.learnable_center);
}

TEST(MapperConfigTest, PixelNormRejected) {
    MapperConfig c;
    c.pixel_norm = true;
    EXPECT_THROW(c.validate(), ContractViolation);
    EXPECT_THROW(MapperStack::build(c, 64, 32, {32}), ContractViolation);
}

TEST(MapWTest, Shapes) {
    const auto m = toy_stack();
    EXPECT_EQ(m.map_w(Embedding(64)).size(), 32u);
    EXPECT_THROW(m.map_w(Embedding(63)), ContractViolation);
}

TEST(MapWTest, ZeroBiasesZeroMap) {
    auto m = toy_stack();
    Rng rng(1);
    for (auto& p : m.parameters())
        if (p.is_vector)
            for (Eigen::Index i = 0; i < p.size(); ++i) p.data[i] = static_cast<float>(rng.normal());
    m.zero_biases();
    EXPECT_EQ(m.map_w(Embedding(64)), WLatent(32));
}

TEST(MapSTest, ShapesAndZeroMap) {
    MapperConfig c;
    c.asm_enabled = false;
    auto m = toy_stack(c);
    EXPECT_EQ(m.map_s(WLatent(32)).dims(), (std::vector<int>{32, 32, 16, 16}));
    m.zero_biases();
    EXPECT_EQ(m.map_s(WLatent(32)), SBundle::zeros(std::vector<int>{32, 32, 16, 16}));
    EXPECT_THROW(m.map_s(WLatent(33)), ContractViolation);
}

TEST(MapSTest, LayerIndependence) {
    MapperConfig c;
    c.asm_enabled = false;
    auto m = toy_stack(c);
    Rng rng(2);
    const WLatent dw(rng.normal_vector(32));
    const SBundle before = m.map_s(dw);
    m.fc_s()[2].layers[0].weight(3, 4) += 0.5f;
    m.fc_s()[2].layers[1].bias(1) += 0.5f;
    const SBundle after = m.map_s(dw);
    EXPECT_EQ(after.layers[0], before.layers[0]);
    EXPECT_EQ(after.layers[1], before.layers[1]);
    EXPECT_NE(after.layers[2], before.layers[2]);
    EXPECT_EQ(after.layers[3], before.layers[3]);
}

TEST(MapSTest, SmallInitialOutputs) {
    MapperConfig c;
    c.asm_enabled = false;
    const auto m = toy_stack(c);
    Rng rng(3);
    const SBundle s = m.map_s(WLatent(rng.normal_vector(32)));
    for (const auto& l : s.layers)
        for (float x : l) EXPECT_LT(std::abs(x), 0.2f);
}

TEST(AsmTest, SignalsInOpenUnitInterval) {
    const auto m = toy_stack();
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
        std::vector<float> x = rng.normal_vector(32);
        for (auto& v : x) v *= 5.0f;
        const AsmSignals sig = m.asm_signals(WLatent(x));
        ASSERT_EQ(sig.alpha.size(), 4u);
        ASSERT_EQ(sig.beta.size(), 4u);
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_GT(sig.alpha[i], 0.0f);
            EXPECT_LT(sig.alpha[i], 1.0f);
            EXPECT_GT(sig.beta[i], 0.0f);
            EXPECT_LT(sig.beta[i], 1.0f);
        }
    }
}

TEST(AsmTest, ApplyExamples) {
    EXPECT_EQ(apply_asm(SBundle({{2, 4}}), {{0.5f}, {0.25f}}), SBundle({{1.25f, 2.25f}}));
    EXPECT_EQ(apply_asm(SBundle({{2, 4}}), {{0.0f}, {0.0f}}), SBundle({{0, 0}}));
    const SBundle s({{1.5f, -2}, {3}});
    EXPECT_EQ(apply_asm(s, {{1, 1}, {0, 0}}), s);
    EXPECT_THROW(apply_asm(s, {{1}, {0}}), ContractViolation);
}

TEST(AsmTest, MapSAppliesSignals) {
    const auto m = toy_stack();
    auto off = m;
    off.set_asm_enabled(false);
    Rng rng(5);
    const WLatent dw(rng.normal_vector(32));
    const SBundle expect = apply_asm(off.map_s(dw), m.asm_signals(dw));
    const SBundle got = m.map_s(dw);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < got.layers[i].size(); ++k) EXPECT_NEAR(got.layers[i][k], expect.layers[i][k], 1e-6);
}

TEST(AsmTest, BypassEqualsIdentitySignalsBitwise) {
    const auto on = toy_stack();
    auto off = on;
    off.set_asm_enabled(false);
    Rng rng(6);
    MatT<float> identity(8, 1);
    identity.topRows(4).setOnes();
    identity.bottomRows(4).setZero();
    for (int t = 0; t < 100; ++t) {
        const auto x = rng.normal_vector(32);
        const MatT<float> col = Eigen::Map<const VecT<float>>(x.data(), 32);
        const auto forced = on.map_s_with_signals(col, identity);
        const SBundle bypass = off.map_s(WLatent(x));
        for (std::size_t i = 0; i < 4; ++i)
            EXPECT_EQ(bypass.layers[i], std::vector<float>(forced[i].data(), forced[i].data() + forced[i].size()));
    }
}

TEST(MapperStackTest, Deterministic) {
    const auto a = toy_stack(), b = toy_stack();
    Rng rng(7);
    const Embedding df(rng.normal_vector(64));
    EXPECT_EQ(a.map_w(df), b.map_w(df));
    EXPECT_EQ(flat(a.map_s(a.map_w(df))), flat(b.map_s(b.map_w(df))));
}

TEST(MapperStackTest, ParameterNamesAndCount) {
    MapperConfig c;
    c.learnable_center = true;
    const auto m = toy_stack(c);
    const auto params = m.parameters();
    std::size_t total = 0;
    std::vector<std::string> names;
    for (const auto& p : params) {
        total += static_cast<std::size_t>(p.size());
        names.push_back(p.name);
    }
    EXPECT_EQ(total, m.parameter_count());
    EXPECT_EQ(total, mapper_parameter_count(c, 64, 32, {32, 32, 16, 16}));
    EXPECT_EQ(names.front(), "fc_w.layer0.weight");
    EXPECT_NE(std::find(names.begin(), names.end(), "fc_s.3.layer1.bias"), names.end());
    EXPECT_NE(std::find(names.begin(), names.end(), "asm.layer1.weight"), names.end());
    EXPECT_EQ(names.back(), "center_bias");
}

TEST(MapperStackTest, FullScaleParameterCountReported) {
    const auto& c = MapperConfig{};
    const std::size_t n = mapper_parameter_count(c, 512, 512, GeneratorConfig::stylegan2_1024().dim_s);
    // 8 x (512x512 + 512) for FC_w, 26 two-layer FC_s nets, and the ASM net.
    EXPECT_GT(n, 5'000'000u);
    EXPECT_LT(n, 20'000'000u);
}

TEST(MapperStackTest, LearnableCenterShiftsInput) {
    MapperConfig c;
    c.learnable_center = true;
    auto m = toy_stack(c);
    Rng rng(8);
    const Embedding df(rng.normal_vector(64));
    const WLatent before = m.map_w(df);
    m.center_bias()(0) = 1.0f;
    Embedding shifted = df;
    shifted[0] += 1.0f;
    auto plain = toy_stack();
    EXPECT_NE(m.map_w(df), before);
    EXPECT_EQ(m.map_w(df), plain.map_w(shifted));
}

TEST(MapperGradient, InputGradientOfOutputSum) {
    auto m = support::random_stack(9);
    Rng rng(10);
    int checked = 0;
    for (int t = 0; t < 30; ++t) {
        MatT<double> x = support::random_matrix(rng, 64, 1, 0.5);
        MapperStackT<double>::WTape tape;
        m.map_w(x, &tape);
        auto grad = m.zeros_like();
        const MatT<double> dx = m.backward_w(tape, MatT<double>::Ones(32, 1), grad);
        const auto k = static_cast<Eigen::Index>(rng.index(64));
        const double h = 1e-3;
        MatT<double> xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        // Skip probes whose interval crosses a leaky-ReLU kink.
        MapperStackT<double>::WTape tp, tm;
        m.map_w(xp, &tp);
        m.map_w(xm, &tm);
        bool kink = false;
        for (std::size_t l = 0; l < tp.fc.pre.size(); ++l)
            kink |= ((tp.fc.pre[l].array() > 0) != (tm.fc.pre[l].array() > 0)).any();
        if (kink) continue;
        const double num = (m.map_w(xp).sum() - m.map_w(xm).sum()) / (2 * h);
        EXPECT_TRUE(support::fd_close(dx(k), num)) << dx(k) << " vs " << num;
        ++checked;
    }
    EXPECT_GE(checked, 20);
}

TEST(MapperGradient, AsmSignalsGradient) {
    auto m = support::random_stack(11);
    Rng rng(12);
    for (int t = 0; t < 30; ++t) {
        MatT<double> x = support::random_matrix(rng, 32, 1);
        Mlp<double>::Tape tape;
        const MatT<double> sig = m.asm_signals(x, &tape);
        const MatT<double> w = support::random_matrix(rng, sig.rows(), 1);
        auto grad = m.zeros_like();
        const MatT<double> dx = m.asm_net().backward(tape, w, grad.asm_net());
        const auto k = static_cast<Eigen::Index>(rng.index(32));
        const double h = 1e-3;
        MatT<double> xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        const double num = (m.asm_signals(xp).cwiseProduct(w).sum() - m.asm_signals(xm).cwiseProduct(w).sum()) / (2 * h);
        EXPECT_TRUE(support::fd_close(dx(k), num)) << dx(k) << " vs " << num;
    }
}

TEST(MapperGradient, ParameterProbes) {
    const auto result = support::mapper_gradient_suite(31, 30);
    EXPECT_GE(result.checked(), 100);
    EXPECT_EQ(result.failures(), 0);
}

TEST(MapperStackTest, CastRoundTrip) {
    const auto m = toy_stack();
    const auto back = m.cast<double>().cast<float>();
    Rng rng(13);
    const Embedding df(rng.normal_vector(64));
    EXPECT_EQ(back.map_w(df), m.map_w(df));
}
