#include <gtest/gtest.h>

#include "csla/centers.hpp"
#include "support.hpp"

using namespace csla;

namespace {

// Generator whose w never changes, for the constant-center case.
class ConstantGenerator final : public GeneratorAdapter {
public:
    ConstantGenerator() : inner_(GeneratorConfig::toy()) {}
    const GeneratorConfig& config() const override { return inner_.config(); }
    GeneratorSample sample(std::span<const float>) const override {
        const WLatent w(std::vector<float>(32, 0.25f));
        SBundle s = styles_of(w);
        return {w, s, synthesize_from_s(s)};
    }
    SBundle styles_of(const WLatent& w) const override { return inner_.styles_of(w); }
    Image synthesize_from_s(const SBundle& s) const override { return inner_.synthesize_from_s(s); }
    WLatent average_w(int) const override { return WLatent(std::vector<float>(32, 0.25f)); }
    std::string model_id() const override { return "constant"; }

private:
    ToyGenerator inner_;
};

} // namespace

TEST(AverageCenter, ConstantGenerator) {
    ConstantGenerator gen;
    ToyEncoder enc;
    const CenterSet c = compute_average_center(gen, enc, 10);
    EXPECT_EQ(c.f_base, enc.encode_image(gen.sample(std::vector<float>(16)).image));
}

TEST(AverageCenter, StylesOfCenterAndDeterminism) {
    ToyGenerator gen;
    ToyEncoder enc;
    const CenterSet a = compute_average_center(gen, enc, 500);
    EXPECT_EQ(a.s_base, gen.styles_of(a.w_base));
    EXPECT_EQ(a.f_base, enc.encode_image(gen.synthesize_from_s(a.s_base)));
    EXPECT_EQ(compute_average_center(gen, enc, 500), a);
    EXPECT_THROW(compute_average_center(gen, enc, 0), ContractViolation);
}

TEST(AverageCenter, AdapterMismatchRejected) {
    ToyGenerator gen;
    EncoderConfig ec;
    ec.height = ec.width = 16;
    ec.resize = false;
    ToyEncoder enc(ec);
    EXPECT_THROW(compute_average_center(gen, enc, 5), ContractViolation);
}

TEST(TextCenter, Template) {
    ToyEncoder enc;
    EXPECT_EQ(compute_text_center(enc, "person"), enc.encode_text("a picture of person"));
    EXPECT_EQ(compute_text_center(enc, "person"), compute_text_center(enc, "person"));
    EXPECT_THROW(compute_text_center(enc, ""), ContractViolation);
}

TEST(TextCenter, DiffersFromAverage) {
    ToyGenerator gen;
    ToyEncoder enc;
    EXPECT_NE(compute_text_center(enc, "person"), compute_average_center(gen, enc, 200).f_base);
}

TEST(Ema, Examples) {
    const Embedding c(std::vector<float>{0.0f}), n(std::vector<float>{2.0f});
    EXPECT_EQ(ema_update(c, n, 1.0), c);
    EXPECT_EQ(ema_update(c, n, 0.5), Embedding(std::vector<float>{1.0f}));
    EXPECT_THROW(ema_update(c, n, 0.0), ContractViolation);
    EXPECT_THROW(ema_update(c, n, 1.5), ContractViolation);
    EXPECT_THROW(ema_update(c, Embedding(2), 0.5), ContractViolation);
}

TEST(Ema, ConvergesGeometrically) {
    Embedding c(std::vector<float>{0.0f, 10.0f});
    const Embedding n(std::vector<float>{1.0f, -3.0f});
    for (int i = 0; i < 50; ++i) c = ema_update(c, n, 0.9);
    // Remaining gap is 0.9^50 of the initial one: 0.0052 and 0.067.
    EXPECT_NEAR(c[0], 1.0 - std::pow(0.9, 50), 1e-6);
    EXPECT_NEAR(c[1], -3.0 + 13.0 * std::pow(0.9, 50), 1e-5);
}

TEST(Ema, ConstantInputConverges) {
    Embedding c(std::vector<float>{5.0f});
    const Embedding n(std::vector<float>{5.0f});
    for (int i = 0; i < 50; ++i) c = ema_update(c, n, 0.9);
    EXPECT_NEAR(c[0], 5.0f, 1e-6);
}

namespace {
Embedding ef(float x) { return Embedding(std::vector<float>{x, x}); }
WLatent wf(float x) { return WLatent(std::vector<float>{x, -x, x}); }
}

TEST(Bank, PushAndFifo) {
    CenterBank bank(3);
    bank.push(ef(1), wf(1));
    EXPECT_EQ(bank.size(), 1u);
    for (int i = 2; i <= 4; ++i) bank.push(ef(static_cast<float>(i)), wf(static_cast<float>(i)));
    EXPECT_EQ(bank.size(), 3u);
    EXPECT_EQ(bank.f_at(0), ef(2));
    EXPECT_EQ(bank.w_at(2), wf(4));
    EXPECT_EQ(CenterBank().capacity(), 4096u);
}

TEST(Bank, PairingPreserved) {
    CenterBank bank(5);
    Rng rng(1);
    for (int i = 0; i < 40; ++i) {
        bank.push(ef(static_cast<float>(i)), wf(static_cast<float>(i)));
        if (i % 3 == 0)
            for (const auto& p : bank.sample(4, rng)) EXPECT_EQ(p.f[0], p.w[0]);
        for (std::size_t k = 0; k < bank.size(); ++k) EXPECT_EQ(bank.f_at(k)[0], bank.w_at(k)[0]);
    }
}

TEST(Bank, ShapeMismatchOnPush) {
    CenterBank bank(3);
    bank.push(ef(1), wf(1));
    EXPECT_THROW(bank.push(Embedding(3), wf(1)), ContractViolation);
    EXPECT_THROW(bank.push(ef(1), WLatent(2)), ContractViolation);
}

TEST(Bank, SampleContracts) {
    CenterBank bank(4);
    Rng rng(2);
    EXPECT_THROW(bank.sample(1, rng), ContractViolation);
    bank.push(ef(7), wf(7));
    for (const auto& p : bank.sample(5, rng)) EXPECT_EQ(p.f, ef(7));
    bank.push(ef(8), wf(8));
    const auto three = bank.sample(3, rng);
    ASSERT_EQ(three.size(), 3u);
    for (const auto& p : three) EXPECT_TRUE(p.f == ef(7) || p.f == ef(8));
    EXPECT_THROW(bank.sample(0, rng), ContractViolation);
}

TEST(Bank, SampleDeterministicAndNonMutating) {
    CenterBank bank(10);
    for (int i = 0; i < 10; ++i) bank.push(ef(static_cast<float>(i)), wf(static_cast<float>(i)));
    const CenterBank before = bank;
    Rng a(5), b(5);
    EXPECT_EQ(bank.sample_indices(20, a), bank.sample_indices(20, b));
    EXPECT_EQ(bank, before);
}

TEST(CenterModeTest, Names) {
    for (auto m : {CenterMode::average, CenterMode::text, CenterMode::ema, CenterMode::learnable})
        EXPECT_EQ(center_mode_from_string(to_string(m)), m);
    EXPECT_THROW(center_mode_from_string("median"), ContractViolation);
}

#include "fixtures.hpp"

TEST(AverageCenter, MatchesFrozenFixtureBitwise) {
    ToyGenerator gen;
    ToyEncoder enc;
    EXPECT_EQ(compute_average_center(gen, enc, 100000), fixtures::average_center_100k());
}
