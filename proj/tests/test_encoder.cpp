#include <gtest/gtest.h>

#include <cmath>

#include "csla/encoder.hpp"
#include "csla/generator.hpp"
#include "csla/rng.hpp"
#include "fixtures.hpp"
#include "support.hpp"

using namespace csla;

TEST(ToyEncoderTest, ImageShapeAndDeterminism) {
    ToyEncoder enc;
    ToyGenerator gen;
    const Image img = gen.sample(std::vector<float>(16, 0.3f)).image;
    const Embedding a = enc.encode_image(img), b = enc.encode_image(img);
    EXPECT_EQ(a.size(), 64u);
    EXPECT_EQ(a, b);
}

TEST(ToyEncoderTest, ZeroImageMatchesFixture) {
    ToyEncoder enc;
    const Embedding e = enc.encode_image(Image(32, 32));
    EXPECT_EQ(e.values, fixtures::zero_image_embedding());
}

TEST(ToyEncoderTest, NonFiniteRejected) {
    ToyEncoder enc;
    Image img(32, 32);
    img.pixels[5] = INFINITY;
    EXPECT_THROW(enc.encode_image(img), ContractViolation);
}

TEST(ToyEncoderTest, ResizesOtherResolutions) {
    ToyEncoder enc;
    Image big(64, 64);
    for (std::size_t k = 0; k < big.pixels.size(); ++k) big.pixels[k] = std::sin(0.01f * static_cast<float>(k));
    EXPECT_EQ(enc.encode_image(big).size(), 64u);
    EncoderConfig strict;
    strict.resize = false;
    EXPECT_THROW(ToyEncoder(strict).encode_image(big), ContractViolation);
}

TEST(ToyEncoderTest, TextDeterminism) {
    ToyEncoder enc;
    EXPECT_EQ(enc.encode_text("a person"), enc.encode_text("a person"));
    EXPECT_EQ(enc.encode_text("a person").size(), 64u);
}

TEST(ToyEncoderTest, BagOfTokens) {
    ToyEncoder enc;
    EXPECT_EQ(enc.encode_text("cat cat"), enc.encode_text("cat"));
    EXPECT_EQ(enc.encode_text("Cat"), enc.encode_text("cat"));
    const Embedding ab = enc.encode_text("a b"), a = enc.encode_text("a"), b = enc.encode_text("b");
    for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_NEAR(ab[i], 0.5f * (a[i] + b[i]), 1e-6);
}

TEST(ToyEncoderTest, EmptyTextRejected) {
    ToyEncoder enc;
    EXPECT_THROW(enc.encode_text(""), ContractViolation);
    EXPECT_THROW(enc.encode_text("  \t\n"), ContractViolation);
}

TEST(ToyEncoderTest, TokenizeLowercasesAndSplits) {
    EXPECT_EQ(tokenize("  A Picture\tof\nME "), (std::vector<std::string>{"a", "picture", "of", "me"}));
}

TEST(ToyEncoderTest, BucketsInRange) {
    ToyEncoder enc;
    for (const char* t : {"a", "picture", "of", "person", "glasses"}) EXPECT_LT(enc.bucket_of(t), 4096u);
}

TEST(ToyEncoderTest, SharedSpaceWidth) {
    EncoderConfig c;
    c.d_clip = 24;
    ToyEncoder enc(c);
    EXPECT_EQ(enc.encode_text("x").size(), enc.encode_image(Image(32, 32)).size());
}

TEST(ToyEncoderTest, NormalizeFlag) {
    EncoderConfig c;
    c.normalize = true;
    ToyEncoder enc(c);
    const Embedding e = enc.encode_text("a smiling person");
    double n = 0;
    for (float x : e.values) n += static_cast<double>(x) * x;
    EXPECT_NEAR(n, 1.0, 1e-5);
}

TEST(ToyEncoderTest, JacobianMatchesFiniteDifferences) {
    ToyEncoder enc;
    ToyGenerator gen;
    Rng rng(8);
    int checked = 0;
    for (int t = 0; t < 30; ++t) {
        const Image img = gen.sample(rng.normal_vector(16)).image;
        std::vector<double> px(img.pixels.begin(), img.pixels.end());
        std::vector<double> tangent(px.size(), 0.0);
        const std::size_t k = rng.index(px.size());
        tangent[k] = 1.0;
        const auto jvp = enc.encode_pixels_jvp_f64(px, tangent);
        const double h = 1e-3;
        auto pp = px, pm = px;
        pp[k] += h;
        pm[k] -= h;
        const auto ep = enc.encode_pixels_f64(pp), em = enc.encode_pixels_f64(pm);
        for (int probe = 0; probe < 10; ++probe) {
            const std::size_t i = rng.index(jvp.size());
            const double num = (ep[i] - em[i]) / (2 * h);
            EXPECT_TRUE(support::fd_close(jvp[i], num)) << jvp[i] << " vs " << num;
            ++checked;
        }
    }
    EXPECT_EQ(checked, 300);
}

TEST(CountingEncoderTest, Counts) {
    CountingEncoder enc(support::toy_encoder());
    enc.encode_image(Image(32, 32));
    enc.encode_text("a");
    enc.encode_text("b");
    EXPECT_EQ(enc.image_calls(), 1u);
    EXPECT_EQ(enc.text_calls(), 2u);
}
