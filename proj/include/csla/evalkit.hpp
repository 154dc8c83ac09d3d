#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csla/encoder.hpp"
#include "csla/generator.hpp"
#include "csla/inference.hpp"
#include "csla/spaces.hpp"

namespace csla {

class IdentityEmbedder {
public:
    virtual ~IdentityEmbedder() = default;
    virtual int dim() const = 0;
    virtual std::vector<float> embed(const Image& image) const = 0;
};

// Frozen random projection of 4x4-pooled pixels.
class ToyIdentityEmbedder final : public IdentityEmbedder {
public:
    explicit ToyIdentityEmbedder(int dim = 128, std::uint64_t seed = 11, int pool = 4);

    int dim() const override { return dim_; }
    std::vector<float> embed(const Image& image) const override;

private:
    int dim_;
    int pool_;
    std::uint64_t seed_;
    mutable Eigen::MatrixXf proj_;  // built lazily for the first input size
    mutable int in_features_ = -1;
};

struct TextPair {
    std::string mode;
    std::string positive;
    std::string negative;

    bool operator==(const TextPair&) const = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line) : std::runtime_error(what), line(line) {}
    int line;
};

struct IdScore {
    double score = 0.0;  // mean over counted pairs
    int counted = 0;
    int skipped = 0;     // pairs with a zero-norm embedding
};

IdScore id_score_detail(const std::vector<Image>& sources, const std::vector<Image>& edits,
                        const IdentityEmbedder& embedder);
double id_score(const std::vector<Image>& sources, const std::vector<Image>& edits, const IdentityEmbedder& embedder);

// Ties count as incorrect.
double text_pair_accuracy(const std::vector<Image>& edits, const TextPair& pair, const EncoderAdapter& enc);

std::vector<TextPair> load_text_pairs(const std::filesystem::path& path);
std::vector<TextPair> parse_text_pairs(const std::string& text);
std::string format_text_pairs(const std::vector<TextPair>& pairs);

struct EvalRow {
    std::string mode;
    double face_id = 0.0;
    double acc = 0.0;
    int skipped = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    int n = 0;
    std::uint64_t seed = 0;
    float strength = 1.0f;
    EditSpace space = EditSpace::s;
};

struct EvalOptions {
    int n = 100;
    std::uint64_t seed = 1234;
    float strength = 1.0f;
    EditSpace space = EditSpace::s;
};

// Sources are generator samples; each is inverted once and edited from the
// negative toward the positive prompt of every pair.
EvalReport evaluate(const Model& model, const std::vector<TextPair>& pairs, const IdentityEmbedder& embedder,
                    const EvalOptions& options = {});
void print_report(std::ostream& out, const EvalReport& report);

// How well the trained mappers recover held-out latent residuals.
struct AlignmentReport {
    double w_cosine = 0.0;
    std::vector<double> s_cosine;  // per layer
    double s_cosine_mean = 0.0;
    int n = 0;
};

AlignmentReport alignment_report(const GeneratorAdapter& gen, const EncoderAdapter& enc, const MapperStack& mappers,
                                 const CenterSet& centers, int n, std::uint64_t seed);

double cosine(std::span<const float> a, std::span<const float> b);

} // namespace csla
