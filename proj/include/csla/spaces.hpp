#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace csla {

// Thrown whenever a caller breaks an operation's preconditions (shape
// mismatches, out-of-range arguments, empty inputs).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

void require(bool condition, const std::string& message);

std::string shape_string(std::span<const float> v);

namespace detail {

// Flat latent vector with a compile-time tag so embeddings and w latents
// cannot be mixed up by accident.
template <typename Tag>
struct TaggedVector {
    std::vector<float> values;

    TaggedVector() = default;
    explicit TaggedVector(std::vector<float> v) : values(std::move(v)) {}
    explicit TaggedVector(std::size_t n, float fill = 0.0f) : values(n, fill) {}

    std::size_t size() const { return values.size(); }
    float& operator[](std::size_t i) { return values[i]; }
    float operator[](std::size_t i) const { return values[i]; }
    std::span<const float> view() const { return values; }
    std::span<float> view() { return values; }

    bool operator==(const TaggedVector&) const = default;
};

struct EmbeddingTag {};
struct WLatentTag {};

} // namespace detail

/// Vector in the shared vision-language embedding space.
using Embedding = detail::TaggedVector<detail::EmbeddingTag>;

/// Generator latent in w space.
using WLatent = detail::TaggedVector<detail::WLatentTag>;

/// Per-layer style vectors. Layer identity is semantic (the s-space loss
/// averages per layer), so the bundle is never flattened implicitly.
struct SBundle {
    std::vector<std::vector<float>> layers;

    SBundle() = default;
    explicit SBundle(std::vector<std::vector<float>> l) : layers(std::move(l)) {}
    static SBundle zeros(std::span<const int> dims);

    std::size_t n_layers() const { return layers.size(); }
    std::vector<int> dims() const;
    std::size_t total_size() const;

    // Concatenates all layers; `offsets` receives n+1 layer boundaries.
    std::vector<float> flatten(std::vector<std::size_t>* offsets = nullptr) const;
    static SBundle unflatten(std::span<const float> flat, std::span<const int> dims);

    bool operator==(const SBundle&) const = default;
};

/// RGB image, H x W x 3 interleaved, values in [-1, 1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0.0f) {}

    float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    bool operator==(const Image&) const = default;
};

/// An edit in both spaces; strength and layer selection are applied at decode time.
struct Direction {
    WLatent delta_w;
    SBundle delta_s;

    bool operator==(const Direction&) const = default;
};

bool all_finite(std::span<const float> v);
void require_finite(std::span<const float> v, const std::string& what);
void require_finite(const SBundle& s, const std::string& what);
void require_valid(const Image& image);

std::vector<float> residual(std::span<const float> x, std::span<const float> base);
std::vector<float> add_scaled(std::span<const float> base, std::span<const float> delta, float strength);

template <typename Tag>
detail::TaggedVector<Tag> residual(const detail::TaggedVector<Tag>& x, const detail::TaggedVector<Tag>& base) {
    return detail::TaggedVector<Tag>(residual(x.view(), base.view()));
}

template <typename Tag>
detail::TaggedVector<Tag> add_scaled(const detail::TaggedVector<Tag>& base, const detail::TaggedVector<Tag>& delta,
                                     float strength) {
    return detail::TaggedVector<Tag>(add_scaled(base.view(), delta.view(), strength));
}

SBundle residual(const SBundle& x, const SBundle& base);
SBundle add_scaled(const SBundle& base, const SBundle& delta, float strength);

void require_same_shape(const SBundle& a, const SBundle& b, const char* op);

} // namespace csla
