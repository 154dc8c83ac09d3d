#include "csla/spaces.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace csla {

void require(bool condition, const std::string& message) {
    if (!condition) throw ContractViolation(message);
}

std::string shape_string(std::span<const float> v) { return "(" + std::to_string(v.size()) + ",)"; }

namespace {

std::string bundle_shape(const SBundle& s) {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < s.layers.size(); ++i) out << (i ? "," : "") << s.layers[i].size();
    out << "]";
    return out.str();
}

} // namespace

SBundle SBundle::zeros(std::span<const int> dims) {
    SBundle s;
    s.layers.reserve(dims.size());
    for (int d : dims) s.layers.emplace_back(static_cast<std::size_t>(d), 0.0f);
    return s;
}

std::vector<int> SBundle::dims() const {
    std::vector<int> d;
    d.reserve(layers.size());
    for (const auto& l : layers) d.push_back(static_cast<int>(l.size()));
    return d;
}

std::size_t SBundle::total_size() const {
    return std::accumulate(layers.begin(), layers.end(), std::size_t{0},
                           [](std::size_t acc, const auto& l) { return acc + l.size(); });
}

std::vector<float> SBundle::flatten(std::vector<std::size_t>* offsets) const {
    std::vector<float> flat;
    flat.reserve(total_size());
    if (offsets) offsets->assign(1, 0);
    for (const auto& l : layers) {
        flat.insert(flat.end(), l.begin(), l.end());
        if (offsets) offsets->push_back(flat.size());
    }
    return flat;
}

SBundle SBundle::unflatten(std::span<const float> flat, std::span<const int> dims) {
    std::size_t expected = 0;
    for (int d : dims) expected += static_cast<std::size_t>(d);
    require(flat.size() == expected, "unflatten: " + std::to_string(flat.size()) + " values for bundle of " +
                                         std::to_string(expected));
    SBundle s;
    std::size_t at = 0;
    for (int d : dims) {
        s.layers.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(at),
                              flat.begin() + static_cast<std::ptrdiff_t>(at + d));
        at += static_cast<std::size_t>(d);
    }
    return s;
}

bool all_finite(std::span<const float> v) {
    for (float x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void require_finite(std::span<const float> v, const std::string& what) {
    require(all_finite(v), what + " contains non-finite values");
}

void require_finite(const SBundle& s, const std::string& what) {
    for (const auto& l : s.layers) require_finite(l, what);
}

void require_valid(const Image& image) {
    require(image.height > 0 && image.width > 0, "image dimensions must be positive");
    require(image.pixels.size() == static_cast<std::size_t>(image.height) * image.width * 3,
            "image pixel buffer does not match " + std::to_string(image.height) + "x" +
                std::to_string(image.width) + "x3");
    require_finite(image.pixels, "image");
}

std::vector<float> residual(std::span<const float> x, std::span<const float> base) {
    require(x.size() == base.size(),
            "residual: shape mismatch " + shape_string(x) + " vs " + shape_string(base));
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - base[i];
    return out;
}

std::vector<float> add_scaled(std::span<const float> base, std::span<const float> delta, float strength) {
    require(base.size() == delta.size(),
            "add_scaled: shape mismatch " + shape_string(base) + " vs " + shape_string(delta));
    require(std::isfinite(strength), "add_scaled: strength must be finite");
    std::vector<float> out(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] + strength * delta[i];
    return out;
}

void require_same_shape(const SBundle& a, const SBundle& b, const char* op) {
    bool same = a.layers.size() == b.layers.size();
    for (std::size_t i = 0; same && i < a.layers.size(); ++i) same = a.layers[i].size() == b.layers[i].size();
    require(same, std::string(op) + ": shape mismatch " + bundle_shape(a) + " vs " + bundle_shape(b));
}

SBundle residual(const SBundle& x, const SBundle& base) {
    require_same_shape(x, base, "residual");
    SBundle out;
    out.layers.reserve(x.layers.size());
    for (std::size_t i = 0; i < x.layers.size(); ++i) out.layers.push_back(residual(x.layers[i], base.layers[i]));
    return out;
}

SBundle add_scaled(const SBundle& base, const SBundle& delta, float strength) {
    require_same_shape(base, delta, "add_scaled");
    SBundle out;
    out.layers.reserve(base.layers.size());
    for (std::size_t i = 0; i < base.layers.size(); ++i)
        out.layers.push_back(add_scaled(base.layers[i], delta.layers[i], strength));
    return out;
}

} // namespace csla
