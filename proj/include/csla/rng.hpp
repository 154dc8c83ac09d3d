#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace csla {

// Seeded generator with a stateless normal transform, so that the full state
// is just the engine and can be checkpointed and restored exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    // Uniform in (0, 1), 53-bit resolution.
    double uniform();
    // Standard normal via Box-Muller; each call consumes exactly two uniforms.
    double normal();
    std::vector<float> normal_vector(std::size_t n);
    // Uniform integer in [0, n).
    std::size_t index(std::size_t n);

    std::string state() const;
    void set_state(const std::string& text);

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace csla
