#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "csla/spaces.hpp"

namespace csla {

// Floats as 8-digit hex bit patterns, for bit-exact text fixtures.
inline std::string float_bits(float v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", std::bit_cast<std::uint32_t>(v));
    return buf;
}

inline float float_from_bits(const std::string& hex) {
    require(hex.size() == 8, "float_from_bits: expected 8 hex digits, got '" + hex + "'");
    return std::bit_cast<float>(static_cast<std::uint32_t>(std::stoul(hex, nullptr, 16)));
}

inline std::vector<std::string> floats_to_bits(const std::vector<float>& v) {
    std::vector<std::string> out;
    out.reserve(v.size());
    for (float x : v) out.push_back(float_bits(x));
    return out;
}

inline std::vector<float> floats_from_bits(const std::vector<std::string>& v) {
    std::vector<float> out;
    out.reserve(v.size());
    for (const auto& s : v) out.push_back(float_from_bits(s));
    return out;
}

} // namespace csla
