#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csla/spaces.hpp"

namespace csla {

Image resize_bilinear(const Image& image, int height, int width);

// [-1, 1] floats map linearly onto 0..255 (rounded, clamped).
std::uint8_t to_byte(float v);
float from_byte(std::uint8_t b);

// 8-bit RGB PNG.
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

// Image after an 8-bit round trip, i.e. what a PNG consumer will see.
Image quantize(const Image& image);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

} // namespace csla
