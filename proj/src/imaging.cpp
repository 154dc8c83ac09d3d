#include "csla/imaging.hpp"

#include <png.h>
#include <sodium.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace csla {

Image resize_bilinear(const Image& image, int height, int width) {
    require_valid(image);
    require(height > 0 && width > 0, "resize_bilinear: target size must be positive");
    Image out(height, width);
    const float sy = static_cast<float>(image.height) / height;
    const float sx = static_cast<float>(image.width) / width;
    for (int y = 0; y < height; ++y) {
        const float fy = std::clamp((y + 0.5f) * sy - 0.5f, 0.0f, static_cast<float>(image.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, image.height - 1);
        const float ty = fy - y0;
        for (int x = 0; x < width; ++x) {
            const float fx = std::clamp((x + 0.5f) * sx - 0.5f, 0.0f, static_cast<float>(image.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, image.width - 1);
            const float tx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const float top = image.at(y0, x0, c) * (1 - tx) + image.at(y0, x1, c) * tx;
                const float bot = image.at(y1, x0, c) * (1 - tx) + image.at(y1, x1, c) * tx;
                out.at(y, x, c) = top * (1 - ty) + bot * ty;
            }
        }
    }
    return out;
}

std::uint8_t to_byte(float v) {
    const float scaled = (std::clamp(v, -1.0f, 1.0f) + 1.0f) * 127.5f;
    return static_cast<std::uint8_t>(std::lround(scaled));
}

float from_byte(std::uint8_t b) { return static_cast<float>(b) / 127.5f - 1.0f; }

Image quantize(const Image& image) {
    Image out = image;
    for (auto& p : out.pixels) p = from_byte(to_byte(p));
    return out;
}

namespace {

struct PngWriteBuffer {
    std::vector<std::uint8_t> bytes;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t length) {
    auto* buf = static_cast<PngWriteBuffer*>(png_get_io_ptr(png));
    buf->bytes.insert(buf->bytes.end(), data, data + length);
}

void png_flush_cb(png_structp) {}

struct PngReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t length) {
    auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
    if (cur->offset + length > cur->bytes.size()) png_error(png, "truncated PNG data");
    std::memcpy(out, cur->bytes.data() + cur->offset, length);
    cur->offset += length;
}

[[noreturn]] void png_error_cb(png_structp, png_const_charp msg) { throw std::runtime_error(std::string("png: ") + msg); }

void png_warning_cb(png_structp, png_const_charp) {}

} // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
    require_valid(image);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_cb, png_warning_cb);
    if (!png) throw std::runtime_error("png: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    PngWriteBuffer buf;
    std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width) * 3);
    try {
        png_set_write_fn(png, &buf, png_write_cb, png_flush_cb);
        png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < image.height; ++y) {
            for (int x = 0; x < image.width; ++x)
                for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(x) * 3 + c] = to_byte(image.at(y, x, c));
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return std::move(buf.bytes);
}

Image decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw std::runtime_error("png: not a PNG stream");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_cb, png_warning_cb);
    if (!png) throw std::runtime_error("png: cannot create read struct");
    png_infop info = png_create_info_struct(png);
    PngReadCursor cursor{bytes, 0};
    Image image;
    try {
        png_set_read_fn(png, &cursor, png_read_cb);
        png_read_info(png, info);
        const int width = static_cast<int>(png_get_image_width(png, info));
        const int height = static_cast<int>(png_get_image_height(png, info));
        const int color = png_get_color_type(png, info);
        if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
            if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
            png_set_gray_to_rgb(png);
        }
        if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        png_read_update_info(png, info);
        if (png_get_rowbytes(png, info) != static_cast<png_size_t>(width) * 3)
            throw std::runtime_error("png: unsupported pixel layout");
        image = Image(height, width);
        std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 3);
        for (int y = 0; y < height; ++y) {
            png_read_row(png, row.data(), nullptr);
            for (int x = 0; x < width; ++x)
                for (int c = 0; c < 3; ++c) image.at(y, x, c) = from_byte(row[static_cast<std::size_t>(x) * 3 + c]);
        }
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png(const std::filesystem::path& path, const Image& image) {
    const auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

Image read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    const std::size_t len = sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
    std::string out(len, '\0');
    sodium_bin2base64(out.data(), len, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(len - 1);  // drop terminator
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
    std::size_t written = 0;
    const char* end = nullptr;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \r\n", &written, &end,
                          sodium_base64_VARIANT_ORIGINAL) != 0 ||
        end != text.data() + text.size())
        throw std::runtime_error("invalid base64 payload");
    out.resize(written);
    return out;
}

} // namespace csla
