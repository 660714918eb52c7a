#pragma once

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "efs/grid.hpp"

namespace efs {

// Grayscale PNG I/O. Intensities map [0,1] <-> the full integer range of the
// chosen bit depth; 16-bit round trips are exact on quantized values.
namespace png_io {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

inline void write_gray(const std::string& path, const Image& img, int bit_depth = 16) {
    if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("png write: bit depth must be 8 or 16");
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("png write: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("png write: init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png write: libpng error for " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.cols, img.rows, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const double peak = bit_depth == 16 ? 65535.0 : 255.0;
    if (bit_depth == 16) {
        std::vector<uint16_t> row(img.cols);
        for (int r = 0; r < img.rows; ++r) {
            for (int c = 0; c < img.cols; ++c) {
                double v = std::clamp(img.at(r, c), 0.0, 1.0);
                uint16_t q = static_cast<uint16_t>(std::lround(v * peak));
                row[c] = static_cast<uint16_t>((q >> 8) | (q << 8));  // PNG is big-endian
            }
            png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
        }
    } else {
        std::vector<uint8_t> row(img.cols);
        for (int r = 0; r < img.rows; ++r) {
            for (int c = 0; c < img.cols; ++c)
                row[c] = static_cast<uint8_t>(std::lround(std::clamp(img.at(r, c), 0.0, 1.0) * peak));
            png_write_row(png, row.data());
        }
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline Image read_gray(const std::string& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("png read: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("png read: init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png read: libpng error for " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int depth = png_get_bit_depth(png, info);
    int color = png_get_color_type(png, info);

    // normalize to grayscale, BT.601 for color input
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray_fixed(png, 1, 29900, 58700);  // BT.601 weights
    png_read_update_info(png, info);
    depth = png_get_bit_depth(png, info);

    Image img(static_cast<int>(h), static_cast<int>(w));
    double peak = depth == 16 ? 65535.0 : 255.0;
    if (depth == 16) {
        std::vector<uint16_t> row(w);
        for (png_uint_32 r = 0; r < h; ++r) {
            png_read_row(png, reinterpret_cast<png_bytep>(row.data()), nullptr);
            for (png_uint_32 c = 0; c < w; ++c) {
                uint16_t be = row[c];
                uint16_t v = static_cast<uint16_t>((be >> 8) | (be << 8));
                img.at(static_cast<int>(r), static_cast<int>(c)) = v / peak;
            }
        }
    } else {
        std::vector<uint8_t> row(w);
        for (png_uint_32 r = 0; r < h; ++r) {
            png_read_row(png, row.data(), nullptr);
            for (png_uint_32 c = 0; c < w; ++c) img.at(static_cast<int>(r), static_cast<int>(c)) = row[c] / peak;
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace png_io
}  // namespace efs
