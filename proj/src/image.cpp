// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace pyrf {

namespace {

std::uint8_t to_byte(float v) { return std::uint8_t(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

struct FileCloser {
    void operator()(std::FILE *f) const { std::fclose(f); }
};

} // namespace

Image Image::quantized() const {
    Image q = *this;
    for (float &v : q.data) v = float(to_byte(v)) / 255.0f;
    return q;
}

void write_png(const std::filesystem::path &path, const Image &image) {
    if (image.width < 1 || image.height < 1) throw IoError("write_png: empty image for " + path.string());
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed for " + path.string());
    }
    std::vector<std::uint8_t> row(std::size_t(image.width) * 3);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(image.width), png_uint_32(image.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        const float *src = image.data.data() + std::size_t(y) * image.width * 3;
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = to_byte(src[i]);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path &path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng init failed for " + path.string());
    }
    Image img;
    std::vector<std::uint8_t> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng failed reading " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    img.width = int(png_get_image_width(png, info));
    img.height = int(png_get_image_height(png, info));
    const std::size_t stride = png_get_rowbytes(png, info);
    if (stride != std::size_t(img.width) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported PNG layout in " + path.string());
    }
    img.data.resize(std::size_t(img.width) * img.height * 3);
    row.resize(stride);
    for (int y = 0; y < img.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        float *dst = img.data.data() + std::size_t(y) * stride;
        for (std::size_t i = 0; i < stride; ++i) dst[i] = float(row[i]) / 255.0f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Image hstack(const Image &left, const Image &right) {
    if (left.height != right.height) throw ValidationError("hstack: image heights differ");
    Image out(left.width + right.width, left.height);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < left.width; ++x) out.set(x, y, left.pixel(x, y));
        for (int x = 0; x < right.width; ++x) out.set(left.width + x, y, right.pixel(x, y));
    }
    return out;
}

} // namespace pyrf
