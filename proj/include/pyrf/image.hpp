// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "pyrf/common.hpp"

#include <filesystem>
#include <vector>

namespace pyrf {

/// Interleaved RGB image with linear float values, row-major from the top-left.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, float fill = 0.0f) : width(w), height(h), data(std::size_t(w) * h * 3, fill) {}

    std::size_t pixels() const { return std::size_t(width) * height; }
    float &at(int x, int y, int c) { return data[(std::size_t(y) * width + x) * 3 + c]; }
    float at(int x, int y, int c) const { return data[(std::size_t(y) * width + x) * 3 + c]; }
    Rgb<float> pixel(int x, int y) const { return {at(x, y, 0), at(x, y, 1), at(x, y, 2)}; }
    void set(int x, int y, const Rgb<float> &c) {
        for (int k = 0; k < 3; ++k) at(x, y, k) = c[k];
    }
    /// Values quantized as they would be stored in an 8-bit file.
    Image quantized() const;
};

/// 8-bit RGB PNG. Values are clamped to [0, 1] and rounded. Throws IoError with the path.
void write_png(const std::filesystem::path &path, const Image &image);
/// Reads 8-bit gray/RGB/RGBA PNGs (alpha dropped) into [0, 1] floats.
Image read_png(const std::filesystem::path &path);

/// Side-by-side concatenation of two equally tall images.
Image hstack(const Image &left, const Image &right);

} // namespace pyrf
