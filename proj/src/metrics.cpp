// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace pyrf {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_same(const Image &a, const Image &b, const char *what) {
    if (a.width != b.width || a.height != b.height) {
        throw ValidationError(std::string(what) + ": image sizes differ (" + std::to_string(a.width) + "x" +
                              std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                              std::to_string(b.height) + ")");
    }
    if (a.pixels() == 0) throw ValidationError(std::string(what) + ": empty images");
}

std::vector<double> gaussian_taps(int size) {
    std::vector<double> g(size);
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double x = i - size / 2;
        g[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
        sum += g[i];
    }
    for (double &v : g) v /= sum;
    return g;
}

/// Separable valid-mode filtering of one plane (w x h) to (w-k+1) x (h-k+1).
std::vector<double> filter_valid(const std::vector<double> &src, int w, int h, const std::vector<double> &g) {
    const int k_size = int(g.size());
    const int ow = w - k_size + 1, oh = h - k_size + 1;
    std::vector<double> tmp(std::size_t(ow) * h), out(std::size_t(ow) * oh);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < k_size; ++k) s += g[k] * src[std::size_t(y) * w + x + k];
            tmp[std::size_t(y) * ow + x] = s;
        }
    }
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < k_size; ++k) s += g[k] * tmp[std::size_t(y + k) * ow + x];
            out[std::size_t(y) * ow + x] = s;
        }
    }
    return out;
}

} // namespace

int ssim_window(int width, int height) {
    const int side = std::min({kWindow, width, height});
    return side % 2 == 1 ? side : side - 1;
}

double mse(const Image &a, const Image &b) {
    check_same(a, b, "mse");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        sum += d * d;
    }
    return sum / double(a.data.size());
}

double psnr(const Image &a, const Image &b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(m);
}

double ssim(const Image &a, const Image &b) {
    check_same(a, b, "ssim");
    const auto g = gaussian_taps(ssim_window(a.width, a.height));
    const int w = a.width, h = a.height;
    const std::size_t n = std::size_t(w) * h;
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = a.data[i * 3 + c];
            y[i] = b.data[i * 3 + c];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, w, h, g), my = filter_valid(y, w, h, g);
        const auto sxx = filter_valid(xx, w, h, g), syy = filter_valid(yy, w, h, g), sxy = filter_valid(xy, w, h, g);
        double sum = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i];
            const double vy = syy[i] - my[i] * my[i];
            const double cov = sxy[i] - mx[i] * my[i];
            sum += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
        }
        total += sum / double(mx.size());
    }
    return total / 3.0;
}

double avg_error(double psnr_db, double ssim_value, std::optional<double> lpips) {
    if (ssim_value > 1.0) throw ValidationError("avg_error: ssim above 1");
    const double m = std::isinf(psnr_db) && psnr_db > 0 ? 0.0 : std::pow(10.0, -psnr_db / 10.0);
    const double s = std::sqrt(std::max(0.0, 1.0 - ssim_value));
    if (lpips) return std::cbrt(m * s * *lpips);
    return std::sqrt(m * s);
}

} // namespace pyrf
