// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force references written from the definitions, sharing no code with
// the library: used by the unit tests and the acceptance runner.
//
#pragma once

#include "pyrf/image.hpp"

#include <cmath>
#include <vector>

namespace pyrf::oracle {

/// T_i = exp(-sum_{j<i} sigma_j delta_j), w_i = T_i (1 - exp(-sigma_i delta_i)).
inline Rgb<double> quadrature(const std::vector<double> &sigma, const std::vector<double> &delta,
                              const std::vector<Rgb<double>> &color, const Rgb<double> &bg, double *residual) {
    Rgb<double> out = Rgb<double>::Zero();
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        double optical = 0.0;
        for (std::size_t j = 0; j < i; ++j) optical += sigma[j] * delta[j];
        out += std::exp(-optical) * (1.0 - std::exp(-sigma[i] * delta[i])) * color[i];
    }
    double total = 0.0;
    for (std::size_t j = 0; j < sigma.size(); ++j) total += sigma[j] * delta[j];
    *residual = std::exp(-total);
    return out + *residual * bg;
}

inline double mse(const Image &a, const Image &b) {
    double s = 0.0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x)
            for (int c = 0; c < 3; ++c) s += std::pow(double(a.at(x, y, c)) - double(b.at(x, y, c)), 2.0);
    return s / (3.0 * a.width * a.height);
}

inline double psnr(const Image &a, const Image &b) { return 10.0 * std::log10(1.0 / mse(a, b)); }

/// Mean SSIM with a full k x k Gaussian (sigma 1.5) window at every valid
/// position, moments computed directly per window.
inline double ssim(const Image &a, const Image &b, int k = 11) {
    const int r = k / 2;
    double win[11][11], norm = 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) norm += win[i][j] = std::exp(-((i - r) * (i - r) + (j - r) * (j - r)) / 4.5);
    const double c1 = 1e-4, c2 = 9e-4;
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        int count = 0;
        for (int y0 = 0; y0 + k <= a.height; ++y0) {
            for (int x0 = 0; x0 + k <= a.width; ++x0) {
                double mx = 0, my = 0;
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j) {
                        const double w = win[i][j] / norm;
                        mx += w * a.at(x0 + j, y0 + i, c);
                        my += w * b.at(x0 + j, y0 + i, c);
                    }
                double vx = 0, vy = 0, cov = 0;
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j) {
                        const double w = win[i][j] / norm;
                        const double dx = a.at(x0 + j, y0 + i, c) - mx, dy = b.at(x0 + j, y0 + i, c) - my;
                        vx += w * dx * dx;
                        vy += w * dy * dy;
                        cov += w * dx * dy;
                    }
                sum += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
        }
        total += sum / count;
    }
    return total / 3.0;
}

/// Geometric mean of MSE = 10^(-PSNR/10), sqrt(1 - SSIM) and optionally LPIPS.
inline double avg_error(double psnr_db, double ssim_value, const double *lpips = nullptr) {
    const double m = std::pow(10.0, -psnr_db / 10.0), s = std::sqrt(1.0 - ssim_value);
    return lpips ? std::pow(m * s * *lpips, 1.0 / 3.0) : std::pow(m * s, 0.5);
}

} // namespace pyrf::oracle
