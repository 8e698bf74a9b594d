// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "pyrf/image.hpp"

#include <optional>

namespace pyrf {

/// Mean squared error over all pixels and channels. Throws on size mismatch.
double mse(const Image &a, const Image &b);

/// -10 log10(mse); +infinity for identical images.
double psnr(const Image &a, const Image &b);

/// Mean structural similarity: 11x11 Gaussian window (sigma 1.5) over the
/// valid region, C1 = 0.01^2, C2 = 0.03^2, per channel then averaged.
/// Images narrower than 11 pixels use the largest odd window that fits.
double ssim(const Image &a, const Image &b);

/// Side of the SSIM window used for a width x height image.
int ssim_window(int width, int height);

/// Geometric mean of 10^(-psnr/10), sqrt(1 - ssim) and, when given, lpips.
double avg_error(double psnr_db, double ssim_value, std::optional<double> lpips = std::nullopt);

} // namespace pyrf
