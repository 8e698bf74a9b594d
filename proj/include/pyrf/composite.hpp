// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// Front-to-back volumetric quadrature along one ray:
//   alpha_i = 1 - exp(-sigma_i delta_i), T_i = prod_{j<i} (1 - alpha_j),
//   color = sum_i T_i alpha_i c_i + T_N * background.
//
#pragma once

#include "pyrf/common.hpp"

#include <span>
#include <vector>

namespace pyrf {

template <class T>
struct CompositeResult {
    Rgb<T> color = Rgb<T>::Zero();
    std::vector<T> weights;
    T residual = T(1);  // transmittance left after the last sample
};

/// `sigma`, `delta` and `color` are aligned per sample; throws on mismatch.
template <class T>
CompositeResult<T> composite(std::span<const T> sigma, std::span<const T> delta, std::span<const Rgb<T>> color,
                             const Rgb<T> &background);

/// Cotangents of sigma and colour given the cotangent of the composited colour.
/// `result` must come from composite() on the same inputs. Outputs are overwritten.
template <class T>
void composite_backward(std::span<const T> sigma, std::span<const T> delta, std::span<const Rgb<T>> color,
                        const Rgb<T> &background, const CompositeResult<T> &result, const Rgb<T> &d_out,
                        std::span<T> d_sigma, std::span<Rgb<T>> d_color);

} // namespace pyrf
