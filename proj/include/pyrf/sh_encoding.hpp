// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "pyrf/common.hpp"

#include <array>
#include <span>

namespace pyrf {

inline constexpr int kShDim = 16;

/// Real spherical harmonics of degrees 0-3 at a unit direction. No normalization.
template <class T>
void sh_basis(const Vec3<T> &d, std::span<T, kShDim> out);

/// sh_basis of d, normalizing (with a logged warning) when |d| is off unit length by more than 1e-6.
template <class T>
std::array<T, kShDim> encode_direction(const Vec3<T> &d);

} // namespace pyrf
