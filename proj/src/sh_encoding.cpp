// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/sh_encoding.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace pyrf {

template <class T>
void sh_basis(const Vec3<T> &d, std::span<T, kShDim> out) {
    const T x = d[0], y = d[1], z = d[2];
    const T xx = x * x, yy = y * y, zz = z * z;
    out[0] = T(0.28209479177387814);
    out[1] = T(-0.48860251190291987) * y;
    out[2] = T(0.48860251190291987) * z;
    out[3] = T(-0.48860251190291987) * x;
    out[4] = T(1.0925484305920792) * x * y;
    out[5] = T(-1.0925484305920792) * y * z;
    out[6] = T(0.31539156525252005) * (T(2) * zz - xx - yy);
    out[7] = T(-1.0925484305920792) * x * z;
    out[8] = T(0.54627421529603959) * (xx - yy);
    out[9] = T(-0.59004358992664352) * y * (T(3) * xx - yy);
    out[10] = T(2.8906114426405538) * x * y * z;
    out[11] = T(-0.45704579946446572) * y * (T(4) * zz - xx - yy);
    out[12] = T(0.3731763325901154) * z * (T(2) * zz - T(3) * xx - T(3) * yy);
    out[13] = T(-0.45704579946446572) * x * (T(4) * zz - xx - yy);
    out[14] = T(1.4453057213202769) * z * (xx - yy);
    out[15] = T(-0.59004358992664352) * x * (xx - T(3) * yy);
}

template <class T>
std::array<T, kShDim> encode_direction(const Vec3<T> &d) {
    std::array<T, kShDim> out{};
    const double norm = double(d.norm());
    if (std::abs(norm - 1.0) > 1e-6) {
        if (!(norm > 0.0) || !std::isfinite(norm)) throw ValidationError("encode_direction: zero or non-finite direction");
        spdlog::warn("encode_direction: non-unit direction (norm {}), normalizing", norm);
        const Vec3<T> n = d / T(norm);
        sh_basis<T>(n, out);
        return out;
    }
    sh_basis<T>(d, out);
    return out;
}

template void sh_basis<float>(const Vec3<float> &, std::span<float, kShDim>);
template void sh_basis<double>(const Vec3<double> &, std::span<double, kShDim>);
template std::array<float, kShDim> encode_direction<float>(const Vec3<float> &);
template std::array<double, kShDim> encode_direction<double>(const Vec3<double> &);

} // namespace pyrf
