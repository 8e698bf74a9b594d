// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/composite.hpp"

#include <cmath>
#include <string>

namespace pyrf {

namespace {

void check_aligned(std::size_t a, std::size_t b, std::size_t c) {
    if (a != b || a != c) {
        throw ValidationError("composite: misaligned inputs (" + std::to_string(a) + " sigma, " + std::to_string(b) +
                              " delta, " + std::to_string(c) + " colors)");
    }
}

} // namespace

template <class T>
CompositeResult<T> composite(std::span<const T> sigma, std::span<const T> delta, std::span<const Rgb<T>> color,
                             const Rgb<T> &background) {
    check_aligned(sigma.size(), delta.size(), color.size());
    CompositeResult<T> r;
    r.weights.resize(sigma.size());
    T trans = T(1);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const T keep = std::exp(-sigma[i] * delta[i]);
        const T w = trans * (T(1) - keep);
        r.weights[i] = w;
        r.color += w * color[i];
        trans *= keep;
    }
    r.residual = trans;
    r.color += trans * background;
    return r;
}

template <class T>
void composite_backward(std::span<const T> sigma, std::span<const T> delta, std::span<const Rgb<T>> color,
                        const Rgb<T> &background, const CompositeResult<T> &result, const Rgb<T> &d_out,
                        std::span<T> d_sigma, std::span<Rgb<T>> d_color) {
    check_aligned(sigma.size(), delta.size(), color.size());
    const std::size_t n = sigma.size();
    // Walk back to front carrying the colour contributed behind sample k.
    T behind = result.residual * background.dot(d_out);
    T trans_after = result.residual;
    for (std::size_t k = n; k-- > 0;) {
        const T ck = color[k].dot(d_out);
        d_color[k] = result.weights[k] * d_out;
        d_sigma[k] = delta[k] * (trans_after * ck - behind);
        behind += result.weights[k] * ck;
        trans_after += result.weights[k];
    }
}

template CompositeResult<float> composite<float>(std::span<const float>, std::span<const float>,
                                                 std::span<const Rgb<float>>, const Rgb<float> &);
template CompositeResult<double> composite<double>(std::span<const double>, std::span<const double>,
                                                   std::span<const Rgb<double>>, const Rgb<double> &);
template void composite_backward<float>(std::span<const float>, std::span<const float>, std::span<const Rgb<float>>,
                                        const Rgb<float> &, const CompositeResult<float> &, const Rgb<float> &,
                                        std::span<float>, std::span<Rgb<float>>);
template void composite_backward<double>(std::span<const double>, std::span<const double>,
                                         std::span<const Rgb<double>>, const Rgb<double> &,
                                         const CompositeResult<double> &, const Rgb<double> &, std::span<double>,
                                         std::span<Rgb<double>>);

} // namespace pyrf
