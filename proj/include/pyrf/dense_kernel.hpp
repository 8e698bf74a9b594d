// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// out = W * X + b for row-major W (rows x depth) and X (depth x n), where each
// column of X is one sample. Every output element is the fma chain
// b[j] -> +W[j][0]x[0] -> ... -> +W[j][depth-1]x[depth-1], so a column gives
// the same bits whether it is evaluated alone or inside a large batch.
//
#pragma once

#include <cmath>
#include <cstddef>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace pyrf::kernel {

namespace detail {

template <class T>
inline void dense_scalar_columns(const T *w, const T *b, const T *x, T *out, int rows, int depth, std::size_t n,
                                 std::size_t n_begin) {
    for (std::size_t c = n_begin; c < n; ++c) {
        for (int j = 0; j < rows; ++j) {
            T acc = b[j];
            const T *wr = w + std::size_t(j) * depth;
            for (int k = 0; k < depth; ++k) acc = std::fma(wr[k], x[std::size_t(k) * n + c], acc);
            out[std::size_t(j) * n + c] = acc;
        }
    }
}

#if defined(__AVX512F__)
template <class T>
struct Simd;

template <>
struct Simd<float> {
    using V = __m512;
    static constexpr int lanes = 16;
    static V load(const float *p) { return _mm512_loadu_ps(p); }
    static void store(float *p, V v) { _mm512_storeu_ps(p, v); }
    static V broadcast(float v) { return _mm512_set1_ps(v); }
    static V fma(V a, V b, V c) { return _mm512_fmadd_ps(a, b, c); }
};

template <>
struct Simd<double> {
    using V = __m512d;
    static constexpr int lanes = 8;
    static V load(const double *p) { return _mm512_loadu_pd(p); }
    static void store(double *p, V v) { _mm512_storeu_pd(p, v); }
    static V broadcast(double v) { return _mm512_set1_pd(v); }
    static V fma(V a, V b, V c) { return _mm512_fmadd_pd(a, b, c); }
};

// Processes columns [begin, n) in full vector blocks; returns the first unprocessed column.
template <class T, int RowBlock, int VecBlock>
inline std::size_t dense_simd(const T *w, const T *b, const T *x, T *out, int rows, int depth, std::size_t n,
                              std::size_t begin) {
    using S = Simd<T>;
    using V = typename S::V;
    constexpr std::size_t cols = std::size_t(S::lanes) * VecBlock;
    std::size_t c0 = begin;
    for (; c0 + cols <= n; c0 += cols) {
        int j0 = 0;
        for (; j0 + RowBlock <= rows; j0 += RowBlock) {
            V acc[RowBlock][VecBlock];
            for (int j = 0; j < RowBlock; ++j)
                for (int v = 0; v < VecBlock; ++v) acc[j][v] = S::broadcast(b[j0 + j]);
            const T *wr = w + std::size_t(j0) * depth;
            for (int k = 0; k < depth; ++k) {
                V xv[VecBlock];
                for (int v = 0; v < VecBlock; ++v) xv[v] = S::load(x + std::size_t(k) * n + c0 + v * S::lanes);
                for (int j = 0; j < RowBlock; ++j) {
                    const V wv = S::broadcast(wr[std::size_t(j) * depth + k]);
                    for (int v = 0; v < VecBlock; ++v) acc[j][v] = S::fma(wv, xv[v], acc[j][v]);
                }
            }
            for (int j = 0; j < RowBlock; ++j)
                for (int v = 0; v < VecBlock; ++v) S::store(out + std::size_t(j0 + j) * n + c0 + v * S::lanes, acc[j][v]);
        }
        for (; j0 < rows; ++j0) {
            V acc[VecBlock];
            for (int v = 0; v < VecBlock; ++v) acc[v] = S::broadcast(b[j0]);
            const T *wr = w + std::size_t(j0) * depth;
            for (int k = 0; k < depth; ++k) {
                const V wv = S::broadcast(wr[k]);
                for (int v = 0; v < VecBlock; ++v)
                    acc[v] = S::fma(wv, S::load(x + std::size_t(k) * n + c0 + v * S::lanes), acc[v]);
            }
            for (int v = 0; v < VecBlock; ++v) S::store(out + std::size_t(j0) * n + c0 + v * S::lanes, acc[v]);
        }
    }
    return c0;
}
#endif

} // namespace detail

template <class T>
inline void dense_forward(const T *w, const T *b, const T *x, T *out, int rows, int depth, std::size_t n) {
    std::size_t done = 0;
#if defined(__AVX512F__)
    done = detail::dense_simd<T, 6, 4>(w, b, x, out, rows, depth, n, done);
    done = detail::dense_simd<T, 6, 1>(w, b, x, out, rows, depth, n, done);
#endif
    detail::dense_scalar_columns(w, b, x, out, rows, depth, n, done);
}

} // namespace pyrf::kernel
