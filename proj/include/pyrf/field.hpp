// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// The learned scene: a multi-resolution hash grid (or one grid per pyramid
// level) feeding L independent heads. Each head is a density MLP
// (features -> 64 -> 16) followed by a colour MLP (15 geometry features +
// 16 SH coefficients -> 128 -> 128 -> 3).
//
// Head l sees only the coarsest view_levels(l) grid levels; finer slots of its
// input are zero. The finest head sees the whole grid.
//
#pragma once

#include "pyrf/autodiff.hpp"
#include "pyrf/common.hpp"
#include "pyrf/hash_grid.hpp"
#include "pyrf/sh_encoding.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pyrf {

enum class GridSharing { shared, separate };

const char *to_string(GridSharing s);
GridSharing parse_grid_sharing(const std::string &s);

struct FieldConfig {
    HashGridConfig grid;
    int levels = 8;
    GridSharing sharing = GridSharing::shared;
    Aabb bounds;

    void validate() const;
    bool operator==(const FieldConfig &) const = default;
};

inline constexpr int kDensityHidden = 64;
inline constexpr int kGeoDim = 15;
inline constexpr int kDensityOut = 1 + kGeoDim;
inline constexpr int kColorIn = kGeoDim + kShDim;
inline constexpr int kColorHidden = 128;

/// Parameter count of one head for a given input feature width.
constexpr std::size_t head_param_count(int feature_dim) {
    const std::size_t d = std::size_t(feature_dim);
    return (d * kDensityHidden + kDensityHidden) + (kDensityHidden * kDensityOut + kDensityOut) +
           (kColorIn * kColorHidden + kColorHidden) + (kColorHidden * kColorHidden + kColorHidden) +
           (kColorHidden * 3 + 3);
}

/// Raw (pre-activation) head output.
template <class T>
struct HeadRaw {
    T sigma = 0;
    std::array<T, 3> color{};
};

/// Activated density and colour.
template <class T>
struct FieldSample {
    T sigma = 0;
    Rgb<T> color = Rgb<T>::Zero();
};

template <class T>
FieldSample<T> activate_raw(const HeadRaw<T> &raw);

/// Column-major-by-sample scratch for a batched head evaluation. Callers fill
/// `features` (feature_dim x n) and `sh` (16 x n); the rest is produced by
/// head_forward and consumed by head_backward.
template <class T>
struct HeadBatch {
    std::size_t n = 0;
    AlignedVector<T> features, sh;
    AlignedVector<T> hidden1, density_out, color_in, hidden2, hidden3, color_out;
    // head_backward scratch, kept to avoid reallocating per call.
    mutable AlignedVector<T> d_hidden3, d_hidden2, d_density, d_hidden1;

    void resize(std::size_t count, int feature_dim);
};

template <class T>
class PyramidField {
public:
    struct HeadLayout {
        std::size_t begin = 0;
        std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0, w4 = 0, b4 = 0, w5 = 0, b5 = 0;
    };

    explicit PyramidField(const FieldConfig &config);

    /// Grid features U(-1e-4, 1e-4); weights U(+-sqrt(6 / fan_in)); biases 0.
    void initialize(std::uint64_t seed);

    const FieldConfig &config() const { return config_; }
    int num_levels() const { return config_.levels; }
    int feature_dim() const { return config_.grid.output_dim(); }
    int view_levels(int head) const;
    int grid_index(int head) const { return config_.sharing == GridSharing::shared ? 0 : head; }
    const HashGrid &grid_of(int head) const { return grids_[grid_index(head)]; }
    const std::vector<HashGrid> &grids() const { return grids_; }
    const HeadLayout &head_layout(int level) const { return heads_.at(level); }
    static std::string head_segment(int level) { return "head" + std::to_string(level); }

    ad::ParameterStore<T> &params() { return store_; }
    const ad::ParameterStore<T> &params() const { return store_; }

    /// Head `head`'s view of the grid at x: feature_dim values, zero beyond view_levels(head).
    void encode(int head, const Vec3<T> &x, std::span<T> out) const;
    void encode_backward(int head, const Vec3<T> &x, std::span<const T> cotangent, std::span<T> grads) const;

    /// One head on one sample through the batched kernel with n = 1.
    HeadRaw<T> eval_head_raw(int level, std::span<const T> features, std::span<const T, kShDim> sh) const;

    /// Activated (sigma, colour) of head `level` at x seen from direction d.
    FieldSample<T> eval_head(int level, const Vec3<T> &x, const Vec3<T> &d) const;

    /// Full forward of a head over batch.n columns.
    void head_forward(int level, HeadBatch<T> &batch) const;
    /// Density MLP only; fills batch.density_out.
    void density_forward(int level, HeadBatch<T> &batch) const;

    /// Backward of head_forward. d_sigma (n) and d_color (3 x n) are cotangents
    /// of the raw outputs. Adds parameter gradients into `grads` and, when
    /// d_features is non-null, writes feature cotangents (feature_dim x n).
    void head_backward(int level, const HeadBatch<T> &batch, const T *d_sigma, const T *d_color,
                       std::span<T> grads, T *d_features) const;

private:
    void check_level(int level) const;

    FieldConfig config_;
    std::vector<HashGrid> grids_;
    std::vector<HeadLayout> heads_;
    ad::ParameterStore<T> store_;
};

} // namespace pyrf
