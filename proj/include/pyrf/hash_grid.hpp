// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "pyrf/common.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pyrf {

struct HashGridConfig {
    int num_levels = 8;
    double base_resolution = 16.0;
    double per_level_scale = 1.6;
    int features_per_level = 2;
    std::uint32_t table_size = 1u << 16;

    /// Throws ValidationError if table_size is not a power of two, scale <= 1, or a count is < 1.
    void validate() const;
    int output_dim() const { return num_levels * features_per_level; }
    bool operator==(const HashGridConfig &) const = default;
};

/// Multi-resolution spatial hash grid with trilinear interpolation. The grid
/// owns no storage: tables live in a flat parameter array starting at `offset`.
class HashGrid {
public:
    HashGrid() = default;
    HashGrid(const HashGridConfig &config, const Aabb &bounds, std::size_t offset = 0);

    const HashGridConfig &config() const { return config_; }
    const Aabb &bounds() const { return bounds_; }
    std::size_t offset() const { return offset_; }
    std::size_t num_params() const { return num_params_; }
    int output_dim() const { return config_.output_dim(); }

    /// Integer lattice resolution of a grid level (cells per normalized unit).
    std::uint32_t resolution(int level) const { return levels_[level].resolution; }
    bool is_dense(int level) const { return levels_[level].dense; }
    std::uint32_t level_entries(int level) const { return levels_[level].entries; }

    /// Table slot of integer vertex (ix, iy, iz) on a level.
    std::uint32_t vertex_index(int level, std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const;
    /// Parameter index of feature `f` at table slot `slot` on `level`.
    std::size_t param_index(int level, std::uint32_t slot, int f) const {
        return offset_ + levels_[level].offset + std::size_t(slot) * config_.features_per_level + f;
    }

    /// Concatenated features of the first `num_levels` grid levels (all when
    /// negative). Writes num_levels * features_per_level values.
    template <class T>
    void encode(std::span<const T> params, const Vec3<T> &x, std::span<T> out, int num_levels = -1) const;

    /// Adds d(out . cotangent)/d table into grads (same layout as params).
    template <class T>
    void encode_backward(const Vec3<T> &x, std::span<const T> cotangent, std::span<T> grads,
                         int num_levels = -1) const;

    /// Fills this grid's tables with U(-1e-4, 1e-4).
    template <class T, class Rng>
    void initialize(std::span<T> params, Rng &rng) const {
        std::uniform_real_distribution<double> uni(-1e-4, 1e-4);
        for (std::size_t i = 0; i < num_params_; ++i) params[offset_ + i] = T(uni(rng));
    }

private:
    struct Level {
        std::uint32_t resolution = 0;
        std::uint32_t entries = 0;
        std::size_t offset = 0;
        bool dense = false;
    };

    template <class T, class Visit>
    void for_each_corner(const Vec3<T> &x, int num_levels, Visit &&visit) const;

    HashGridConfig config_;
    Aabb bounds_;
    std::size_t offset_ = 0;
    std::size_t num_params_ = 0;
    std::vector<Level> levels_;
};

} // namespace pyrf
