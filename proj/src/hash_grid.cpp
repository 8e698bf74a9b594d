// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/hash_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pyrf {

void HashGridConfig::validate() const {
    if (num_levels < 1) throw ValidationError("hash grid: num_levels must be >= 1");
    if (features_per_level < 1) throw ValidationError("hash grid: features_per_level must be >= 1");
    if (!(per_level_scale > 1.0)) throw ValidationError("hash grid: per_level_scale must be > 1");
    if (!(base_resolution >= 1.0)) throw ValidationError("hash grid: base_resolution must be >= 1");
    if (table_size == 0 || (table_size & (table_size - 1)) != 0) {
        throw ValidationError("hash grid: table_size " + std::to_string(table_size) + " is not a power of two");
    }
}

HashGrid::HashGrid(const HashGridConfig &config, const Aabb &bounds, std::size_t offset)
    : config_(config), bounds_(bounds), offset_(offset) {
    config_.validate();
    std::size_t total = 0;
    levels_.resize(config_.num_levels);
    for (int l = 0; l < config_.num_levels; ++l) {
        Level &lv = levels_[l];
        const double res = config_.base_resolution * std::pow(config_.per_level_scale, l);
        lv.resolution = std::max<std::uint32_t>(1, std::uint32_t(std::lround(res)));
        const double side = double(lv.resolution) + 1.0;
        const double dense_count = side * side * side;
        lv.dense = dense_count <= double(config_.table_size);
        lv.entries = lv.dense ? std::uint32_t(dense_count) : config_.table_size;
        lv.offset = total;
        total += std::size_t(lv.entries) * config_.features_per_level;
    }
    num_params_ = total;
}

std::uint32_t HashGrid::vertex_index(int level, std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const {
    const Level &lv = levels_[level];
    if (lv.dense) {
        const std::uint32_t side = lv.resolution + 1;
        return ix + side * (iy + side * iz);
    }
    const std::uint32_t h = (ix * 1u) ^ (iy * 2654435761u) ^ (iz * 805459861u);
    return h & (config_.table_size - 1);
}

template <class T, class Visit>
void HashGrid::for_each_corner(const Vec3<T> &x, int num_levels, Visit &&visit) const {
    T u[3];
    for (int a = 0; a < 3; ++a) {
        const T lo = T(bounds_.lo[a]);
        const T span = T(bounds_.hi[a] - bounds_.lo[a]);
        u[a] = std::clamp((x[a] - lo) / span, T(0), T(1));
    }
    const int n = num_levels < 0 ? config_.num_levels : std::min(num_levels, config_.num_levels);
    for (int l = 0; l < n; ++l) {
        const std::uint32_t res = levels_[l].resolution;
        std::uint32_t cell[3];
        T frac[3];
        for (int a = 0; a < 3; ++a) {
            const T p = u[a] * T(res);
            const std::uint32_t c = std::min<std::uint32_t>(std::uint32_t(p), res - 1);
            cell[a] = c;
            frac[a] = p - T(c);
        }
        for (int corner = 0; corner < 8; ++corner) {
            T weight = T(1);
            std::uint32_t v[3];
            for (int a = 0; a < 3; ++a) {
                const bool hi = (corner >> a) & 1;
                v[a] = cell[a] + (hi ? 1u : 0u);
                weight *= hi ? frac[a] : T(1) - frac[a];
            }
            visit(l, vertex_index(l, v[0], v[1], v[2]), weight);
        }
    }
}

template <class T>
void HashGrid::encode(std::span<const T> params, const Vec3<T> &x, std::span<T> out, int num_levels) const {
    const int n = num_levels < 0 ? config_.num_levels : std::min(num_levels, config_.num_levels);
    const int fpl = config_.features_per_level;
    std::fill(out.begin(), out.begin() + std::size_t(n) * fpl, T(0));
    for_each_corner(x, n, [&](int l, std::uint32_t slot, T weight) {
        const T *feat = params.data() + param_index(l, slot, 0);
        T *dst = out.data() + std::size_t(l) * fpl;
        for (int f = 0; f < fpl; ++f) dst[f] += weight * feat[f];
    });
}

template <class T>
void HashGrid::encode_backward(const Vec3<T> &x, std::span<const T> cotangent, std::span<T> grads,
                               int num_levels) const {
    const int fpl = config_.features_per_level;
    for_each_corner(x, num_levels, [&](int l, std::uint32_t slot, T weight) {
        T *g = grads.data() + param_index(l, slot, 0);
        const T *c = cotangent.data() + std::size_t(l) * fpl;
        for (int f = 0; f < fpl; ++f) g[f] += weight * c[f];
    });
}

template void HashGrid::encode<float>(std::span<const float>, const Vec3<float> &, std::span<float>, int) const;
template void HashGrid::encode<double>(std::span<const double>, const Vec3<double> &, std::span<double>, int) const;
template void HashGrid::encode_backward<float>(const Vec3<float> &, std::span<const float>, std::span<float>,
                                               int) const;
template void HashGrid::encode_backward<double>(const Vec3<double> &, std::span<const double>, std::span<double>,
                                                int) const;

} // namespace pyrf
