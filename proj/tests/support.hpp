// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit tests: small fields and hand-set heads.
//
#pragma once

#include "pyrf/camera.hpp"
#include "pyrf/field.hpp"
#include "pyrf/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace pyrf::test {

/// A field small enough for finite differences and exhaustive loops.
inline FieldConfig small_field(int levels, GridSharing sharing = GridSharing::shared) {
    FieldConfig c;
    c.levels = levels;
    c.sharing = sharing;
    c.grid.num_levels = 4;
    c.grid.base_resolution = 4.0;
    c.grid.per_level_scale = 2.0;
    c.grid.table_size = 1u << 10;
    return c;
}

/// Makes every head output a constant: sigma_raw = sigma[l], colour_raw = colour[l].
template <class T>
void set_constant_heads(PyramidField<T> &field, const std::vector<T> &sigma, const std::vector<Rgb<T>> &colour) {
    auto vals = field.params().values();
    for (int l = 0; l < field.num_levels(); ++l) {
        const auto &hl = field.head_layout(l);
        const auto seg = field.params().segment(PyramidField<T>::head_segment(l));
        std::fill(vals.begin() + seg.offset, vals.begin() + seg.offset + seg.size, T(0));
        vals[hl.b2] = sigma[l];
        for (int c = 0; c < 3; ++c) vals[hl.b5 + c] = colour[l][c];
    }
}

/// Rescales grid tables so features are O(1) rather than the 1e-4 init.
template <class T>
void randomize_grids(PyramidField<T> &field, std::uint64_t seed, double amplitude = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-amplitude, amplitude);
    auto vals = field.params().values();
    for (const auto &seg : field.params().segments()) {
        if (seg.name.rfind("grid", 0) != 0) continue;
        for (std::size_t i = 0; i < seg.size; ++i) vals[seg.offset + i] = T(uni(rng));
    }
}

inline Vec3d random_unit(std::mt19937_64 &rng) {
    std::normal_distribution<double> n;
    Vec3d v(n(rng), n(rng), n(rng));
    return v.normalized();
}

/// 8x8 camera looking at the origin from about 1.6 units away.
inline Camera test_camera(int size = 8) {
    Camera c;
    c.width = c.height = size;
    c.focal = 0.5 * size / std::tan(0.35);
    c.pose = look_at(Vec3d(0.3, -0.2, 1.6), Vec3d::Zero(), Vec3d::UnitY());
    c.near = 0.6;
    c.far = 2.6;
    return c;
}

/// Rays from random orbits, distances and focal lengths, all crossing the unit box.
inline std::vector<Ray<double>> random_rays(int n, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Ray<double>> rays;
    const Camera c = test_camera(64);
    for (int i = 0; i < n; ++i) {
        Camera cc = c;
        const double d = 0.9 + 2.0 * u(rng);
        cc.pose = look_at(random_unit(rng) * d, Vec3d::Zero(), Vec3d::UnitZ() + 0.1 * random_unit(rng));
        cc.focal *= 0.5 + 4.0 * u(rng);
        cc.near = std::max(0.05, d - 0.87);
        cc.far = d + 0.87;
        rays.push_back(generate_ray<double>(cc, Pixel{int(u(rng) * 64), int(u(rng) * 64)}));
    }
    return rays;
}

inline Ray<float> to_float(const Ray<double> &r) {
    Ray<float> f;
    f.origin = r.origin.cast<float>();
    f.direction = r.direction.cast<float>();
    f.footprint_rate = float(r.footprint_rate);
    f.near = float(r.near);
    f.far = float(r.far);
    return f;
}

} // namespace pyrf::test
