// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "pyrf/camera.hpp"
#include "pyrf/common.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace pyrf {

/// A point sample standing for the frustum slice [t0, t1] of its ray.
template <class T>
struct FrustumSample {
    Vec3<T> x = Vec3<T>::Zero();
    Vec3<T> d = Vec3<T>(0, 0, -1);
    T t = T(0);   // distance of x along the ray
    T t0 = T(0);
    T t1 = T(0);
    T delta = T(0);            // t1 - t0
    T footprint_width = T(0);  // footprint_rate * t
    T volume = T(0);           // footprint_width^2 * delta
};

/// Coarse grid of decayed density estimates with a derived occupancy bit per cell.
class OccupancyGrid {
public:
    OccupancyGrid() = default;
    explicit OccupancyGrid(const Aabb &bounds, int resolution = 64, double threshold = 0.01, double decay = 0.95);

    const Aabb &bounds() const { return bounds_; }
    int resolution() const { return resolution_; }
    double threshold() const { return threshold_; }
    double decay() const { return decay_; }
    std::size_t num_cells() const { return estimates_.size(); }

    /// Cell containing p, or -1 outside the bounds.
    std::int64_t cell_of(const Vec3d &p) const;
    Vec3d cell_min(std::size_t cell) const;
    Vec3d cell_size() const { return bounds_.extent() / double(resolution_); }

    template <class T>
    bool occupied(const Vec3<T> &p) const {
        const std::int64_t c = cell_of(p.template cast<double>());
        return c >= 0 && bits_[std::size_t(c)] != 0;
    }
    bool occupied_cell(std::size_t cell) const { return bits_[cell] != 0; }

    /// estimate = max(decay * estimate, value); bit = estimate > threshold.
    void update(std::size_t cell, double value);
    void set_all(double estimate);

    double estimate(std::size_t cell) const { return estimates_[cell]; }
    std::size_t occupied_count() const;

    const std::vector<float> &estimates() const { return estimates_; }
    const std::vector<std::uint8_t> &bits() const { return bits_; }
    /// Restores serialized state; sizes must match.
    void assign(std::vector<float> estimates, std::vector<std::uint8_t> bits);

private:
    Aabb bounds_;
    int resolution_ = 0;
    double threshold_ = 0.01;
    double decay_ = 0.95;
    std::vector<float> estimates_;
    std::vector<std::uint8_t> bits_;
};

/// n strata partitioning [ray.near, ray.far]. With an rng the sample position is
/// uniform within its stratum, otherwise it is the stratum midpoint. When a grid
/// is given, samples in unoccupied cells (or outside its bounds) are dropped.
template <class T>
std::vector<FrustumSample<T>> sample_ray(const Ray<T> &ray, int n, const OccupancyGrid *occupancy,
                                         std::mt19937_64 *rng);

} // namespace pyrf
