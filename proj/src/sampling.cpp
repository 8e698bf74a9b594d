// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace pyrf {

OccupancyGrid::OccupancyGrid(const Aabb &bounds, int resolution, double threshold, double decay)
    : bounds_(bounds), resolution_(resolution), threshold_(threshold), decay_(decay) {
    if (resolution < 1) throw ValidationError("occupancy grid: resolution must be >= 1");
    const std::size_t n = std::size_t(resolution) * resolution * resolution;
    estimates_.assign(n, 0.0f);
    bits_.assign(n, 0);
}

std::int64_t OccupancyGrid::cell_of(const Vec3d &p) const {
    std::int64_t idx[3];
    for (int a = 0; a < 3; ++a) {
        const double u = (p[a] - bounds_.lo[a]) / (bounds_.hi[a] - bounds_.lo[a]);
        if (!(u >= 0.0 && u <= 1.0)) return -1;
        idx[a] = std::min<std::int64_t>(std::int64_t(u * resolution_), resolution_ - 1);
    }
    return idx[0] + resolution_ * (idx[1] + std::int64_t(resolution_) * idx[2]);
}

Vec3d OccupancyGrid::cell_min(std::size_t cell) const {
    const std::size_t r = std::size_t(resolution_);
    const Vec3d ijk(double(cell % r), double((cell / r) % r), double(cell / (r * r)));
    return bounds_.lo + ijk.cwiseProduct(cell_size());
}

void OccupancyGrid::update(std::size_t cell, double value) {
    const double e = std::max(decay_ * double(estimates_[cell]), value);
    estimates_[cell] = float(e);
    bits_[cell] = estimates_[cell] > threshold_ ? 1 : 0;
}

void OccupancyGrid::set_all(double estimate) {
    std::fill(estimates_.begin(), estimates_.end(), float(estimate));
    std::fill(bits_.begin(), bits_.end(), float(estimate) > threshold_ ? 1 : 0);
}

std::size_t OccupancyGrid::occupied_count() const {
    return std::size_t(std::count(bits_.begin(), bits_.end(), std::uint8_t(1)));
}

void OccupancyGrid::assign(std::vector<float> estimates, std::vector<std::uint8_t> bits) {
    if (estimates.size() != estimates_.size() || bits.size() != bits_.size()) {
        throw ValidationError("occupancy grid: serialized size mismatch");
    }
    estimates_ = std::move(estimates);
    bits_ = std::move(bits);
}

template <class T>
std::vector<FrustumSample<T>> sample_ray(const Ray<T> &ray, int n, const OccupancyGrid *occupancy,
                                         std::mt19937_64 *rng) {
    if (n < 1) throw ValidationError("sample_ray: need at least one sample");
    std::vector<FrustumSample<T>> out;
    const double near = double(ray.near), far = double(ray.far);
    const double step = (far - near) / n;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int k = 0; k < n; ++k) {
        const double t0 = near + step * k;
        const double t1 = k + 1 == n ? far : near + step * (k + 1);
        // Always consume the draw so the rng stream does not depend on occupancy.
        const double u = rng ? uni(*rng) : 0.5;
        const T t = T(t0 + (t1 - t0) * u);
        const Vec3<T> x = ray.origin + ray.direction * t;
        if (occupancy && !occupancy->occupied(x)) continue;
        FrustumSample<T> s;
        s.x = x;
        s.d = ray.direction;
        s.t = t;
        s.t0 = T(t0);
        s.t1 = T(t1);
        s.delta = T(t1 - t0);
        s.footprint_width = ray.footprint_rate * t;
        s.volume = s.footprint_width * s.footprint_width * s.delta;
        out.push_back(s);
    }
    return out;
}

template std::vector<FrustumSample<float>> sample_ray<float>(const Ray<float> &, int, const OccupancyGrid *,
                                                             std::mt19937_64 *);
template std::vector<FrustumSample<double>> sample_ray<double>(const Ray<double> &, int, const OccupancyGrid *,
                                                               std::mt19937_64 *);

} // namespace pyrf
