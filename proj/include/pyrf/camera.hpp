// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "pyrf/common.hpp"

#include <Eigen/Core>

#include <vector>

namespace pyrf {

using Pose = Eigen::Matrix<double, 3, 4>;

/// Pinhole camera. Looks down -z in camera space, x right, y up; the principal
/// point is the image centre.
struct Camera {
    int width = 0;
    int height = 0;
    double focal = 0.0;
    Pose pose = Pose::Identity();  // camera-to-world
    double near = 0.0;
    double far = 0.0;

    void validate() const;
    Vec3d origin() const { return pose.col(3); }
    Vec3d forward() const { return -pose.col(2); }
    /// Same field of view, resolution scaled by `factor` (floor), focal scaled by `factor`.
    Camera scaled(double factor) const;
    /// Direction through a (possibly fractional) image-plane position, unnormalized.
    Vec3d direction_at(double px, double py) const;
};

template <class T>
struct Ray {
    Vec3<T> origin = Vec3<T>::Zero();
    Vec3<T> direction = Vec3<T>(0, 0, -1);
    /// World-space footprint width per unit distance along the ray.
    T footprint_rate = T(0);
    T near = T(0);
    T far = T(1);
};

struct Pixel {
    int x = 0;
    int y = 0;
};

/// One ray through each pixel centre. footprint_rate = 1 / focal.
template <class T>
std::vector<Ray<T>> generate_rays(const Camera &camera, const std::vector<Pixel> &pixels);

template <class T>
Ray<T> generate_ray(const Camera &camera, Pixel pixel);

/// Camera at `eye` looking at `target` with world up `up`.
Pose look_at(const Vec3d &eye, const Vec3d &target, const Vec3d &up);

} // namespace pyrf
