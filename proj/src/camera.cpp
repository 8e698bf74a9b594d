// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/camera.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pyrf {

bool intersect_aabb(const Aabb &box, const Vec3d &origin, const Vec3d &dir, double &t0, double &t1) {
    t0 = -std::numeric_limits<double>::infinity();
    t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (origin[a] < box.lo[a] || origin[a] > box.hi[a]) return false;
            continue;
        }
        double ta = (box.lo[a] - origin[a]) / dir[a];
        double tb = (box.hi[a] - origin[a]) / dir[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return t0 <= t1;
}

void Camera::validate() const {
    if (width < 1 || height < 1) throw ValidationError("camera: non-positive image size");
    if (!(focal > 0.0)) throw ValidationError("camera: focal must be > 0");
    if (!(near < far) || near < 0.0) throw ValidationError("camera: require 0 <= near < far");
    const Eigen::Matrix3d r = pose.leftCols<3>();
    if (!((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-6)) {
        throw ValidationError("camera: pose rotation is not orthonormal");
    }
    if (!pose.allFinite()) throw ValidationError("camera: non-finite pose");
}

Camera Camera::scaled(double factor) const {
    Camera c = *this;
    c.width = int(std::floor(width * factor));
    c.height = int(std::floor(height * factor));
    c.focal = focal * factor;
    return c;
}

Vec3d Camera::direction_at(double px, double py) const {
    const Vec3d local((px - 0.5 * width) / focal, -(py - 0.5 * height) / focal, -1.0);
    return pose.leftCols<3>() * local;
}

template <class T>
Ray<T> generate_ray(const Camera &camera, Pixel pixel) {
    if (pixel.x < 0 || pixel.y < 0 || pixel.x >= camera.width || pixel.y >= camera.height) {
        throw ValidationError("pixel (" + std::to_string(pixel.x) + ", " + std::to_string(pixel.y) +
                              ") outside " + std::to_string(camera.width) + "x" + std::to_string(camera.height));
    }
    const Vec3d d = camera.direction_at(pixel.x + 0.5, pixel.y + 0.5).normalized();
    Ray<T> r;
    r.origin = camera.origin().cast<T>();
    r.direction = d.cast<T>();
    r.footprint_rate = T(1.0 / camera.focal);
    r.near = T(camera.near);
    r.far = T(camera.far);
    return r;
}

template <class T>
std::vector<Ray<T>> generate_rays(const Camera &camera, const std::vector<Pixel> &pixels) {
    std::vector<Ray<T>> rays;
    rays.reserve(pixels.size());
    for (const Pixel &p : pixels) rays.push_back(generate_ray<T>(camera, p));
    return rays;
}

Pose look_at(const Vec3d &eye, const Vec3d &target, const Vec3d &up) {
    const Vec3d back = (eye - target).normalized();
    Vec3d right = up.cross(back);
    if (right.norm() < 1e-9) right = Vec3d(1, 0, 0).cross(back);
    right.normalize();
    const Vec3d true_up = back.cross(right);
    Pose p;
    p.col(0) = right;
    p.col(1) = true_up;
    p.col(2) = back;
    p.col(3) = eye;
    return p;
}

template Ray<float> generate_ray<float>(const Camera &, Pixel);
template Ray<double> generate_ray<double>(const Camera &, Pixel);
template std::vector<Ray<float>> generate_rays<float>(const Camera &, const std::vector<Pixel> &);
template std::vector<Ray<double>> generate_rays<double>(const Camera &, const std::vector<Pixel> &);

} // namespace pyrf
