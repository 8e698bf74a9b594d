// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pyrf {

template <class T>
using Vec3 = Eigen::Matrix<T, 3, 1>;
using Vec3d = Vec3<double>;

/// std::vector with Eigen's maximum alignment. Eigen picks kernel paths from
/// pointer alignment, so buffers it maps need a fixed alignment for results
/// to be reproducible across allocations.
template <class T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

template <class T>
using Rgb = Eigen::Matrix<T, 3, 1>;

/// Base of every error this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments, malformed configs or manifests. CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Filesystem and codec failures. CLI exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Axis-aligned world box. The default is the unit cube centred on the origin.
struct Aabb {
    Vec3d lo{-0.5, -0.5, -0.5};
    Vec3d hi{0.5, 0.5, 0.5};

    Vec3d extent() const { return hi - lo; }
    bool contains(const Vec3d &p) const {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
    bool operator==(const Aabb &o) const { return lo == o.lo && hi == o.hi; }
};

/// Ray/box slab test. Returns false on a miss; otherwise [t0, t1] with t0 may be negative.
bool intersect_aabb(const Aabb &box, const Vec3d &origin, const Vec3d &dir, double &t0, double &t1);

} // namespace pyrf
