// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// Procedural ground-truth scenes and a supersampled ray tracer that renders
// them. Shading is emissive albedo only: a pixel is the mean albedo of the
// first surfaces hit by its jittered primary rays, white on a miss.
//
#pragma once

#include "pyrf/camera.hpp"
#include "pyrf/common.hpp"
#include "pyrf/image.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pyrf {

enum class SceneKind { slanted_checkerboard, brick_wall, colored_spheres };

const char *to_string(SceneKind k);
SceneKind parse_scene_kind(const std::string &s);

enum class Pattern { solid, checker, bricks };

/// Finite planar rectangle centred at `center`, spanned by unit axes u and v.
struct Quad {
    Vec3d center = Vec3d::Zero();
    Vec3d u = Vec3d::UnitX();
    Vec3d v = Vec3d::UnitY();
    double half_u = 0.5;
    double half_v = 0.5;
    Pattern pattern = Pattern::solid;
    Rgb<double> color_a = Rgb<double>::Zero();
    Rgb<double> color_b = Rgb<double>::Ones();
    double period = 0.05;  // checker square side, or brick length (brick height is half)
    double mortar = 0.0;   // mortar line width for bricks

    Vec3d normal() const { return u.cross(v).normalized(); }
};

struct Sphere {
    Vec3d center = Vec3d::Zero();
    double radius = 0.1;
    Rgb<double> color = Rgb<double>::Ones();
};

struct Hit {
    double t = 0.0;
    Rgb<double> albedo = Rgb<double>::Zero();
};

struct ProceduralScene {
    SceneKind kind = SceneKind::colored_spheres;
    std::vector<Quad> quads;
    std::vector<Sphere> spheres;
    Rgb<double> background = Rgb<double>::Ones();
    /// Cameras orbit within `view_cone` radians of this axis, looking at the origin.
    Vec3d view_axis = Vec3d::UnitZ();
    double view_cone = 1.0;

    /// Nearest hit with t > t_min along a unit-direction ray.
    std::optional<Hit> intersect(const Vec3d &origin, const Vec3d &dir, double t_min = 1e-9) const;
    Rgb<double> radiance(const Vec3d &origin, const Vec3d &dir) const;
};

ProceduralScene make_scene(SceneKind kind);

/// Albedo of a quad at a point on it.
Rgb<double> quad_albedo(const Quad &q, const Vec3d &p);

struct TraceOptions {
    int supersample = 64;  // rays per pixel; must be a perfect square
    std::uint64_t seed = 0;
};

/// Each pixel is the mean radiance of supersample stratified, jittered rays.
/// Deterministic in (options.seed, pixel).
Image trace_reference(const ProceduralScene &scene, const Camera &camera, const TraceOptions &options);

/// Per-pixel variance of the mean estimator of trace_reference (sample variance / n).
Image trace_variance(const ProceduralScene &scene, const Camera &camera, const TraceOptions &options);

} // namespace pyrf
