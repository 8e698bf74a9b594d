// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/scene.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace pyrf {

const char *to_string(SceneKind k) {
    switch (k) {
    case SceneKind::slanted_checkerboard: return "slanted_checkerboard";
    case SceneKind::brick_wall: return "brick_wall";
    case SceneKind::colored_spheres: return "colored_spheres";
    }
    return "?";
}

SceneKind parse_scene_kind(const std::string &s) {
    for (SceneKind k : {SceneKind::slanted_checkerboard, SceneKind::brick_wall, SceneKind::colored_spheres}) {
        if (s == to_string(k)) return k;
    }
    throw ValidationError("unknown scene '" + s + "' (expected slanted_checkerboard|brick_wall|colored_spheres)");
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double brick_tint(std::int64_t row, std::int64_t col) {
    const std::uint64_t h = splitmix(std::uint64_t(row) * 0x1f1f1f1full ^ std::uint64_t(col));
    return 0.8 + 0.3 * double(h >> 11) / double(1ull << 53);
}

Quad rotated_quad(const Eigen::Matrix3d &rot) {
    Quad q;
    q.u = rot * Vec3d::UnitX();
    q.v = rot * Vec3d::UnitY();
    return q;
}

} // namespace

Rgb<double> quad_albedo(const Quad &q, const Vec3d &p) {
    const Vec3d rel = p - q.center;
    const double a = rel.dot(q.u), b = rel.dot(q.v);
    switch (q.pattern) {
    case Pattern::solid: return q.color_a;
    case Pattern::checker: {
        const auto i = std::int64_t(std::floor(a / q.period)) + std::int64_t(std::floor(b / q.period));
        return (i & 1) ? q.color_b : q.color_a;
    }
    case Pattern::bricks: {
        const double h = 0.5 * q.period;
        const auto row = std::int64_t(std::floor(b / h));
        const double shifted = a + ((row & 1) ? 0.5 * q.period : 0.0);
        const auto col = std::int64_t(std::floor(shifted / q.period));
        const double fu = shifted - double(col) * q.period;
        const double fv = b - double(row) * h;
        if (fu < q.mortar || fv < q.mortar) return q.color_b;
        return (q.color_a * brick_tint(row, col)).cwiseMin(1.0);
    }
    }
    return q.color_a;
}

std::optional<Hit> ProceduralScene::intersect(const Vec3d &origin, const Vec3d &dir, double t_min) const {
    std::optional<Hit> best;
    for (const Quad &q : quads) {
        const Vec3d n = q.normal();
        const double denom = n.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double t = n.dot(q.center - origin) / denom;
        if (!(t > t_min) || (best && t >= best->t)) continue;
        const Vec3d p = origin + t * dir;
        const Vec3d rel = p - q.center;
        if (std::abs(rel.dot(q.u)) > q.half_u || std::abs(rel.dot(q.v)) > q.half_v) continue;
        best = Hit{t, quad_albedo(q, p)};
    }
    for (const Sphere &s : spheres) {
        const Vec3d oc = origin - s.center;
        const double b = oc.dot(dir);
        const double c = oc.squaredNorm() - s.radius * s.radius;
        const double disc = b * b - c;
        if (disc < 0.0) continue;
        const double root = std::sqrt(disc);
        double t = -b - root;
        if (!(t > t_min)) t = -b + root;
        if (!(t > t_min) || (best && t >= best->t)) continue;
        best = Hit{t, s.color};
    }
    return best;
}

Rgb<double> ProceduralScene::radiance(const Vec3d &origin, const Vec3d &dir) const {
    const auto hit = intersect(origin, dir);
    return hit ? hit->albedo : background;
}

ProceduralScene make_scene(SceneKind kind) {
    ProceduralScene s;
    s.kind = kind;
    switch (kind) {
    case SceneKind::slanted_checkerboard: {
        const Eigen::Matrix3d rot = (Eigen::AngleAxisd(0.35, Vec3d::UnitZ()) * Eigen::AngleAxisd(-0.9, Vec3d::UnitX()))
                                        .toRotationMatrix();
        Quad q = rotated_quad(rot);
        q.half_u = q.half_v = 0.35;
        q.pattern = Pattern::checker;
        q.color_a = Rgb<double>::Zero();
        q.color_b = Rgb<double>::Ones();
        q.period = 0.025;
        s.quads.push_back(q);
        s.view_axis = q.normal();
        s.view_cone = 0.7;
        break;
    }
    case SceneKind::brick_wall: {
        const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.25, Vec3d::UnitY()).toRotationMatrix();
        Quad q = rotated_quad(rot);
        q.half_u = q.half_v = 0.4;
        q.pattern = Pattern::bricks;
        q.color_a = Rgb<double>(0.62, 0.24, 0.16);
        q.color_b = Rgb<double>(0.86, 0.84, 0.80);
        q.period = 0.06;
        q.mortar = 0.006;
        s.quads.push_back(q);
        s.view_axis = q.normal();
        s.view_cone = 0.6;
        break;
    }
    case SceneKind::colored_spheres:
        s.spheres = {
            {Vec3d(0.0, 0.0, 0.0), 0.18, Rgb<double>(0.85, 0.15, 0.12)},
            {Vec3d(0.27, 0.1, 0.05), 0.10, Rgb<double>(0.15, 0.75, 0.2)},
            {Vec3d(-0.25, -0.1, 0.1), 0.12, Rgb<double>(0.15, 0.25, 0.85)},
            {Vec3d(0.05, 0.28, -0.15), 0.10, Rgb<double>(0.9, 0.8, 0.1)},
            {Vec3d(-0.05, -0.27, -0.12), 0.11, Rgb<double>(0.75, 0.2, 0.7)},
        };
        s.view_axis = Vec3d::UnitZ();
        s.view_cone = 1.3;
        break;
    }
    return s;
}

namespace {

template <class PerPixel>
Image trace_image(const ProceduralScene &scene, const Camera &camera, const TraceOptions &options,
                  PerPixel &&reduce) {
    camera.validate();
    const int n = int(std::lround(std::sqrt(double(options.supersample))));
    if (options.supersample < 1 || n * n != options.supersample) {
        throw ValidationError("supersample must be a positive perfect square, got " +
                              std::to_string(options.supersample));
    }
    Image img(camera.width, camera.height);
    const Vec3d origin = camera.origin();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Rgb<double>> values(std::size_t(n) * n);
    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) {
            std::mt19937_64 rng(splitmix(options.seed ^ splitmix(std::uint64_t(y) * camera.width + x)));
            for (int j = 0; j < n; ++j) {
                for (int i = 0; i < n; ++i) {
                    const double px = x + (i + uni(rng)) / n;
                    const double py = y + (j + uni(rng)) / n;
                    values[std::size_t(j) * n + i] = scene.radiance(origin, camera.direction_at(px, py).normalized());
                }
            }
            img.set(x, y, reduce(values).template cast<float>());
        }
    }
    return img;
}

Rgb<double> mean_of(const std::vector<Rgb<double>> &v) {
    Rgb<double> sum = Rgb<double>::Zero();
    for (const auto &c : v) sum += c;
    return sum / double(v.size());
}

} // namespace

Image trace_reference(const ProceduralScene &scene, const Camera &camera, const TraceOptions &options) {
    return trace_image(scene, camera, options, mean_of);
}

Image trace_variance(const ProceduralScene &scene, const Camera &camera, const TraceOptions &options) {
    return trace_image(scene, camera, options, [](const std::vector<Rgb<double>> &v) {
        const Rgb<double> m = mean_of(v);
        if (v.size() < 2) return Rgb<double>(Rgb<double>::Zero());
        Rgb<double> ss = Rgb<double>::Zero();
        for (const auto &c : v) ss += (c - m).cwiseAbs2();
        return Rgb<double>(ss / double(v.size() - 1) / double(v.size()));
    });
}

} // namespace pyrf
