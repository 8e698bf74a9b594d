// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/dataset.hpp"
#include "pyrf/image.hpp"
#include "pyrf/scene.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace pyrf;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("pyrf_test_" + name);
    fs::remove_all(p);
    return p;
}

DatasetOptions tiny_options() {
    DatasetOptions o;
    o.train_cameras = 3;
    o.test_cameras = 2;
    o.resolution = 16;
    o.supersample = 4;
    o.seed = 5;
    return o;
}

} // namespace

TEST_SUITE("scene_synth") {

TEST_CASE("ray-quad and ray-sphere intersections") {
    ProceduralScene s;
    Quad q;
    q.half_u = q.half_v = 1.0;
    q.pattern = Pattern::checker;
    q.period = 0.5;
    q.color_a = Rgb<double>(0.1, 0.2, 0.3);
    s.quads.push_back(q);
    auto hit = s.intersect(Vec3d(0.1, 0.1, 2.0), Vec3d(0, 0, -1));
    REQUIRE(hit);
    CHECK(hit->t == doctest::Approx(2.0));
    CHECK(hit->albedo == q.color_a);
    hit = s.intersect(Vec3d(0.6, 0.1, 2.0), Vec3d(0, 0, -1));
    CHECK(hit->albedo == q.color_b);
    CHECK_FALSE(s.intersect(Vec3d(1.5, 0.0, 2.0), Vec3d(0, 0, -1)));

    s.spheres.push_back({Vec3d(0, 0, 1), 0.5, Rgb<double>(1, 0, 0)});
    hit = s.intersect(Vec3d(0, 0, 3), Vec3d(0, 0, -1));
    CHECK(hit->t == doctest::Approx(1.5));
    CHECK(hit->albedo == Rgb<double>(1, 0, 0));
    CHECK(s.radiance(Vec3d(5, 5, 5), Vec3d(1, 0, 0)) == s.background);
}

TEST_CASE("checker pattern alternates across squares") {
    Quad q;
    q.pattern = Pattern::checker;
    q.period = 0.1;
    const Rgb<double> a = quad_albedo(q, Vec3d(0.05, 0.05, 0));
    CHECK(quad_albedo(q, Vec3d(0.15, 0.05, 0)) != a);
    CHECK(quad_albedo(q, Vec3d(0.15, 0.15, 0)) == a);
    CHECK(quad_albedo(q, Vec3d(-0.05, 0.05, 0)) != a);
}

TEST_CASE("scenes parse by name") {
    CHECK(parse_scene_kind("brick_wall") == SceneKind::brick_wall);
    CHECK_THROWS_AS(parse_scene_kind("teapot"), ValidationError);
    for (SceneKind k : {SceneKind::slanted_checkerboard, SceneKind::brick_wall, SceneKind::colored_spheres}) {
        const ProceduralScene s = make_scene(k);
        CHECK(s.view_axis.norm() == doctest::Approx(1.0));
        CHECK(s.radiance(s.view_axis * 3.0, -s.view_axis) != s.background);
    }
}

TEST_CASE("reference tracing is deterministic and converges") {
    const ProceduralScene s = make_scene(SceneKind::slanted_checkerboard);
    Camera c;
    c.width = c.height = 12;
    c.focal = 16.0;
    c.pose = look_at(s.view_axis * 2.0, Vec3d::Zero(), Vec3d::UnitZ());
    c.near = 1.0;
    c.far = 3.0;
    TraceOptions o;
    o.supersample = 16;
    const Image a = trace_reference(s, c, o), b = trace_reference(s, c, o);
    CHECK(a.data == b.data);
    for (float v : a.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    // The estimator's spread shrinks like 1/n: compare 16 and 256 rays per pixel
    // against a 1024-ray reference.
    TraceOptions hi = o;
    hi.supersample = 1024;
    const Image ref = trace_reference(s, c, hi);
    TraceOptions mid = o;
    mid.supersample = 256;
    const Image m = trace_reference(s, c, mid);
    double e16 = 0.0, e256 = 0.0;
    for (std::size_t i = 0; i < ref.data.size(); ++i) {
        e16 += std::pow(a.data[i] - ref.data[i], 2.0);
        e256 += std::pow(m.data[i] - ref.data[i], 2.0);
    }
    CHECK(e256 < e16);
    const Image var = trace_variance(s, c, o);
    for (float v : var.data) CHECK(v >= 0.0f);
    o.supersample = 15;
    CHECK_THROWS_AS(trace_reference(s, c, o), ValidationError);
}

TEST_CASE("cameras: distances are within range and views look at the origin") {
    const ProceduralScene s = make_scene(SceneKind::slanted_checkerboard);
    DatasetOptions o;
    std::mt19937_64 rng(1);
    const auto cams = sample_cameras(s, 200, o, rng);
    double dmin = 1e9, dmax = 0.0;
    for (const Camera &c : cams) {
        const double d = c.origin().norm();
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
        CHECK(d >= o.min_distance - 1e-9);
        CHECK(d <= o.max_distance + 1e-9);
        CHECK(c.forward().dot(-c.origin().normalized()) == doctest::Approx(1.0));
        CHECK(std::acos(std::clamp(c.origin().normalized().dot(s.view_axis), -1.0, 1.0)) <= s.view_cone + 1e-9);
        CHECK(c.near < d - 0.5);
        CHECK(c.far > d + 0.5);
    }
    CHECK(dmax / dmin > 5.0);
}

TEST_CASE("multiscale dataset: structure, save and load round trip") {
    const Dataset ds = build_dataset(tiny_options());
    CHECK(ds.views.size() == 5 * 4);
    CHECK(ds.split(Split::train).size() == 12);
    CHECK(ds.scales() == std::vector<double>{1.0, 0.5, 0.25, 0.125});
    for (std::size_t i = 0; i < ds.views.size(); ++i) {
        const View &v = ds.views[i], &full = ds.views[i - i % 4];
        CHECK(full.scale == 1.0);
        CHECK(v.image.width == int(16 * v.scale));
        CHECK(v.camera.focal == doctest::Approx(full.camera.focal * v.scale));
        CHECK(v.camera.origin() == full.camera.origin());
    }

    const fs::path dir = scratch_dir("dataset");
    save_dataset(ds, dir);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "train/s8/002.png"));
    const Dataset back = load_dataset(dir);
    REQUIRE(back.views.size() == ds.views.size());
    CHECK(back.bounds == ds.bounds);
    for (std::size_t i = 0; i < ds.views.size(); ++i) {
        const View &a = ds.views[i], &b = back.views[i];
        CHECK(a.path == b.path);
        CHECK(a.split == b.split);
        CHECK(a.scale == b.scale);
        CHECK(a.camera.focal == b.camera.focal);
        CHECK((a.camera.pose - b.camera.pose).norm() == 0.0);
        CHECK(b.image.data == a.image.quantized().data);
    }

    fs::remove(dir / "test/s2/001.png");
    CHECK_THROWS_AS(load_dataset(dir), IoError);
    CHECK_THROWS_AS(load_dataset(dir / "nope"), IoError);
    std::ofstream(dir / "manifest.json") << "{ not json";
    CHECK_THROWS_AS(load_dataset(dir), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("dataset options are validated") {
    DatasetOptions o = tiny_options();
    o.test_cameras = 0;
    CHECK_THROWS_AS(build_dataset(o), ValidationError);
    o = tiny_options();
    o.resolution = 4;
    CHECK_THROWS_AS(build_dataset(o), ValidationError);
}

TEST_CASE("png round trip is exact for 8-bit values") {
    Image img(5, 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = float(i * 7 % 256) / 255.0f;
    const fs::path dir = scratch_dir("png");
    fs::create_directories(dir);
    write_png(dir / "a.png", img);
    const Image back = read_png(dir / "a.png");
    CHECK(back.width == 5);
    CHECK(back.data == img.quantized().data);
    CHECK_THROWS_AS(read_png(dir / "missing.png"), IoError);
    const Image wide = hstack(img, img);
    CHECK(wide.width == 10);
    CHECK(wide.pixel(7, 1) == img.pixel(2, 1));
    fs::remove_all(dir);
}

} // TEST_SUITE
