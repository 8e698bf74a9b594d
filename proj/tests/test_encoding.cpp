// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "checks.hpp"
#include "support.hpp"

#include "pyrf/field.hpp"
#include "pyrf/hash_grid.hpp"
#include "pyrf/sh_encoding.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace pyrf;

namespace {

HashGridConfig tiny_grid() {
    HashGridConfig c;
    c.num_levels = 3;
    c.base_resolution = 2.0;
    c.per_level_scale = 4.0;
    c.features_per_level = 2;
    c.table_size = 1u << 8;  // level 0 and 1 dense (27, 729 > 256 -> hashed), level 2 hashed
    return c;
}

// Trilinear interpolation of level 0 written out from the lattice definition.
std::array<double, 2> trilinear_level0(const HashGrid &g, std::span<const double> p, const Vec3d &x) {
    const double res = g.resolution(0);
    const Vec3d u = ((x - g.bounds().lo).array() / g.bounds().extent().array()).matrix() * res;
    std::array<double, 2> out{0.0, 0.0};
    for (int ix = 0; ix <= int(res); ++ix) {
        for (int iy = 0; iy <= int(res); ++iy) {
            for (int iz = 0; iz <= int(res); ++iz) {
                const double w = std::max(0.0, 1.0 - std::abs(u[0] - ix)) * std::max(0.0, 1.0 - std::abs(u[1] - iy)) *
                                 std::max(0.0, 1.0 - std::abs(u[2] - iz));
                if (w == 0.0) continue;
                const std::uint32_t slot = std::uint32_t(ix + (res + 1) * (iy + (res + 1) * iz));
                for (int f = 0; f < 2; ++f) out[f] += w * p[g.param_index(0, slot, f)];
            }
        }
    }
    return out;
}

} // namespace

TEST_SUITE("field_encoding") {

TEST_CASE("hash grid config validation") {
    HashGridConfig c;
    c.table_size = 1000;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = HashGridConfig{};
    c.per_level_scale = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = HashGridConfig{};
    c.num_levels = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK_NOTHROW(HashGridConfig{}.validate());
}

TEST_CASE("level layout: dense when the lattice fits, hashed otherwise") {
    const HashGrid g(tiny_grid(), Aabb{});
    CHECK(g.resolution(0) == 2);
    CHECK(g.resolution(1) == 8);
    CHECK(g.is_dense(0));
    CHECK_FALSE(g.is_dense(1));
    CHECK(g.level_entries(0) == 27);
    CHECK(g.level_entries(2) == 256);
    CHECK(g.num_params() == (27 + 256 + 256) * 2);
    CHECK(g.vertex_index(0, 1, 2, 0) == 1 + 3 * 2);
    CHECK(g.vertex_index(1, 1, 1, 1) == ((1u ^ 2654435761u ^ 805459861u) & 255u));
}

TEST_CASE("encoding matches brute-force trilinear interpolation on a dense level") {
    const HashGrid g(tiny_grid(), Aabb{});
    std::vector<double> p(g.num_params());
    std::mt19937_64 rng(1);
    g.initialize<double>(p, rng);
    for (auto &v : p) v *= 1e4;
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 50; ++i) {
        const Vec3d x(u(rng), u(rng), u(rng));
        std::vector<double> out(g.output_dim());
        g.encode<double>(p, x, out);
        const auto ref = trilinear_level0(g, p, x);
        CHECK(out[0] == doctest::Approx(ref[0]).epsilon(1e-12));
        CHECK(out[1] == doctest::Approx(ref[1]).epsilon(1e-12));
    }
}

TEST_CASE("encoding at a lattice vertex returns that vertex's features") {
    const HashGrid g(tiny_grid(), Aabb{});
    std::vector<double> p(g.num_params());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = double(i % 97) - 40.0;
    const Vec3d x(-0.5 + 3.0 / 8.0, -0.5 + 5.0 / 8.0, -0.5 + 1.0 / 8.0);  // vertex (3,5,1) of level 1
    std::vector<double> out(g.output_dim());
    g.encode<double>(p, x, out);
    const std::uint32_t slot = g.vertex_index(1, 3, 5, 1);
    CHECK(out[2] == doctest::Approx(p[g.param_index(1, slot, 0)]));
    CHECK(out[3] == doctest::Approx(p[g.param_index(1, slot, 1)]));
}

TEST_CASE("out-of-bounds inputs are clamped to the box surface") {
    const HashGrid g(tiny_grid(), Aabb{});
    std::vector<double> p(g.num_params());
    std::mt19937_64 rng(2);
    g.initialize<double>(p, rng);
    std::vector<double> a(g.output_dim()), b(g.output_dim());
    g.encode<double>(p, Vec3d(3.0, 0.1, -7.0), a);
    g.encode<double>(p, Vec3d(0.5, 0.1, -0.5), b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("encoding backward is the transpose of the (linear) forward") {
    CHECK(check::encoding_fd(4) < 1e-6);
}


TEST_CASE("spherical harmonics are orthonormal over the sphere") {
    // Fibonacci-lattice quadrature; the lattice is near-uniform so the mean of
    // Y_i Y_j times 4 pi approximates the integral.
    const int n = 40000;
    std::array<std::array<double, kShDim>, kShDim> gram{};
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n;
        const double r = std::sqrt(1.0 - z * z);
        const Vec3d d(r * std::cos(golden * i), r * std::sin(golden * i), z);
        std::array<double, kShDim> y{};
        sh_basis<double>(d, y);
        for (int a = 0; a < kShDim; ++a)
            for (int b = 0; b < kShDim; ++b) gram[a][b] += y[a] * y[b];
    }
    for (int a = 0; a < kShDim; ++a) {
        for (int b = 0; b < kShDim; ++b) {
            const double v = gram[a][b] * 4.0 * std::numbers::pi / n;
            CHECK(v == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-3).scale(1.0));
        }
    }
}

TEST_CASE("spherical harmonics: closed forms at the poles") {
    std::array<double, kShDim> y{};
    sh_basis<double>(Vec3d(0, 0, 1), y);
    CHECK(y[0] == doctest::Approx(0.5 * std::sqrt(1.0 / std::numbers::pi)));
    CHECK(y[2] == doctest::Approx(std::sqrt(3.0 / (4.0 * std::numbers::pi))));
    CHECK(y[6] == doctest::Approx(std::sqrt(5.0 / (16.0 * std::numbers::pi)) * 2.0));
    CHECK(y[12] == doctest::Approx(0.25 * std::sqrt(7.0 / std::numbers::pi) * 2.0));
    CHECK(y[1] == 0.0);
}

TEST_CASE("direction encoding normalizes and rejects zero") {
    const auto a = encode_direction<double>(Vec3d(0, 3, 4));
    const auto b = encode_direction<double>(Vec3d(0, 0.6, 0.8));
    for (int i = 0; i < kShDim; ++i) CHECK(a[i] == doctest::Approx(b[i]));
    CHECK_THROWS_AS(encode_direction<double>(Vec3d::Zero()), ValidationError);
}

TEST_CASE("field layout: heads, grids and per-head views") {
    const FieldConfig shared = test::small_field(6);
    PyramidField<float> f(shared);
    CHECK(f.num_levels() == 6);
    CHECK(f.grids().size() == 1);
    CHECK(f.feature_dim() == 8);
    CHECK(f.view_levels(5) == 4);
    CHECK(f.view_levels(3) == 2);
    CHECK(f.view_levels(0) == 1);
    CHECK(f.params().has_segment("head5"));
    CHECK_THROWS_AS(f.view_levels(6), ValidationError);

    PyramidField<float> s(test::small_field(3, GridSharing::separate));
    CHECK(s.grids().size() == 3);
    CHECK(s.grid_of(0).config().num_levels == 2);
    CHECK(s.params().has_segment("grid2"));
}

TEST_CASE("coarse heads see zeros beyond their grid levels") {
    PyramidField<double> f(test::small_field(4));
    f.initialize(3);
    test::randomize_grids(f, 9);
    std::vector<double> out(f.feature_dim());
    f.encode(1, Vec3d(0.1, -0.2, 0.3), out);
    CHECK(out[3] != 0.0);
    for (int k = 4; k < f.feature_dim(); ++k) CHECK(out[k] == 0.0);
    std::vector<double> full(f.feature_dim());
    f.encode(3, Vec3d(0.1, -0.2, 0.3), full);
    for (int k = 0; k < 4; ++k) CHECK(out[k] == full[k]);
}

TEST_CASE("head backward passes finite differences in double precision") {
    CHECK(check::head_fd(5) < 1e-6);
}


TEST_CASE("eval_head_raw equals the batched forward column") {
    PyramidField<float> f(test::small_field(3));
    f.initialize(2);
    test::randomize_grids(f, 3);
    const int dim = f.feature_dim();
    HeadBatch<float> b;
    const std::size_t n = 40;
    b.resize(n, dim);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    for (auto &v : b.features) v = u(rng);
    for (auto &v : b.sh) v = u(rng);
    f.head_forward(2, b);
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<float> feat(dim);
        std::array<float, kShDim> sh{};
        for (int k = 0; k < dim; ++k) feat[k] = b.features[k * n + c];
        for (int k = 0; k < kShDim; ++k) sh[k] = b.sh[k * n + c];
        const HeadRaw<float> r = f.eval_head_raw(2, feat, std::span<const float, kShDim>(sh));
        CHECK(r.sigma == b.density_out[c]);
        for (int k = 0; k < 3; ++k) CHECK(r.color[k] == b.color_out[k * n + c]);
    }
}

} // TEST_SUITE
