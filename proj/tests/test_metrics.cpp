// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "oracles.hpp"

#include "pyrf/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace pyrf;

namespace {

Image random_image(int w, int h, std::mt19937_64 &rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Image img(w, h);
    for (auto &v : img.data) v = u(rng);
    return img;
}

Image perturbed(const Image &src, double amount, std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, amount);
    Image out = src;
    for (auto &v : out.data) v = float(std::clamp(v + n(rng), 0.0, 1.0));
    return out;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("psnr and ssim agree with brute-force references") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        const Image a = random_image(13 + i, 17, rng);
        const Image b = perturbed(a, 0.02 + 0.03 * i, rng);
        CHECK(mse(a, b) == doctest::Approx(oracle::mse(a, b)).epsilon(1e-10));
        CHECK(psnr(a, b) == doctest::Approx(oracle::psnr(a, b)).epsilon(1e-10));
        CHECK(ssim(a, b) == doctest::Approx(oracle::ssim(a, b)).epsilon(1e-10));
    }
}

TEST_CASE("identity and known values") {
    std::mt19937_64 rng(4);
    const Image a = random_image(12, 12, rng);
    CHECK(std::isinf(psnr(a, a)));
    CHECK(ssim(a, a) == doctest::Approx(1.0));
    Image zero(12, 12, 0.0f), tenth(12, 12, 0.1f);
    CHECK(psnr(zero, tenth) == doctest::Approx(20.0));
    CHECK(avg_error(std::numeric_limits<double>::infinity(), 1.0) == 0.0);
}

TEST_CASE("avg_error closed forms") {
    CHECK(avg_error(20.0, 0.75, 0.1) == doctest::Approx(std::cbrt(0.01 * 0.5 * 0.1)).epsilon(1e-12));
    CHECK(avg_error(20.0, 0.75, 0.1) == doctest::Approx(0.07937).epsilon(1e-4));
    CHECK(avg_error(30.0, 0.96) == doctest::Approx(std::sqrt(0.001 * 0.2)).epsilon(1e-12));
    const double lp = 0.3;
    CHECK(avg_error(25.0, 0.8, lp) == doctest::Approx(oracle::avg_error(25.0, 0.8, &lp)).epsilon(1e-12));
    CHECK_THROWS_AS(avg_error(20.0, 1.5), ValidationError);
}

TEST_CASE("metric input validation") {
    Image a(12, 12), b(13, 12);
    CHECK_THROWS_AS(mse(a, b), ValidationError);
    CHECK_THROWS_AS(psnr(Image(), Image()), ValidationError);
}

TEST_CASE("small images use the largest odd window that fits") {
    CHECK(ssim_window(128, 64) == 11);
    CHECK(ssim_window(8, 16) == 7);
    CHECK(ssim_window(2, 2) == 1);
    std::mt19937_64 rng(5);
    const Image a = random_image(8, 9, rng), b = perturbed(a, 0.05, rng);
    CHECK(ssim(a, b) == doctest::Approx(oracle::ssim(a, b, 7)).epsilon(1e-10));
    const Image c = random_image(2, 2, rng);
    CHECK(ssim(c, c) == doctest::Approx(1.0));
}

} // TEST_SUITE
