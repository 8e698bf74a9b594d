// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "checks.hpp"

#include "pyrf/autodiff.hpp"
#include "pyrf/dense_kernel.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace pyrf;
using namespace pyrf::ad;

using check::random_vector;

TEST_SUITE("autodiff") {

TEST_CASE("parameter store segments are contiguous and named") {
    ParameterStore<float> s;
    CHECK(s.add_segment("a", 3) == 0);
    CHECK(s.add_segment("b", 5) == 3);
    CHECK(s.size() == 8);
    CHECK(s.values("b").size() == 5);
    CHECK_THROWS_AS(s.add_segment("a", 1), ValidationError);
    CHECK_THROWS_AS(s.segment("missing"), ValidationError);
    s.grads()[4] = 2.0f;
    s.zero_grads();
    CHECK(s.grads()[4] == 0.0f);
}

TEST_CASE("linear layer matches a hand expansion") {
    VecX<double> x(2);
    x << 1.0, -2.0;
    MatX<double> w(2, 2);
    w << 1.0, 2.0, 3.0, 4.0;
    VecX<double> b(2);
    b << 0.5, -0.5;
    const VecX<double> y = linear_layer(x, w, b);
    CHECK(y[0] == doctest::Approx(1.0 - 4.0 + 0.5));
    CHECK(y[1] == doctest::Approx(3.0 - 8.0 - 0.5));
    CHECK_THROWS_AS(linear_layer(VecX<double>(3), w, b), ValidationError);
}

TEST_CASE("linear layer gradients pass finite differences") {
    CHECK(check::linear_layer_fd(11) < 1e-6);
}


TEST_CASE("activation gradients pass finite differences away from kinks") {
    for (Activation kind : {Activation::relu, Activation::sigmoid, Activation::exp, Activation::truncated_exp}) {
        CHECK(check::activation_fd(kind, 3) < 1e-6);
    }
}


TEST_CASE("truncated exp clamps its argument and its gradient") {
    CHECK(activate(Activation::truncated_exp, 20.0) == std::exp(15.0));
    CHECK(activation_derivative(Activation::truncated_exp, 20.0) == 0.0);
    CHECK(activation_derivative(Activation::truncated_exp, 1.0) == std::exp(1.0));
    CHECK(activate(Activation::relu, -1.0) == 0.0);
    CHECK(activate(Activation::sigmoid, 0.0) == 0.5);
}

TEST_CASE("mse loss and its gradient") {
    MatX<double> p(2, 3), t(2, 3);
    p << 1, 2, 3, 4, 5, 6;
    t << 1, 2, 3, 4, 5, 7;
    CHECK(mse_loss(p, p) == 0.0);
    CHECK(mse_loss(p, t) == doctest::Approx(0.5));
    const MatX<double> g = mse_loss_grad(p, t);
    CHECK(g(1, 2) == doctest::Approx(2.0 * (6.0 - 7.0) / 2.0));
    CHECK(g(0, 0) == 0.0);
    CHECK_THROWS_AS(mse_loss(MatX<double>(0, 3), MatX<double>(0, 3)), ValidationError);
    CHECK_THROWS_AS(mse_loss(p, MatX<double>(3, 3)), ValidationError);
    CHECK(check::mse_fd(5) < 1e-6);
}

TEST_CASE("finite difference check detects a wrong gradient") {
    auto op = check::activation_op(Activation::sigmoid, 3);
    op.backward = [](std::span<const double>, std::span<const double>, std::span<const double> cot,
                     std::span<double> gx, std::span<double>) {
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += cot[i];
    };
    const std::vector<double> x = {0.1, 0.2, 0.3};
    CHECK(finite_diff_check<double>(op, x, {}) > 1e-2);
}

TEST_CASE("dense kernel: a column alone equals the same column in a batch, bit for bit") {
    std::mt19937_64 rng(5);
    for (int depth : {3, 16, 31, 128}) {
        const int rows = 13;
        const std::size_t n = 157;
        const auto w = random_vector(std::size_t(rows) * depth, rng);
        const auto b = random_vector(std::size_t(rows), rng);
        std::vector<float> wf(w.begin(), w.end()), bf(b.begin(), b.end());
        const auto xd = random_vector(std::size_t(depth) * n, rng);
        std::vector<float> x(xd.begin(), xd.end()), out(rows * n);
        kernel::dense_forward(wf.data(), bf.data(), x.data(), out.data(), rows, depth, n);
        for (std::size_t c = 0; c < n; c += 17) {
            std::vector<float> col(depth), one(rows);
            for (int k = 0; k < depth; ++k) col[k] = x[std::size_t(k) * n + c];
            kernel::dense_forward(wf.data(), bf.data(), col.data(), one.data(), rows, depth, 1);
            for (int j = 0; j < rows; ++j) {
                CHECK(one[j] == out[std::size_t(j) * n + c]);
                double ref = b[j];
                for (int k = 0; k < depth; ++k) ref += double(wf[j * depth + k]) * double(col[k]);
                CHECK(double(one[j]) == doctest::Approx(ref).epsilon(1e-4));
            }
        }
    }
}

} // TEST_SUITE
