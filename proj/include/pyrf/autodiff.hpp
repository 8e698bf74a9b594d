// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode building blocks for the small networks in the field. There is
// no tape: each network composes these forward/backward pairs by hand.
//
#pragma once

#include "pyrf/common.hpp"

#include <Eigen/Core>

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pyrf::ad {

template <class T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Segment {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
};

/// Flat store of named parameter blocks with a gradient array of the same shape.
template <class T>
class ParameterStore {
public:
    /// Appends a block and returns its offset. Names must be unique.
    std::size_t add_segment(std::string name, std::size_t size);

    const Segment &segment(std::string_view name) const;
    const std::vector<Segment> &segments() const { return segments_; }
    bool has_segment(std::string_view name) const;

    std::size_t size() const { return values_.size(); }

    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }
    std::span<T> grads() { return grads_; }
    std::span<const T> grads() const { return grads_; }

    std::span<T> values(std::string_view name);
    std::span<const T> values(std::string_view name) const;
    std::span<T> grads(std::string_view name);

    void zero_grads();

private:
    std::vector<Segment> segments_;
    AlignedVector<T> values_;
    AlignedVector<T> grads_;
};

// ---------------------------------------------------------------------------
// Dense layer

/// weights * input + bias. Throws ValidationError naming both shapes on mismatch.
template <class T>
VecX<T> linear_layer(const VecX<T> &input, const MatX<T> &weights, const VecX<T> &bias);

/// Accumulates cotangents of linear_layer into grad_input, grad_weights and grad_bias.
template <class T>
void linear_layer_backward(const VecX<T> &input, const MatX<T> &weights, const VecX<T> &out_cotangent,
                           VecX<T> &grad_input, MatX<T> &grad_weights, VecX<T> &grad_bias);

// ---------------------------------------------------------------------------
// Activations

enum class Activation { relu, sigmoid, exp, truncated_exp };

/// Pre-activations above this are clamped by truncated_exp.
inline constexpr double kTruncatedExpMax = 15.0;

template <class T>
T activate(Activation kind, T x);

/// d activate / d x evaluated at pre-activation x. relu'(0) is taken as 0.
template <class T>
T activation_derivative(Activation kind, T x);

template <class T>
VecX<T> activate(Activation kind, const VecX<T> &x);

// ---------------------------------------------------------------------------
// Loss

/// Mean over the batch of squared L2 colour distances. Rows are batch items.
template <class T>
T mse_loss(const MatX<T> &predicted, const MatX<T> &target);

/// d mse / d predicted = 2 (pred - target) / batch_size.
template <class T>
MatX<T> mse_loss_grad(const MatX<T> &predicted, const MatX<T> &target);

// ---------------------------------------------------------------------------
// Gradient checking

/// A forward map plus its vector-Jacobian product. backward must add into its
/// gradient outputs, never overwrite them.
template <class T>
struct DifferentiableOp {
    std::size_t num_inputs = 0;
    std::size_t num_params = 0;
    std::function<std::vector<T>(std::span<const T> inputs, std::span<const T> params)> forward;
    std::function<void(std::span<const T> inputs, std::span<const T> params, std::span<const T> out_cotangent,
                       std::span<T> grad_inputs, std::span<T> grad_params)>
        backward;
};

struct FiniteDiffOptions {
    double step = 1e-5;
    /// Seed for the random output cotangent that reduces the op to a scalar.
    std::uint64_t seed = 7;
    /// Restrict the probe to these coordinates (indices into inputs then params,
    /// params offset by num_inputs). Empty means all coordinates.
    std::vector<std::size_t> coordinates;
};

/// Max over probed coordinates of |analytic - central difference| / max(1, |analytic|).
/// Throws NumericalError if the forward value is non-finite.
template <class T>
double finite_diff_check(const DifferentiableOp<T> &op, std::span<const T> inputs, std::span<const T> params,
                         const FiniteDiffOptions &options = {});

} // namespace pyrf::ad
