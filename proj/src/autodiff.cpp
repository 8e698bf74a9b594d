// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace pyrf::ad {

template <class T>
std::size_t ParameterStore<T>::add_segment(std::string name, std::size_t size) {
    if (has_segment(name)) {
        throw ValidationError("duplicate parameter segment '" + name + "'");
    }
    const std::size_t offset = values_.size();
    segments_.push_back({std::move(name), offset, size});
    values_.resize(offset + size, T(0));
    grads_.resize(offset + size, T(0));
    return offset;
}

template <class T>
bool ParameterStore<T>::has_segment(std::string_view name) const {
    return std::any_of(segments_.begin(), segments_.end(), [&](const Segment &s) { return s.name == name; });
}

template <class T>
const Segment &ParameterStore<T>::segment(std::string_view name) const {
    for (const auto &s : segments_) {
        if (s.name == name) return s;
    }
    throw ValidationError("unknown parameter segment '" + std::string(name) + "'");
}

template <class T>
std::span<T> ParameterStore<T>::values(std::string_view name) {
    const auto &s = segment(name);
    return std::span<T>(values_).subspan(s.offset, s.size);
}

template <class T>
std::span<const T> ParameterStore<T>::values(std::string_view name) const {
    const auto &s = segment(name);
    return std::span<const T>(values_).subspan(s.offset, s.size);
}

template <class T>
std::span<T> ParameterStore<T>::grads(std::string_view name) {
    const auto &s = segment(name);
    return std::span<T>(grads_).subspan(s.offset, s.size);
}

template <class T>
void ParameterStore<T>::zero_grads() {
    std::fill(grads_.begin(), grads_.end(), T(0));
}

// ---------------------------------------------------------------------------

namespace {

std::string shape(Eigen::Index r, Eigen::Index c) {
    std::ostringstream os;
    os << r << "x" << c;
    return os.str();
}

} // namespace

template <class T>
VecX<T> linear_layer(const VecX<T> &input, const MatX<T> &weights, const VecX<T> &bias) {
    if (weights.cols() != input.size() || weights.rows() != bias.size()) {
        throw ValidationError("linear_layer: weights " + shape(weights.rows(), weights.cols()) + " vs input " +
                              shape(input.size(), 1) + " and bias " + shape(bias.size(), 1));
    }
    return weights * input + bias;
}

template <class T>
void linear_layer_backward(const VecX<T> &input, const MatX<T> &weights, const VecX<T> &out_cotangent,
                           VecX<T> &grad_input, MatX<T> &grad_weights, VecX<T> &grad_bias) {
    if (weights.cols() != input.size() || weights.rows() != out_cotangent.size() ||
        grad_weights.rows() != weights.rows() || grad_weights.cols() != weights.cols() ||
        grad_input.size() != input.size() || grad_bias.size() != weights.rows()) {
        throw ValidationError("linear_layer_backward: weights " + shape(weights.rows(), weights.cols()) +
                              " vs input " + shape(input.size(), 1) + " and cotangent " +
                              shape(out_cotangent.size(), 1));
    }
    grad_input.noalias() += weights.transpose() * out_cotangent;
    grad_weights.noalias() += out_cotangent * input.transpose();
    grad_bias += out_cotangent;
}

template <class T>
T activate(Activation kind, T x) {
    switch (kind) {
    case Activation::relu: return x > T(0) ? x : T(0);
    case Activation::sigmoid: return T(1) / (T(1) + std::exp(-x));
    case Activation::exp: return std::exp(x);
    case Activation::truncated_exp: return std::exp(std::min(x, T(kTruncatedExpMax)));
    }
    return x;
}

template <class T>
T activation_derivative(Activation kind, T x) {
    switch (kind) {
    case Activation::relu: return x > T(0) ? T(1) : T(0);
    case Activation::sigmoid: {
        const T s = T(1) / (T(1) + std::exp(-x));
        return s * (T(1) - s);
    }
    case Activation::exp: return std::exp(x);
    case Activation::truncated_exp: return x < T(kTruncatedExpMax) ? std::exp(x) : T(0);
    }
    return T(0);
}

template <class T>
VecX<T> activate(Activation kind, const VecX<T> &x) {
    VecX<T> out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = activate(kind, x[i]);
    return out;
}

template <class T>
T mse_loss(const MatX<T> &predicted, const MatX<T> &target) {
    if (predicted.rows() == 0) throw ValidationError("mse_loss: empty batch");
    if (predicted.rows() != target.rows() || predicted.cols() != target.cols()) {
        throw ValidationError("mse_loss: predicted " + shape(predicted.rows(), predicted.cols()) + " vs target " +
                              shape(target.rows(), target.cols()));
    }
    return (predicted - target).squaredNorm() / T(predicted.rows());
}

template <class T>
MatX<T> mse_loss_grad(const MatX<T> &predicted, const MatX<T> &target) {
    if (predicted.rows() == 0) throw ValidationError("mse_loss: empty batch");
    return (predicted - target) * (T(2) / T(predicted.rows()));
}

template <class T>
double finite_diff_check(const DifferentiableOp<T> &op, std::span<const T> inputs, std::span<const T> params,
                         const FiniteDiffOptions &options) {
    if (inputs.size() != op.num_inputs || params.size() != op.num_params) {
        throw ValidationError("finite_diff_check: probe point does not match op arity");
    }
    std::vector<T> x(inputs.begin(), inputs.end());
    std::vector<T> p(params.begin(), params.end());

    const std::vector<T> y0 = op.forward(x, p);
    for (T v : y0) {
        if (!std::isfinite(double(v))) throw NumericalError("finite_diff_check: non-finite forward value");
    }
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<T> cot(y0.size());
    for (auto &c : cot) c = T(uni(rng));

    std::vector<T> gx(x.size(), T(0)), gp(p.size(), T(0));
    op.backward(x, p, cot, gx, gp);

    auto scalar = [&]() {
        const std::vector<T> y = op.forward(x, p);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!std::isfinite(double(y[i]))) throw NumericalError("finite_diff_check: non-finite forward value");
            s += double(cot[i]) * double(y[i]);
        }
        return s;
    };

    std::vector<std::size_t> coords = options.coordinates;
    if (coords.empty()) {
        coords.resize(x.size() + p.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    }

    double worst = 0.0;
    for (std::size_t c : coords) {
        T &slot = c < x.size() ? x[c] : p.at(c - x.size());
        const double analytic = c < x.size() ? double(gx[c]) : double(gp[c - x.size()]);
        const T saved = slot;
        slot = saved + T(options.step);
        const double up = scalar();
        slot = saved - T(options.step);
        const double down = scalar();
        slot = saved;
        const double numeric = (up - down) / (2.0 * options.step);
        worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic)));
    }
    return worst;
}

#define PYRF_INSTANTIATE(T)                                                                                       \
    template class ParameterStore<T>;                                                                          \
    template VecX<T> linear_layer<T>(const VecX<T> &, const MatX<T> &, const VecX<T> &);                     \
    template void linear_layer_backward<T>(const VecX<T> &, const MatX<T> &, const VecX<T> &, VecX<T> &,     \
                                           MatX<T> &, VecX<T> &);                                            \
    template T activate<T>(Activation, T);                                                                     \
    template T activation_derivative<T>(Activation, T);                                                        \
    template VecX<T> activate<T>(Activation, const VecX<T> &);                                                 \
    template T mse_loss<T>(const MatX<T> &, const MatX<T> &);                                                  \
    template MatX<T> mse_loss_grad<T>(const MatX<T> &, const MatX<T> &);                                       \
    template double finite_diff_check<T>(const DifferentiableOp<T> &, std::span<const T>, std::span<const T>, \
                                         const FiniteDiffOptions &);

PYRF_INSTANTIATE(float)
PYRF_INSTANTIATE(double)

} // namespace pyrf::ad
