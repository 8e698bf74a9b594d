// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/field.hpp"

#include "pyrf/dense_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pyrf {

const char *to_string(GridSharing s) { return s == GridSharing::shared ? "shared" : "separate"; }

GridSharing parse_grid_sharing(const std::string &s) {
    if (s == "shared") return GridSharing::shared;
    if (s == "separate") return GridSharing::separate;
    throw ValidationError("unknown grid sharing '" + s + "' (expected shared|separate)");
}

void FieldConfig::validate() const {
    grid.validate();
    if (levels < 1) throw ValidationError("field: levels must be >= 1");
    if (!((bounds.hi.array() > bounds.lo.array()).all())) throw ValidationError("field: empty scene bounds");
}

template <class T>
FieldSample<T> activate_raw(const HeadRaw<T> &raw) {
    FieldSample<T> s;
    s.sigma = ad::activate(ad::Activation::truncated_exp, raw.sigma);
    for (int c = 0; c < 3; ++c) s.color[c] = ad::activate(ad::Activation::sigmoid, raw.color[c]);
    return s;
}

template <class T>
void HeadBatch<T>::resize(std::size_t count, int feature_dim) {
    n = count;
    features.resize(count * feature_dim);
    sh.resize(count * kShDim);
    hidden1.resize(count * kDensityHidden);
    density_out.resize(count * kDensityOut);
    color_in.resize(count * kColorIn);
    hidden2.resize(count * kColorHidden);
    hidden3.resize(count * kColorHidden);
    color_out.resize(count * 3);
}

namespace {

template <class T>
void relu_inplace(AlignedVector<T> &v, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) v[i] = v[i] > T(0) ? v[i] : T(0);
}

// Zeroes cotangents where the forward ReLU output was not positive.
template <class T>
void relu_mask(T *d, const T *h, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) d[i] = h[i] > T(0) ? d[i] : T(0);
}

} // namespace

template <class T>
PyramidField<T>::PyramidField(const FieldConfig &config) : config_(config) {
    config_.validate();
    const int L = config_.levels;
    if (config_.sharing == GridSharing::shared) {
        const std::size_t off = store_.add_segment("grid", HashGrid(config_.grid, config_.bounds).num_params());
        grids_.emplace_back(config_.grid, config_.bounds, off);
    } else {
        for (int h = 0; h < L; ++h) {
            HashGridConfig gc = config_.grid;
            gc.num_levels = view_levels(h);
            const std::size_t off =
                store_.add_segment("grid" + std::to_string(h), HashGrid(gc, config_.bounds).num_params());
            grids_.emplace_back(gc, config_.bounds, off);
        }
    }
    const int din = feature_dim();
    for (int h = 0; h < L; ++h) {
        HeadLayout hl;
        hl.begin = store_.add_segment(head_segment(h), head_param_count(din));
        std::size_t o = hl.begin;
        auto take = [&o](std::size_t n) {
            const std::size_t at = o;
            o += n;
            return at;
        };
        hl.w1 = take(std::size_t(kDensityHidden) * din);
        hl.b1 = take(kDensityHidden);
        hl.w2 = take(std::size_t(kDensityOut) * kDensityHidden);
        hl.b2 = take(kDensityOut);
        hl.w3 = take(std::size_t(kColorHidden) * kColorIn);
        hl.b3 = take(kColorHidden);
        hl.w4 = take(std::size_t(kColorHidden) * kColorHidden);
        hl.b4 = take(kColorHidden);
        hl.w5 = take(std::size_t(3) * kColorHidden);
        hl.b5 = take(3);
        heads_.push_back(hl);
    }
}

template <class T>
int PyramidField<T>::view_levels(int head) const {
    check_level(head);
    return std::max(1, config_.grid.num_levels - (config_.levels - 1 - head));
}

template <class T>
void PyramidField<T>::check_level(int level) const {
    if (level < 0 || level >= config_.levels) {
        throw ValidationError("pyramid level " + std::to_string(level) + " out of range [0, " +
                              std::to_string(config_.levels) + ")");
    }
}

template <class T>
void PyramidField<T>::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto vals = store_.values();
    std::fill(vals.begin(), vals.end(), T(0));
    for (const auto &g : grids_) g.initialize(vals, rng);
    const int din = feature_dim();
    auto fill = [&](std::size_t at, int rows, int fan_in) {
        const double bound = std::sqrt(6.0 / double(fan_in));
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (std::size_t i = 0; i < std::size_t(rows) * fan_in; ++i) vals[at + i] = T(uni(rng));
    };
    for (const auto &hl : heads_) {
        fill(hl.w1, kDensityHidden, din);
        fill(hl.w2, kDensityOut, kDensityHidden);
        fill(hl.w3, kColorHidden, kColorIn);
        fill(hl.w4, kColorHidden, kColorHidden);
        fill(hl.w5, 3, kColorHidden);
    }
    store_.zero_grads();
}

template <class T>
void PyramidField<T>::encode(int head, const Vec3<T> &x, std::span<T> out) const {
    const int n = view_levels(head);
    const int fpl = config_.grid.features_per_level;
    std::fill(out.begin() + std::size_t(n) * fpl, out.begin() + feature_dim(), T(0));
    grid_of(head).template encode<T>(store_.values(), x, out, n);
}

template <class T>
void PyramidField<T>::encode_backward(int head, const Vec3<T> &x, std::span<const T> cotangent,
                                      std::span<T> grads) const {
    grid_of(head).template encode_backward<T>(x, cotangent, grads, view_levels(head));
}

template <class T>
void PyramidField<T>::density_forward(int level, HeadBatch<T> &b) const {
    check_level(level);
    const HeadLayout &hl = heads_[level];
    const T *p = store_.values().data();
    const std::size_t n = b.n;
    kernel::dense_forward(p + hl.w1, p + hl.b1, b.features.data(), b.hidden1.data(), kDensityHidden, feature_dim(), n);
    relu_inplace(b.hidden1, n * kDensityHidden);
    kernel::dense_forward(p + hl.w2, p + hl.b2, b.hidden1.data(), b.density_out.data(), kDensityOut, kDensityHidden, n);
}

template <class T>
void PyramidField<T>::head_forward(int level, HeadBatch<T> &b) const {
    density_forward(level, b);
    const HeadLayout &hl = heads_[level];
    const T *p = store_.values().data();
    const std::size_t n = b.n;
    std::copy(b.density_out.begin() + n, b.density_out.begin() + n * kDensityOut, b.color_in.begin());
    std::copy(b.sh.begin(), b.sh.begin() + n * kShDim, b.color_in.begin() + n * kGeoDim);
    kernel::dense_forward(p + hl.w3, p + hl.b3, b.color_in.data(), b.hidden2.data(), kColorHidden, kColorIn, n);
    relu_inplace(b.hidden2, n * kColorHidden);
    kernel::dense_forward(p + hl.w4, p + hl.b4, b.hidden2.data(), b.hidden3.data(), kColorHidden, kColorHidden, n);
    relu_inplace(b.hidden3, n * kColorHidden);
    kernel::dense_forward(p + hl.w5, p + hl.b5, b.hidden3.data(), b.color_out.data(), 3, kColorHidden, n);
}

template <class T>
void PyramidField<T>::head_backward(int level, const HeadBatch<T> &b, const T *d_sigma, const T *d_color,
                                    std::span<T> grads, T *d_features) const {
    using RM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using CMap = Eigen::Map<const RM>;
    using MMap = Eigen::Map<RM>;
    using VMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;

    check_level(level);
    const HeadLayout &hl = heads_[level];
    const T *p = store_.values().data();
    T *g = grads.data();
    const Eigen::Index n = Eigen::Index(b.n);
    const int din = feature_dim();

    CMap dC(d_color, 3, n);
    CMap H3(b.hidden3.data(), kColorHidden, n);
    CMap H2(b.hidden2.data(), kColorHidden, n);
    CMap Cin(b.color_in.data(), kColorIn, n);
    CMap H1(b.hidden1.data(), kDensityHidden, n);
    CMap X(b.features.data(), din, n);

    const std::size_t un = b.n;
    b.d_hidden3.resize(un * kColorHidden);
    b.d_hidden2.resize(un * kColorHidden);
    b.d_density.resize(un * kDensityOut);
    b.d_hidden1.resize(un * kDensityHidden);
    MMap dZ3(b.d_hidden3.data(), kColorHidden, n), dZ2(b.d_hidden2.data(), kColorHidden, n);
    MMap dD(b.d_density.data(), kDensityOut, n), dZ1(b.d_hidden1.data(), kDensityHidden, n);

    MMap(g + hl.w5, 3, kColorHidden).noalias() += dC * H3.transpose();
    VMap(g + hl.b5, 3) += dC.rowwise().sum();
    dZ3.noalias() = CMap(p + hl.w5, 3, kColorHidden).transpose() * dC;
    relu_mask(b.d_hidden3.data(), b.hidden3.data(), un * kColorHidden);

    MMap(g + hl.w4, kColorHidden, kColorHidden).noalias() += dZ3 * H2.transpose();
    VMap(g + hl.b4, kColorHidden) += dZ3.rowwise().sum();
    dZ2.noalias() = CMap(p + hl.w4, kColorHidden, kColorHidden).transpose() * dZ3;
    relu_mask(b.d_hidden2.data(), b.hidden2.data(), un * kColorHidden);

    MMap(g + hl.w3, kColorHidden, kColorIn).noalias() += dZ2 * Cin.transpose();
    VMap(g + hl.b3, kColorHidden) += dZ2.rowwise().sum();
    std::copy(d_sigma, d_sigma + un, b.d_density.begin());
    dD.bottomRows(kGeoDim).noalias() =
        CMap(p + hl.w3, kColorHidden, kColorIn).leftCols(kGeoDim).transpose() * dZ2;

    MMap(g + hl.w2, kDensityOut, kDensityHidden).noalias() += dD * H1.transpose();
    VMap(g + hl.b2, kDensityOut) += dD.rowwise().sum();
    dZ1.noalias() = CMap(p + hl.w2, kDensityOut, kDensityHidden).transpose() * dD;
    relu_mask(b.d_hidden1.data(), b.hidden1.data(), un * kDensityHidden);

    MMap(g + hl.w1, kDensityHidden, din).noalias() += dZ1 * X.transpose();
    VMap(g + hl.b1, kDensityHidden) += dZ1.rowwise().sum();
    if (d_features) {
        MMap(d_features, din, n).noalias() = CMap(p + hl.w1, kDensityHidden, din).transpose() * dZ1;
    }
}

template <class T>
HeadRaw<T> PyramidField<T>::eval_head_raw(int level, std::span<const T> features,
                                          std::span<const T, kShDim> sh) const {
    HeadBatch<T> b;
    b.resize(1, feature_dim());
    std::copy(features.begin(), features.begin() + feature_dim(), b.features.begin());
    std::copy(sh.begin(), sh.end(), b.sh.begin());
    head_forward(level, b);
    HeadRaw<T> raw;
    raw.sigma = b.density_out[0];
    for (int c = 0; c < 3; ++c) raw.color[c] = b.color_out[c];
    return raw;
}

template <class T>
FieldSample<T> PyramidField<T>::eval_head(int level, const Vec3<T> &x, const Vec3<T> &d) const {
    check_level(level);
    std::vector<T> feat(feature_dim());
    encode(level, x, feat);
    const auto sh = encode_direction<T>(d);
    return activate_raw(eval_head_raw(level, feat, std::span<const T, kShDim>(sh)));
}

template FieldSample<float> activate_raw<float>(const HeadRaw<float> &);
template FieldSample<double> activate_raw<double>(const HeadRaw<double> &);
template struct HeadBatch<float>;
template struct HeadBatch<double>;
template class PyramidField<float>;
template class PyramidField<double>;

} // namespace pyrf
