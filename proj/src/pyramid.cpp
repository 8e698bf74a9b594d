// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/pyramid.hpp"

#include <algorithm>
#include <cmath>

namespace pyrf {

const char *to_string(EvalMode m) {
    switch (m) {
    case EvalMode::default_interp: return "default_interp";
    case EvalMode::gauss: return "gauss";
    case EvalMode::laplacian: return "laplacian";
    case EvalMode::feature_interp: return "feature_interp";
    }
    return "?";
}

const char *to_string(LevelSelection s) {
    return s == LevelSelection::projected_area ? "projected_area" : "volume_3d";
}

EvalMode parse_eval_mode(const std::string &s) {
    for (EvalMode m : {EvalMode::default_interp, EvalMode::gauss, EvalMode::laplacian, EvalMode::feature_interp}) {
        if (s == to_string(m)) return m;
    }
    throw ValidationError("unknown evaluation mode '" + s +
                          "' (expected default_interp|gauss|laplacian|feature_interp)");
}

LevelSelection parse_level_selection(const std::string &s) {
    if (s == "projected_area") return LevelSelection::projected_area;
    if (s == "volume_3d") return LevelSelection::volume_3d;
    throw ValidationError("unknown level selection '" + s + "' (expected projected_area|volume_3d)");
}

void PyramidConfig::validate() const {
    if (levels < 1 || levels > kMaxLevels) {
        throw ValidationError("pyramid: levels must be in [1, " + std::to_string(kMaxLevels) + "]");
    }
    if (!(scale > 1.0)) throw ValidationError("pyramid: scale must be > 1");
    if (!(base_resolution > 0.0)) throw ValidationError("pyramid: base resolution must be > 0");
}

double PyramidConfig::resolution(int level) const { return base_resolution * std::pow(scale, level); }

template <class T>
double footprint_measure(const FrustumSample<T> &sample, LevelSelection selection) {
    if (selection == LevelSelection::projected_area) return 1.0 / double(sample.footprint_width);
    return 1.0 / std::cbrt(double(sample.volume));
}

double map_level(double P, const PyramidConfig &config) {
    if (!(P > 0.0) || !std::isfinite(P)) {
        throw ValidationError("map_level: footprint measure must be finite and > 0, got " + std::to_string(P));
    }
    return std::log(P / config.base_resolution) / std::log(config.scale);
}

LevelAssignment assign_level(double M, const PyramidConfig &config) {
    LevelAssignment a;
    a.M = M;
    const int top = config.levels - 1;
    const double candidate = config.continuous_blend ? std::floor(M) + 1.0 : std::ceil(M);
    if (candidate > double(top)) {
        a.level = top;
        a.w = 1.0;
    } else if (candidate <= 0.0) {
        a.level = 0;
        a.w = 1.0;
    } else {
        a.level = int(candidate);
        a.w = config.continuous_blend ? M - std::floor(M) : candidate - M;
        a.w = std::clamp(a.w, 0.0, 1.0);
    }
    return a;
}

int SamplePlan::lowest_level() const {
    int lo = mode == EvalMode::feature_interp ? head : kMaxLevels;
    for (int i = 0; i < count; ++i) lo = std::min(lo, terms[i].level);
    return lo;
}

int SamplePlan::highest_level() const {
    int hi = mode == EvalMode::feature_interp ? head : -1;
    for (int i = 0; i < count; ++i) hi = std::max(hi, terms[i].level);
    return hi;
}

SamplePlan plan_sample(const LevelAssignment &a, EvalMode mode) {
    SamplePlan p;
    p.mode = mode;
    p.head = a.level;
    auto push = [&p](int level, double weight) { p.terms[p.count++] = HeadTerm{level, weight}; };
    switch (mode) {
    case EvalMode::gauss: push(a.level, 1.0); break;
    case EvalMode::laplacian:
        for (int i = 0; i <= a.level; ++i) push(i, 1.0);
        break;
    case EvalMode::default_interp:
    case EvalMode::feature_interp:
        if (a.level == 0 || a.w >= 1.0) {
            push(a.level, 1.0);
        } else if (a.w <= 0.0) {
            push(a.level - 1, 1.0);
        } else {
            push(a.level, a.w);
            push(a.level - 1, 1.0 - a.w);
        }
        break;
    }
    return p;
}

template <class T>
FieldSample<T> combine_outputs(const SamplePlan &plan, const HeadRaw<T> *raws) {
    switch (plan.mode) {
    case EvalMode::feature_interp: return activate_raw(raws[0]);
    case EvalMode::laplacian: {
        HeadRaw<T> sum;
        for (int i = 0; i < plan.count; ++i) {
            sum.sigma += raws[i].sigma;
            for (int c = 0; c < 3; ++c) sum.color[c] += raws[i].color[c];
        }
        return activate_raw(sum);
    }
    case EvalMode::gauss:
    case EvalMode::default_interp: {
        FieldSample<T> out;
        for (int i = 0; i < plan.count; ++i) {
            const T w = T(plan.terms[i].weight);
            const FieldSample<T> s = activate_raw(raws[i]);
            out.sigma += w * s.sigma;
            for (int c = 0; c < 3; ++c) out.color[c] += w * s.color[c];
        }
        return out;
    }
    }
    return {};
}

template <class T>
void combine_backward(const SamplePlan &plan, const HeadRaw<T> *raws, T d_sigma, const Rgb<T> &d_color,
                      HeadRaw<T> *d_raws) {
    using ad::Activation;
    auto through = [&](const HeadRaw<T> &raw, T scale) {
        HeadRaw<T> d;
        d.sigma = scale * d_sigma * ad::activation_derivative(Activation::truncated_exp, raw.sigma);
        for (int c = 0; c < 3; ++c) {
            d.color[c] = scale * d_color[c] * ad::activation_derivative(Activation::sigmoid, raw.color[c]);
        }
        return d;
    };
    switch (plan.mode) {
    case EvalMode::feature_interp: d_raws[0] = through(raws[0], T(1)); break;
    case EvalMode::laplacian: {
        HeadRaw<T> sum;
        for (int i = 0; i < plan.count; ++i) {
            sum.sigma += raws[i].sigma;
            for (int c = 0; c < 3; ++c) sum.color[c] += raws[i].color[c];
        }
        const HeadRaw<T> d = through(sum, T(1));
        for (int i = 0; i < plan.count; ++i) d_raws[i] = d;
        break;
    }
    case EvalMode::gauss:
    case EvalMode::default_interp:
        for (int i = 0; i < plan.count; ++i) d_raws[i] = through(raws[i], T(plan.terms[i].weight));
        break;
    }
}

template <class T>
void plan_features(const PyramidField<T> &field, const SamplePlan &plan, int term, const Vec3<T> &x,
                   std::span<T> out) {
    if (plan.mode != EvalMode::feature_interp) {
        field.encode(plan.terms[term].level, x, out);
        return;
    }
    const std::size_t dim = std::size_t(field.feature_dim());
    std::vector<T> view(dim);
    std::fill(out.begin(), out.begin() + dim, T(0));
    for (int i = 0; i < plan.count; ++i) {
        field.encode(plan.terms[i].level, x, view);
        const T w = T(plan.terms[i].weight);
        for (std::size_t k = 0; k < dim; ++k) out[k] += w * view[k];
    }
}

template <class T>
FieldSample<T> evaluate(const PyramidField<T> &field, const FrustumSample<T> &sample, const LevelAssignment &a,
                        const PyramidConfig &config) {
    const SamplePlan plan = plan_sample(a, config.mode);
    const auto sh = encode_direction<T>(sample.d);
    const std::span<const T, kShDim> sh_span(sh);
    std::vector<T> feat(field.feature_dim());
    std::array<HeadRaw<T>, kMaxLevels> raws;
    if (plan.mode == EvalMode::feature_interp) {
        plan_features(field, plan, 0, sample.x, std::span<T>(feat));
        raws[0] = field.eval_head_raw(plan.head, feat, sh_span);
    } else {
        for (int i = 0; i < plan.count; ++i) {
            plan_features(field, plan, i, sample.x, std::span<T>(feat));
            raws[i] = field.eval_head_raw(plan.terms[i].level, feat, sh_span);
        }
    }
    return combine_outputs(plan, raws.data());
}

#define PYRF_INSTANTIATE(T)                                                                                       \
    template double footprint_measure<T>(const FrustumSample<T> &, LevelSelection);                            \
    template FieldSample<T> combine_outputs<T>(const SamplePlan &, const HeadRaw<T> *);                        \
    template void combine_backward<T>(const SamplePlan &, const HeadRaw<T> *, T, const Rgb<T> &, HeadRaw<T> *); \
    template void plan_features<T>(const PyramidField<T> &, const SamplePlan &, int, const Vec3<T> &,          \
                                   std::span<T>);                                                              \
    template FieldSample<T> evaluate<T>(const PyramidField<T> &, const FrustumSample<T> &,                     \
                                        const LevelAssignment &, const PyramidConfig &);

PYRF_INSTANTIATE(float)
PYRF_INSTANTIATE(double)

} // namespace pyrf
