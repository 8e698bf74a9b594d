// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// Level-of-detail selection over a pyramid of heads. A sample's footprint P
// (an inverse length) maps to a continuous level M = log_s(P / N0), which is
// clamped to an integer level l = min(L-1, max(0, ceil(M))) with blend weight
// w = l - M between heads l and l-1.
//
#pragma once

#include "pyrf/common.hpp"
#include "pyrf/field.hpp"
#include "pyrf/sampling.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace pyrf {

enum class EvalMode { default_interp, gauss, laplacian, feature_interp };
enum class LevelSelection { projected_area, volume_3d };

const char *to_string(EvalMode m);
const char *to_string(LevelSelection s);
EvalMode parse_eval_mode(const std::string &s);
LevelSelection parse_level_selection(const std::string &s);

inline constexpr int kMaxLevels = 32;

struct PyramidConfig {
    int levels = 8;
    double base_resolution = 16.0;  // N0, voxels per unit length
    double scale = 1.6;             // s
    EvalMode mode = EvalMode::default_interp;
    LevelSelection selection = LevelSelection::projected_area;
    /// Naive linear interpolation in M (l = floor(M) + 1, w = M - floor(M))
    /// instead of the ceil-based weights.
    bool continuous_blend = false;

    void validate() const;
    /// N_l = N0 * s^l.
    double resolution(int level) const;
    bool operator==(const PyramidConfig &) const = default;
};

struct LevelAssignment {
    double M = 0.0;
    int level = 0;
    double w = 1.0;  // weight of `level`; 1 - w goes to level - 1
};

/// Footprint measure P of a sample: 1 / footprint_width under projected_area,
/// 1 / cbrt(volume) under volume_3d.
template <class T>
double footprint_measure(const FrustumSample<T> &sample, LevelSelection selection);

/// M = log_s(P / N0). Throws ValidationError for P <= 0 or non-finite P.
double map_level(double P, const PyramidConfig &config);

/// Clamped level and blend weight. Out-of-range M puts all weight on the clamped level.
LevelAssignment assign_level(double M, const PyramidConfig &config);

/// One weighted contribution to a sample's output.
struct HeadTerm {
    int level = 0;
    double weight = 1.0;
};

/// Which heads a sample evaluates and how their outputs combine. For
/// feature_interp, `terms` are feature views and `head` is the single head run.
struct SamplePlan {
    EvalMode mode = EvalMode::default_interp;
    int count = 0;
    std::array<HeadTerm, kMaxLevels> terms{};
    int head = 0;

    /// Coarsest and finest level this plan queries.
    int lowest_level() const;
    int highest_level() const;
    /// Number of head (MLP) evaluations this plan performs.
    int head_evaluations() const { return mode == EvalMode::feature_interp ? 1 : count; }
};

SamplePlan plan_sample(const LevelAssignment &a, EvalMode mode);

/// Combines raw outputs (one per plan term, same order; a single raw for
/// feature_interp) into the sample's activated density and colour.
template <class T>
FieldSample<T> combine_outputs(const SamplePlan &plan, const HeadRaw<T> *raws);

/// Cotangents of the raw outputs given cotangents of the combined sample.
template <class T>
void combine_backward(const SamplePlan &plan, const HeadRaw<T> *raws, T d_sigma, const Rgb<T> &d_color,
                      HeadRaw<T> *d_raws);

/// Input features of the plan's head: the weighted blend of feature views for
/// feature_interp, the head's own view otherwise.
template <class T>
void plan_features(const PyramidField<T> &field, const SamplePlan &plan, int term, const Vec3<T> &x,
                   std::span<T> out);

/// Per-sample reference evaluation: every head is run alone on this sample.
template <class T>
FieldSample<T> evaluate(const PyramidField<T> &field, const FrustumSample<T> &sample, const LevelAssignment &a,
                        const PyramidConfig &config);

/// Per-region record of the coarsest and finest levels queried in training.
class SupervisionGrid {
public:
    static constexpr std::int8_t kNever = -1;

    SupervisionGrid() = default;
    SupervisionGrid(const Aabb &bounds, int levels, int resolution = 64);

    int resolution() const { return resolution_; }
    int levels() const { return levels_; }
    const Aabb &bounds() const { return bounds_; }

    /// Cell of p; positions outside the bounds are clamped onto them.
    std::size_t cell_of(const Vec3d &p) const;

    void record(const Vec3d &p, int lowest, int highest);
    void record_cell(std::size_t cell, int lowest, int highest);
    /// Cellwise min/max merge of another grid of identical shape.
    void merge(const SupervisionGrid &other);

    bool touched(std::size_t cell) const { return max_level_[cell] != kNever; }
    int min_level(std::size_t cell) const { return min_level_[cell]; }
    int max_level(std::size_t cell) const { return max_level_[cell]; }
    /// Global coarsest / finest supervised levels; (-1, -1) when nothing was recorded.
    int global_min() const { return global_min_; }
    int global_max() const { return global_max_; }
    bool empty() const { return global_max_ < 0; }

    /// Restricts an assignment to the supervised range of p's cell. Levels
    /// above the range clamp to its top, levels below to its bottom, both with
    /// w = 1; a blend whose l - 1 falls below the range keeps only l. Untouched
    /// cells fall back to the globally coarsest supervised level.
    LevelAssignment clamp(const Vec3d &p, const LevelAssignment &a, bool *clamped = nullptr) const;

    /// The range the clamp would allow at p, as (lowest, highest).
    std::pair<int, int> allowed_range(const Vec3d &p) const;

    const std::vector<std::int8_t> &min_levels() const { return min_level_; }
    const std::vector<std::int8_t> &max_levels() const { return max_level_; }
    void assign(std::vector<std::int8_t> min_levels, std::vector<std::int8_t> max_levels);

private:
    void refresh_global();

    Aabb bounds_;
    int levels_ = 0;
    int resolution_ = 0;
    std::vector<std::int8_t> min_level_;
    std::vector<std::int8_t> max_level_;
    int global_min_ = -1;
    int global_max_ = -1;
};

} // namespace pyrf
