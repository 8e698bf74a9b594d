// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/pyramid.hpp"

#include <algorithm>
#include <cmath>

namespace pyrf {

SupervisionGrid::SupervisionGrid(const Aabb &bounds, int levels, int resolution)
    : bounds_(bounds), levels_(levels), resolution_(resolution) {
    if (resolution < 1) throw ValidationError("supervision grid: resolution must be >= 1");
    if (levels < 1 || levels > kMaxLevels) throw ValidationError("supervision grid: bad level count");
    const std::size_t n = std::size_t(resolution) * resolution * resolution;
    min_level_.assign(n, std::int8_t(levels));
    max_level_.assign(n, kNever);
}

std::size_t SupervisionGrid::cell_of(const Vec3d &p) const {
    std::size_t idx[3];
    for (int a = 0; a < 3; ++a) {
        double u = (p[a] - bounds_.lo[a]) / (bounds_.hi[a] - bounds_.lo[a]);
        if (!(u >= 0.0)) u = 0.0;  // also catches NaN
        const double v = std::min(u * resolution_, double(resolution_ - 1));
        idx[a] = std::size_t(v);
    }
    return idx[0] + std::size_t(resolution_) * (idx[1] + std::size_t(resolution_) * idx[2]);
}

void SupervisionGrid::record(const Vec3d &p, int lowest, int highest) { record_cell(cell_of(p), lowest, highest); }

void SupervisionGrid::record_cell(std::size_t cell, int lowest, int highest) {
    if (lowest < 0 || highest >= levels_ || lowest > highest) {
        throw ValidationError("supervision grid: bad level range [" + std::to_string(lowest) + ", " +
                              std::to_string(highest) + "]");
    }
    min_level_[cell] = std::int8_t(std::min<int>(min_level_[cell], lowest));
    max_level_[cell] = std::int8_t(std::max<int>(max_level_[cell], highest));
    global_min_ = global_min_ < 0 ? lowest : std::min(global_min_, lowest);
    global_max_ = std::max(global_max_, highest);
}

void SupervisionGrid::merge(const SupervisionGrid &other) {
    if (other.min_level_.size() != min_level_.size() || other.levels_ != levels_) {
        throw ValidationError("supervision grid: merge shape mismatch");
    }
    for (std::size_t i = 0; i < min_level_.size(); ++i) {
        min_level_[i] = std::min(min_level_[i], other.min_level_[i]);
        max_level_[i] = std::max(max_level_[i], other.max_level_[i]);
    }
    if (!other.empty()) {
        global_min_ = global_min_ < 0 ? other.global_min_ : std::min(global_min_, other.global_min_);
        global_max_ = std::max(global_max_, other.global_max_);
    }
}

std::pair<int, int> SupervisionGrid::allowed_range(const Vec3d &p) const {
    if (empty()) return {0, levels_ - 1};
    const std::size_t cell = cell_of(p);
    if (touched(cell)) return {min_level_[cell], max_level_[cell]};
    return {global_min_, global_min_};
}

LevelAssignment SupervisionGrid::clamp(const Vec3d &p, const LevelAssignment &a, bool *clamped) const {
    LevelAssignment out = a;
    if (!empty()) {
        const auto [lo, hi] = allowed_range(p);
        if (a.level > hi) {
            out.level = hi;
            out.w = 1.0;
        } else if (a.level < lo) {
            out.level = lo;
            out.w = 1.0;
        } else if (a.level == lo && a.w < 1.0 && a.level > 0) {
            out.w = 1.0;
        }
    }
    if (clamped) *clamped = out.level != a.level || out.w != a.w;
    return out;
}

void SupervisionGrid::assign(std::vector<std::int8_t> min_levels, std::vector<std::int8_t> max_levels) {
    if (min_levels.size() != min_level_.size() || max_levels.size() != max_level_.size()) {
        throw ValidationError("supervision grid: serialized size mismatch");
    }
    min_level_ = std::move(min_levels);
    max_level_ = std::move(max_levels);
    refresh_global();
}

void SupervisionGrid::refresh_global() {
    global_min_ = -1;
    global_max_ = -1;
    for (std::size_t i = 0; i < max_level_.size(); ++i) {
        if (max_level_[i] == kNever) continue;
        global_min_ = global_min_ < 0 ? min_level_[i] : std::min<int>(global_min_, min_level_[i]);
        global_max_ = std::max<int>(global_max_, max_level_[i]);
    }
}

} // namespace pyrf
