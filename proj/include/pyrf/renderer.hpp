// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// Ray rendering through the level pyramid. The batched path gathers every head
// evaluation of a chunk of rays, groups them by head level and runs each level
// once over its whole group; the naive path evaluates sample by sample. Both
// produce bit-identical colours because the dense kernel computes every
// column independently of batch size and position.
//
#pragma once

#include "pyrf/camera.hpp"
#include "pyrf/composite.hpp"
#include "pyrf/field.hpp"
#include "pyrf/image.hpp"
#include "pyrf/pyramid.hpp"
#include "pyrf/sampling.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pyrf {

struct RenderOptions {
    int samples_per_ray = 128;
    Rgb<double> background = Rgb<double>::Ones();
    /// Skip samples in unoccupied cells when set.
    const OccupancyGrid *occupancy = nullptr;
    /// Clamp level assignments to the supervised range when set.
    const SupervisionGrid *supervision = nullptr;
    /// Throw if a clamped sample still queries a level outside its cell's range.
    bool check_supervision = true;
    /// Rays per internal batch; bounds scratch memory.
    std::size_t chunk_rays = 256;
};

struct RenderStats {
    std::array<std::uint64_t, kMaxLevels> head_evaluations{};
    std::uint64_t samples = 0;
    std::uint64_t clamped = 0;

    void add(const RenderStats &other);
    std::uint64_t total_head_evaluations() const;
};

/// Level assignment of a sample, clamped to `supervision` when given.
template <class T>
LevelAssignment sample_assignment(const FrustumSample<T> &sample, const PyramidConfig &config,
                                  const SupervisionGrid *supervision, bool *clamped = nullptr);

/// Reference renderer: per-sample pyramid evaluation, then compositing.
template <class T>
Rgb<T> render_ray_naive(const PyramidField<T> &field, const PyramidConfig &config, const Ray<T> &ray,
                        const RenderOptions &options, std::mt19937_64 *rng, RenderStats *stats = nullptr);

/// Batched forward render. Rays consume the rng in order, as consecutive
/// render_ray_naive calls would.
template <class T>
std::vector<Rgb<T>> render_rays(const PyramidField<T> &field, const PyramidConfig &config,
                                std::span<const Ray<T>> rays, const RenderOptions &options, std::mt19937_64 *rng,
                                RenderStats *stats = nullptr);

/// Renders every pixel of `camera` with midpoint samples (no rng).
template <class T>
Image render_image(const PyramidField<T> &field, const PyramidConfig &config, const Camera &camera,
                   const RenderOptions &options, RenderStats *stats = nullptr);

struct TrainBatchResult {
    double loss = 0.0;
    /// Per-segment flag: whether any gradient was written into the segment.
    std::vector<bool> touched_segments;
};

/// Renders `rays`, accumulates d mse_loss / d params into `grads` and, when
/// `record` is set, records each sample's queried level range. `predicted`
/// receives the rendered colours when non-null.
template <class T>
TrainBatchResult render_rays_backward(const PyramidField<T> &field, const PyramidConfig &config,
                                      std::span<const Ray<T>> rays, std::span<const Rgb<T>> targets,
                                      const RenderOptions &options, std::mt19937_64 *rng, std::span<T> grads,
                                      SupervisionGrid *record, std::vector<Rgb<T>> *predicted = nullptr,
                                      RenderStats *stats = nullptr);

/// One occupancy refresh: every cell gets max(decay * old, 1 - exp(-sigma * mean_delta))
/// with sigma queried at a point in the cell (jittered when rng is set, the
/// centre otherwise) at the finest level supervised there.
template <class T>
void update_occupancy(const PyramidField<T> &field, const PyramidConfig &config, OccupancyGrid &grid,
                      const SupervisionGrid *supervision, double mean_delta, std::mt19937_64 *rng);

} // namespace pyrf
