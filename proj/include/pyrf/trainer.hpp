// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "pyrf/adam.hpp"
#include "pyrf/dataset.hpp"
#include "pyrf/field.hpp"
#include "pyrf/pyramid.hpp"
#include "pyrf/renderer.hpp"
#include "pyrf/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace pyrf {

/// Field and pyramid settings that together define a model.
struct ModelConfig {
    FieldConfig field;
    PyramidConfig pyramid;

    /// Sets the level count of both the field and the pyramid.
    void set_levels(int levels);
    void validate() const;
    bool operator==(const ModelConfig &) const = default;
};

enum class ScaleWeighting {
    per_pixel,  // every pixel of every train image equally likely
    per_scale,  // every scale equally likely, then a uniform pixel of that scale
};

const char *to_string(ScaleWeighting w);
ScaleWeighting parse_scale_weighting(const std::string &s);

struct TrainConfig {
    int batch_rays = 8192;
    int iterations = 3000;
    int samples_per_ray = 128;
    double lr_grid = 1e-2;
    double lr_heads = 1e-3;
    AdamConfig adam;
    std::uint64_t seed = 0;
    int occupancy_every = 16;
    int occupancy_resolution = 64;
    int supervision_resolution = 64;
    int log_every = 100;
    int eval_every = 0;  // also evaluates at the last iteration; 0 disables
    int eval_max_views = 0;  // test views per evaluation; 0 means all
    ScaleWeighting scale_weighting = ScaleWeighting::per_pixel;
    std::size_t chunk_rays = 256;
    /// Train every head segment each step, touched or not (gradients of
    /// untouched heads are zero). For equivalence checks.
    bool update_all_segments = false;

    void validate() const;
    bool operator==(const TrainConfig &) const = default;
};

/// Everything needed to continue training or to render.
struct TrainState {
    ModelConfig model;
    TrainConfig train;
    std::unique_ptr<PyramidField<float>> field;
    Adam<float> adam;
    SupervisionGrid supervision;
    OccupancyGrid occupancy;
    std::uint64_t iteration = 0;
    std::mt19937_64 rng;

    /// Fresh model initialized from train.seed.
    static TrainState create(const ModelConfig &model, const TrainConfig &train);
    /// Options for rendering with this state's occupancy and supervision grids.
    RenderOptions render_options(bool clamp_to_supervised = true) const;
};

struct StepResult {
    double loss = 0.0;
    RenderStats stats;
};

/// Uniform ray batches over the pixels of a dataset split.
class RaySampler {
public:
    RaySampler(const Dataset &dataset, Split split, ScaleWeighting weighting);

    void sample(int count, std::mt19937_64 &rng, std::vector<Ray<float>> &rays, std::vector<Rgb<float>> &targets) const;
    /// Mean stratum length over the split for `samples_per_ray` strata.
    double mean_delta(int samples_per_ray) const;

private:
    std::vector<const View *> views_;
    std::vector<std::uint64_t> cumulative_;  // pixel counts
    std::vector<std::vector<std::size_t>> by_scale_;
    ScaleWeighting weighting_;
};

/// One optimisation step on the given batch: occupancy refresh when due,
/// render, backward, Adam. Returns the loss before the update.
StepResult train_step(TrainState &state, std::span<const Ray<float>> rays, std::span<const Rgb<float>> targets,
                      double mean_delta);

struct TrainProgress {
    std::uint64_t iteration = 0;
    double wall_seconds = 0.0;
    double train_loss = 0.0;
    double test_psnr = 0.0;  // NaN when no evaluation ran this row
    double test_ssim = 0.0;
};

struct TrainRunOptions {
    std::filesystem::path out_dir;  // metrics.csv and checkpoint.pyrf; empty disables writing
    std::function<void(const TrainProgress &)> on_progress;
    /// Stop after this many iterations of the run even if the config asks for more (0: no limit).
    int stop_after = 0;
};

/// Mean over scales of per-scale mean PSNR / SSIM on (up to max_views) test views.
std::pair<double, double> quick_eval(const TrainState &state, const Dataset &dataset, int max_views);

/// Runs state.train.iterations - state.iteration steps. Writes metrics CSV
/// rows every log_every iterations and the final checkpoint. Returns the train seconds.
double train(TrainState &state, const Dataset &dataset, const TrainRunOptions &options);

} // namespace pyrf
