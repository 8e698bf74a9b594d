// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "pyrf/dataset.hpp"
#include "pyrf/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pyrf {

struct ScaleRow {
    double scale = 1.0;
    int images = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double avg_error_2 = 0.0;  // geometric mean of MSE and sqrt(1 - SSIM); no LPIPS term
};

struct MetricsReport {
    std::vector<ScaleRow> rows;  // descending scale
    ScaleRow aggregate;          // means of the per-scale rows; scale = 0
    double train_seconds = 0.0;
    std::string fingerprint;
    std::uint64_t clamped_samples = 0;
};

struct EvalOptions {
    /// Write renders/{scale}/{index}.png (render | ground truth).
    bool write_images = true;
    /// Restrict to test cameras with id < max_views (0: all).
    int max_views = 0;
    /// Rendering threads; 0 uses the hardware concurrency.
    int threads = 0;
};

/// Checks that a model can be evaluated on a dataset; throws naming the mismatched field.
void check_compatible(const TrainState &state, const Dataset &dataset);

/// Renders every test view at its native scale with supervision clamping and
/// scores it. Views render on parallel threads; the report does not depend on
/// the thread count. Writes report.csv, report.json and renders under out_dir when non-empty.
MetricsReport evaluate_model(const TrainState &state, const Dataset &dataset, const std::filesystem::path &out_dir,
                             const EvalOptions &options = {});

/// Scores already-rendered images against ground truth, grouping by scale.
MetricsReport score_images(const std::vector<Image> &rendered, const std::vector<const View *> &views);

void write_report(const MetricsReport &report, const std::filesystem::path &out_dir);

struct AblationVariant {
    EvalMode mode = EvalMode::default_interp;
    GridSharing sharing = GridSharing::shared;
    LevelSelection selection = LevelSelection::projected_area;

    std::string name() const;
};

/// The full {mode} x {sharing} x {selection} matrix, 16 variants.
std::vector<AblationVariant> ablation_matrix();

struct AblationRow {
    AblationVariant variant;
    bool ok = false;
    std::string error;
    MetricsReport report;
};

/// Trains and evaluates each variant with the same seed and budget. A failing
/// variant is recorded and the rest still run. Writes ablation.csv, ablation.json
/// and ablation.md into out_dir when non-empty.
std::vector<AblationRow> ablate(const Dataset &dataset, const ModelConfig &base_model, const TrainConfig &train,
                                const std::vector<AblationVariant> &variants, const std::filesystem::path &out_dir);

void write_ablation(const std::vector<AblationRow> &rows, const std::filesystem::path &out_dir);

/// Orbit of `frames` cameras around the scene's view axis at `distance`,
/// rendered to out_dir/frame_0000.png and so on.
void render_flythrough(const TrainState &state, SceneKind scene, int frames, int resolution, double distance,
                       const std::filesystem::path &out_dir);

} // namespace pyrf
