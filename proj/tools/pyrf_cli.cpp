// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// pyrf command line: dataset generation, training, evaluation, rendering and
// the ablation driver. Exit codes: 0 success, 1 invalid input, 2 I/O failure.
//
#include "pyrf/checkpoint.hpp"
#include "pyrf/dataset.hpp"
#include "pyrf/evaluation.hpp"
#include "pyrf/trainer.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

using namespace pyrf;

struct ModelFlags {
    int levels = 8;
    std::string mode = "default_interp";
    std::string selection = "projected_area";
    bool shared = false;
    bool separate = false;
};

struct TrainFlags {
    int iterations = 3000;
    int batch_rays = 8192;
    int samples = 128;
    std::uint64_t seed = 0;
    int eval_every = 0;
    int eval_views = 0;
    int log_every = 100;
    std::string weighting = "per_pixel";
};

void add_model_flags(CLI::App *cmd, ModelFlags &f) {
    cmd->add_option("--levels", f.levels, "Pyramid levels (heads); 1 gives a single-level baseline")
        ->capture_default_str();
    cmd->add_option("--mode", f.mode, "Evaluation mode: default_interp|gauss|laplacian|feature_interp")
        ->capture_default_str();
    cmd->add_option("--level-selection", f.selection, "Footprint measure: projected_area|volume_3d")
        ->capture_default_str();
    auto *shared = cmd->add_flag("--shared-grid", f.shared, "All heads read one hash grid (default)");
    auto *separate = cmd->add_flag("--separate-grids", f.separate, "Each head owns its hash grid");
    shared->excludes(separate);
}

void add_train_flags(CLI::App *cmd, TrainFlags &f) {
    cmd->add_option("--iterations", f.iterations, "Optimisation steps")->capture_default_str();
    cmd->add_option("--batch-rays", f.batch_rays, "Rays per batch")->capture_default_str();
    cmd->add_option("--samples-per-ray", f.samples, "Stratified samples per ray")->capture_default_str();
    cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
    cmd->add_option("--eval-every", f.eval_every, "Test evaluation cadence in iterations, plus the last one (0: none)")
        ->capture_default_str();
    cmd->add_option("--eval-views", f.eval_views, "Test cameras used by in-training evaluation (0: all)")
        ->capture_default_str();
    cmd->add_option("--log-every", f.log_every, "Metrics row cadence in iterations")->capture_default_str();
    cmd->add_option("--scale-weighting", f.weighting, "Ray sampling across scales: per_pixel|per_scale")
        ->capture_default_str();
}

ModelConfig make_model(const ModelFlags &f, const Dataset *dataset) {
    ModelConfig m;
    m.set_levels(f.levels);
    m.pyramid.mode = parse_eval_mode(f.mode);
    m.pyramid.selection = parse_level_selection(f.selection);
    m.field.sharing = f.separate ? GridSharing::separate : GridSharing::shared;
    if (dataset) m.field.bounds = dataset->bounds;
    m.validate();
    return m;
}

TrainConfig make_train(const TrainFlags &f) {
    TrainConfig t;
    t.iterations = f.iterations;
    t.batch_rays = f.batch_rays;
    t.samples_per_ray = f.samples;
    t.seed = f.seed;
    t.eval_every = f.eval_every;
    t.eval_max_views = f.eval_views;
    t.log_every = f.log_every;
    t.scale_weighting = parse_scale_weighting(f.weighting);
    t.validate();
    return t;
}

int run(int argc, char **argv) {
    CLI::App app{"pyrf: multiscale radiance fields with a pyramid of level-of-detail heads"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    // generate-data
    auto *gen = app.add_subcommand("generate-data", "Render a procedural multiscale dataset");
    DatasetOptions dopt;
    std::string gen_scene = "slanted_checkerboard", gen_out;
    gen->add_option("--scene", gen_scene, "slanted_checkerboard|brick_wall|colored_spheres")->capture_default_str();
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--seed", dopt.seed, "Random seed")->capture_default_str();
    gen->add_option("--train-cams", dopt.train_cameras, "Training cameras")->capture_default_str();
    gen->add_option("--test-cams", dopt.test_cameras, "Test cameras")->capture_default_str();
    gen->add_option("--resolution", dopt.resolution, "Full-scale image side in pixels")->capture_default_str();
    gen->add_option("--supersample", dopt.supersample, "Rays per pixel (perfect square)")->capture_default_str();

    // train
    auto *tr = app.add_subcommand("train", "Train a model on a dataset");
    std::string tr_data, tr_out, tr_resume;
    ModelFlags tr_model;
    TrainFlags tr_train;
    tr->add_option("--data", tr_data, "Dataset directory")->required();
    tr->add_option("--out", tr_out, "Output directory for metrics.csv and checkpoint.pyrf")->required();
    tr->add_option("--resume", tr_resume, "Continue from this checkpoint (model flags are then ignored)");
    add_model_flags(tr, tr_model);
    add_train_flags(tr, tr_train);

    // eval
    auto *ev = app.add_subcommand("eval", "Score a checkpoint on the test split, per scale");
    std::string ev_ckpt, ev_data, ev_out;
    int ev_views = 0;
    ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
    ev->add_option("--data", ev_data, "Dataset directory")->required();
    ev->add_option("--out", ev_out, "Report directory")->required();
    ev->add_option("--max-views", ev_views, "Only test cameras with id below this (0: all)")->capture_default_str();

    // render
    auto *rd = app.add_subcommand("render", "Render an orbit flythrough as numbered PNGs");
    std::string rd_ckpt, rd_out, rd_scene = "slanted_checkerboard";
    int rd_frames = 24, rd_res = 128;
    double rd_dist = 2.0;
    rd->add_option("--checkpoint", rd_ckpt, "Checkpoint file")->required();
    rd->add_option("--out", rd_out, "Output directory")->required();
    rd->add_option("--scene", rd_scene, "Scene whose view axis the orbit follows")->capture_default_str();
    rd->add_option("--frames", rd_frames, "Number of frames")->capture_default_str();
    rd->add_option("--resolution", rd_res, "Image side in pixels")->capture_default_str();
    rd->add_option("--distance", rd_dist, "Orbit radius")->capture_default_str();

    // ablate
    auto *ab = app.add_subcommand("ablate", "Train and score the mode x grid x level-selection matrix");
    std::string ab_data, ab_out;
    ModelFlags ab_model;
    TrainFlags ab_train;
    std::vector<std::string> ab_only;
    ab->add_option("--data", ab_data, "Dataset directory")->required();
    ab->add_option("--out", ab_out, "Output directory")->required();
    ab->add_option("--levels", ab_model.levels, "Pyramid levels")->capture_default_str();
    ab->add_option("--only", ab_only, "Restrict to variants by name, e.g. gauss-shared-projected_area");
    add_train_flags(ab, ab_train);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 1;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    if (*gen) {
        dopt.scene = parse_scene_kind(gen_scene);
        const Dataset ds = build_dataset(dopt);
        save_dataset(ds, gen_out);
        spdlog::info("wrote {} images to {}", ds.views.size(), gen_out);
    } else if (*tr) {
        const Dataset ds = load_dataset(tr_data);
        TrainState state;
        if (!tr_resume.empty()) {
            state = load_checkpoint(tr_resume);
            state.train.iterations = tr_train.iterations;
            check_compatible(state, ds);
        } else {
            state = TrainState::create(make_model(tr_model, &ds), make_train(tr_train));
        }
        TrainRunOptions ro;
        ro.out_dir = tr_out;
        const double seconds = train(state, ds, ro);
        spdlog::info("trained to iteration {} in {:.1f}s", state.iteration, seconds);
    } else if (*ev) {
        const Dataset ds = load_dataset(ev_data);
        const TrainState state = load_checkpoint(ev_ckpt);
        EvalOptions eo;
        eo.max_views = ev_views;
        const MetricsReport r = evaluate_model(state, ds, ev_out, eo);
        for (const ScaleRow &row : r.rows) {
            std::cout << "scale " << row.scale << ": psnr " << row.psnr << " ssim " << row.ssim << " avg_error_2 "
                      << row.avg_error_2 << '\n';
        }
        std::cout << "mean: psnr " << r.aggregate.psnr << " ssim " << r.aggregate.ssim << " avg_error_2 "
                  << r.aggregate.avg_error_2 << '\n';
    } else if (*rd) {
        const TrainState state = load_checkpoint(rd_ckpt);
        render_flythrough(state, parse_scene_kind(rd_scene), rd_frames, rd_res, rd_dist, rd_out);
    } else if (*ab) {
        const Dataset ds = load_dataset(ab_data);
        const ModelConfig base = make_model(ab_model, &ds);
        const TrainConfig tc = make_train(ab_train);
        std::vector<AblationVariant> variants;
        for (const auto &v : ablation_matrix()) {
            if (ab_only.empty() || std::find(ab_only.begin(), ab_only.end(), v.name()) != ab_only.end()) {
                variants.push_back(v);
            }
        }
        if (variants.empty()) throw ValidationError("--only matched no variant");
        const auto rows = ablate(ds, base, tc, variants, ab_out);
        for (const auto &r : rows) {
            std::cout << r.variant.name() << ": "
                      << (r.ok ? "avg_error_2 " + std::to_string(r.report.aggregate.avg_error_2) : "failed: " + r.error)
                      << '\n';
        }
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    try {
        return run(argc, argv);
    } catch (const pyrf::IoError &e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const pyrf::ValidationError &e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception &e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}
