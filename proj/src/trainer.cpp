// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/trainer.hpp"

#include "pyrf/checkpoint.hpp"
#include "pyrf/metrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace pyrf {

void ModelConfig::set_levels(int levels) {
    field.levels = levels;
    pyramid.levels = levels;
}

void ModelConfig::validate() const {
    field.validate();
    pyramid.validate();
    if (field.levels != pyramid.levels) {
        throw ValidationError("model: field has " + std::to_string(field.levels) + " heads but the pyramid has " +
                              std::to_string(pyramid.levels) + " levels");
    }
}

const char *to_string(ScaleWeighting w) { return w == ScaleWeighting::per_pixel ? "per_pixel" : "per_scale"; }

ScaleWeighting parse_scale_weighting(const std::string &s) {
    if (s == "per_pixel") return ScaleWeighting::per_pixel;
    if (s == "per_scale") return ScaleWeighting::per_scale;
    throw ValidationError("unknown scale weighting '" + s + "' (expected per_pixel|per_scale)");
}

void TrainConfig::validate() const {
    if (batch_rays < 1) throw ValidationError("train: batch_rays must be >= 1");
    if (iterations < 0) throw ValidationError("train: iterations must be >= 0");
    if (samples_per_ray < 1) throw ValidationError("train: samples_per_ray must be >= 1");
    if (!(lr_grid > 0.0) || !(lr_heads > 0.0)) throw ValidationError("train: learning rates must be > 0");
    if (occupancy_every < 1) throw ValidationError("train: occupancy_every must be >= 1");
    if (log_every < 1) throw ValidationError("train: log_every must be >= 1");
    adam.validate();
}

TrainState TrainState::create(const ModelConfig &model, const TrainConfig &train) {
    model.validate();
    train.validate();
    TrainState s;
    s.model = model;
    s.train = train;
    s.field = std::make_unique<PyramidField<float>>(model.field);
    s.field->initialize(train.seed);
    s.adam = Adam<float>(s.field->params(), train.adam);
    s.supervision = SupervisionGrid(model.field.bounds, model.field.levels, train.supervision_resolution);
    s.occupancy = OccupancyGrid(model.field.bounds, train.occupancy_resolution);
    std::seed_seq seq{std::uint32_t(train.seed), std::uint32_t(train.seed >> 32), 0x5eedu};
    s.rng.seed(seq);
    return s;
}

RenderOptions TrainState::render_options(bool clamp_to_supervised) const {
    RenderOptions o;
    o.samples_per_ray = train.samples_per_ray;
    o.occupancy = &occupancy;
    o.supervision = clamp_to_supervised && !supervision.empty() ? &supervision : nullptr;
    o.chunk_rays = train.chunk_rays;
    return o;
}

RaySampler::RaySampler(const Dataset &dataset, Split split, ScaleWeighting weighting)
    : views_(dataset.split(split)), weighting_(weighting) {
    if (views_.empty()) throw ValidationError("ray sampler: split has no views");
    std::uint64_t total = 0;
    std::map<double, std::size_t, std::greater<>> scale_slot;
    for (std::size_t i = 0; i < views_.size(); ++i) {
        total += views_[i]->image.pixels();
        cumulative_.push_back(total);
        auto [it, fresh] = scale_slot.emplace(views_[i]->scale, scale_slot.size());
        if (fresh) by_scale_.emplace_back();
        by_scale_[it->second].push_back(i);
    }
}

void RaySampler::sample(int count, std::mt19937_64 &rng, std::vector<Ray<float>> &rays,
                        std::vector<Rgb<float>> &targets) const {
    rays.resize(std::size_t(count));
    targets.resize(std::size_t(count));
    std::uniform_int_distribution<std::uint64_t> any_pixel(0, cumulative_.back() - 1);
    std::uniform_int_distribution<std::size_t> any_scale(0, by_scale_.size() - 1);
    for (int i = 0; i < count; ++i) {
        std::size_t v;
        std::uint64_t p;
        if (weighting_ == ScaleWeighting::per_pixel) {
            const std::uint64_t u = any_pixel(rng);
            v = std::size_t(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
            p = u - (v == 0 ? 0 : cumulative_[v - 1]);
        } else {
            const auto &group = by_scale_[any_scale(rng)];
            v = group[std::uniform_int_distribution<std::size_t>(0, group.size() - 1)(rng)];
            p = std::uniform_int_distribution<std::uint64_t>(0, views_[v]->image.pixels() - 1)(rng);
        }
        const View &view = *views_[v];
        const Pixel px{int(p % std::uint64_t(view.image.width)), int(p / std::uint64_t(view.image.width))};
        rays[i] = generate_ray<float>(view.camera, px);
        targets[i] = view.image.pixel(px.x, px.y);
    }
}

double RaySampler::mean_delta(int samples_per_ray) const {
    double sum = 0.0;
    for (const View *v : views_) sum += (v->camera.far - v->camera.near) / samples_per_ray;
    return sum / double(views_.size());
}

StepResult train_step(TrainState &state, std::span<const Ray<float>> rays, std::span<const Rgb<float>> targets,
                      double mean_delta) {
    PyramidField<float> &field = *state.field;
    const TrainConfig &tc = state.train;
    if (state.iteration % std::uint64_t(tc.occupancy_every) == 0) {
        update_occupancy(field, state.model.pyramid, state.occupancy, &state.supervision, mean_delta, &state.rng);
    }
    auto &store = field.params();
    store.zero_grads();
    RenderOptions opt = state.render_options(false);

    StepResult out;
    std::vector<Rgb<float>> predicted;
    auto max_abs_grad = [&store] {
        float m = 0.0f;
        for (float g : store.grads()) m = std::isfinite(g) ? std::max(m, std::abs(g)) : std::numeric_limits<float>::infinity();
        return m;
    };
    TrainBatchResult r;
    try {
        r = render_rays_backward(field, state.model.pyramid, rays, targets, opt, &state.rng, store.grads(),
                                 &state.supervision, &predicted, &out.stats);
    } catch (const NumericalError &e) {
        throw NumericalError("iteration " + std::to_string(state.iteration) + ": " + e.what() +
                             "; max |grad| = " + std::to_string(max_abs_grad()));
    }
    for (float g : store.grads()) {
        if (!std::isfinite(g)) {
            throw NumericalError("iteration " + std::to_string(state.iteration) +
                                 ": non-finite gradient (loss " + std::to_string(r.loss) + ", max |grad| = inf)");
        }
    }
    out.loss = r.loss;

    const auto &segs = store.segments();
    std::vector<double> lr(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) lr[i] = segs[i].name.rfind("grid", 0) == 0 ? tc.lr_grid : tc.lr_heads;
    state.adam.step(store, lr, tc.update_all_segments ? nullptr : &r.touched_segments);
    ++state.iteration;
    return out;
}

std::pair<double, double> quick_eval(const TrainState &state, const Dataset &dataset, int max_views) {
    std::map<double, std::pair<double, double>, std::greater<>> sum;
    std::map<double, int, std::greater<>> count;
    const RenderOptions opt = state.render_options(true);
    for (const View *v : dataset.split(Split::test)) {
        if (max_views > 0 && v->camera_id >= max_views) continue;
        const Image img = render_image(*state.field, state.model.pyramid, v->camera, opt);
        sum[v->scale].first += psnr(img, v->image);
        sum[v->scale].second += ssim(img, v->image);
        ++count[v->scale];
    }
    double p = 0.0, s = 0.0;
    for (const auto &[scale, ps] : sum) {
        p += ps.first / count[scale];
        s += ps.second / count[scale];
    }
    return {p / double(sum.size()), s / double(sum.size())};
}

double train(TrainState &state, const Dataset &dataset, const TrainRunOptions &options) {
    using clock = std::chrono::steady_clock;
    const TrainConfig &tc = state.train;
    const RaySampler sampler(dataset, Split::train, tc.scale_weighting);
    const double mean_delta = sampler.mean_delta(tc.samples_per_ray);

    std::ofstream csv;
    if (!options.out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(options.out_dir, ec);
        if (ec) throw IoError("cannot create " + options.out_dir.string() + ": " + ec.message());
        const auto path = options.out_dir / "metrics.csv";
        const bool append = state.iteration > 0 && std::filesystem::exists(path);
        csv.open(path, append ? std::ios::app : std::ios::trunc);
        if (!csv) throw IoError("cannot write " + path.string());
        if (!append) csv << "iteration,wall_seconds,train_loss,test_psnr,test_ssim\n";
    }

    const auto start = clock::now();
    double eval_seconds = 0.0, loss_sum = 0.0;
    int loss_count = 0;
    std::uint64_t samples = 0, head_evals = 0;
    std::vector<Ray<float>> rays;
    std::vector<Rgb<float>> targets;
    std::uint64_t done = 0;
    const std::uint64_t total = std::uint64_t(tc.iterations);
    while (state.iteration < total && (options.stop_after <= 0 || done < std::uint64_t(options.stop_after))) {
        sampler.sample(tc.batch_rays, state.rng, rays, targets);
        const StepResult r = train_step(state, rays, targets, mean_delta);
        ++done;
        loss_sum += r.loss;
        ++loss_count;
        samples += r.stats.samples;
        head_evals += r.stats.total_head_evaluations();
        const bool last = state.iteration == total;
        const bool eval_now = tc.eval_every > 0 && (last || state.iteration % std::uint64_t(tc.eval_every) == 0);
        if (state.iteration % std::uint64_t(tc.log_every) == 0 || eval_now || last) {
            TrainProgress p;
            p.iteration = state.iteration;
            p.train_loss = loss_sum / loss_count;
            p.test_psnr = p.test_ssim = std::numeric_limits<double>::quiet_NaN();
            if (eval_now) {
                const auto e0 = clock::now();
                std::tie(p.test_psnr, p.test_ssim) = quick_eval(state, dataset, tc.eval_max_views);
                eval_seconds += std::chrono::duration<double>(clock::now() - e0).count();
            }
            p.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
            if (csv.is_open()) {
                csv << p.iteration << ',' << p.wall_seconds << ',' << p.train_loss << ',';
                if (eval_now) csv << p.test_psnr << ',' << p.test_ssim;
                else csv << ',';
                csv << '\n' << std::flush;
            }
            spdlog::info("iter {:>6}  loss {:.6f}  {:.1f}s  samples/ray {:.1f}  heads/sample {:.2f}{}", p.iteration,
                         p.train_loss, p.wall_seconds, double(samples) / (double(loss_count) * tc.batch_rays),
                         samples ? double(head_evals) / double(samples) : 0.0,
                         eval_now ? fmt::format("  test psnr {:.2f} ssim {:.4f}", p.test_psnr, p.test_ssim) : "");
            samples = head_evals = 0;
            if (options.on_progress) options.on_progress(p);
            loss_sum = 0.0;
            loss_count = 0;
        }
    }
    const double seconds = std::chrono::duration<double>(clock::now() - start).count() - eval_seconds;
    if (!options.out_dir.empty()) save_checkpoint(options.out_dir / "checkpoint.pyrf", state);
    return seconds;
}

} // namespace pyrf
