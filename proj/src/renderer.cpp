// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/renderer.hpp"

#include "pyrf/autodiff.hpp"
#include "pyrf/sh_encoding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pyrf {

void RenderStats::add(const RenderStats &other) {
    for (int l = 0; l < kMaxLevels; ++l) head_evaluations[l] += other.head_evaluations[l];
    samples += other.samples;
    clamped += other.clamped;
}

std::uint64_t RenderStats::total_head_evaluations() const {
    std::uint64_t n = 0;
    for (auto v : head_evaluations) n += v;
    return n;
}

template <class T>
LevelAssignment sample_assignment(const FrustumSample<T> &sample, const PyramidConfig &config,
                                  const SupervisionGrid *supervision, bool *clamped) {
    const double M = map_level(footprint_measure(sample, config.selection), config);
    LevelAssignment a = assign_level(M, config);
    if (clamped) *clamped = false;
    if (supervision) a = supervision->clamp(sample.x.template cast<double>(), a, clamped);
    return a;
}

namespace {

void check_supervised(const SupervisionGrid &grid, const Vec3d &x, const SamplePlan &plan) {
    const auto [lo, hi] = grid.allowed_range(x);
    if (plan.lowest_level() < lo || plan.highest_level() > hi) {
        throw Error("supervision check failed: sample at (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) +
                    ", " + std::to_string(x[2]) + ") queries levels [" + std::to_string(plan.lowest_level()) +
                    ", " + std::to_string(plan.highest_level()) + "] outside supervised range [" +
                    std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

/// Every sample of a chunk of rays, with its head evaluations grouped by level.
template <class T>
struct Chunk {
    std::vector<std::size_t> ray_begin;  // rays + 1 offsets into samples
    std::vector<FrustumSample<T>> samples;
    std::vector<SamplePlan> plans;
    std::vector<std::array<T, kShDim>> sh;
    // Head evaluation j of sample s lives at column task_column[task_begin[s] + j] of
    // level task_level[task_begin[s] + j].
    std::vector<std::size_t> task_begin;
    std::vector<std::uint8_t> task_level;
    std::vector<std::uint32_t> task_column;
    std::array<HeadBatch<T>, kMaxLevels> batches;
    std::array<std::vector<std::uint32_t>, kMaxLevels> column_sample;
    std::array<std::vector<std::uint8_t>, kMaxLevels> column_term;
    std::vector<T> sigma, delta;
    std::vector<Rgb<T>> color;
    std::vector<CompositeResult<T>> composites;
    std::vector<Rgb<T>> ray_color;
    // backward scratch
    std::vector<T> d_sigma;
    AlignedVector<T> d_feat;
    std::vector<Rgb<T>> d_color;
    std::array<AlignedVector<T>, kMaxLevels> lvl_dsigma, lvl_dcolor;

    std::size_t num_rays() const { return ray_begin.size() - 1; }

    HeadRaw<T> raw(std::size_t s, int j) const {
        const std::size_t t = task_begin[s] + std::size_t(j);
        const HeadBatch<T> &b = batches[task_level[t]];
        const std::size_t col = task_column[t];
        HeadRaw<T> r;
        r.sigma = b.density_out[col];
        for (int c = 0; c < 3; ++c) r.color[c] = b.color_out[std::size_t(c) * b.n + col];
        return r;
    }
};

template <class T>
void forward_chunk(const PyramidField<T> &field, const PyramidConfig &config, std::span<const Ray<T>> rays,
                   const RenderOptions &options, std::mt19937_64 *rng, Chunk<T> &ch, RenderStats *stats) {
    ch.ray_begin.assign(1, 0);
    ch.samples.clear();
    for (const Ray<T> &ray : rays) {
        auto s = sample_ray(ray, options.samples_per_ray, options.occupancy, rng);
        ch.samples.insert(ch.samples.end(), s.begin(), s.end());
        ch.ray_begin.push_back(ch.samples.size());
    }
    const std::size_t ns = ch.samples.size();
    ch.plans.resize(ns);
    ch.sh.resize(ns);
    ch.task_begin.resize(ns + 1);
    ch.task_level.clear();
    ch.task_column.clear();
    for (auto &v : ch.column_sample) v.clear();
    for (auto &v : ch.column_term) v.clear();

    std::uint64_t clamped_count = 0;
    for (std::size_t s = 0; s < ns; ++s) {
        const FrustumSample<T> &smp = ch.samples[s];
        bool clamped = false;
        const LevelAssignment a = sample_assignment(smp, config, options.supervision, &clamped);
        clamped_count += clamped ? 1 : 0;
        const SamplePlan plan = plan_sample(a, config.mode);
        if (options.supervision && options.check_supervision) {
            check_supervised(*options.supervision, smp.x.template cast<double>(), plan);
        }
        ch.plans[s] = plan;
        ch.sh[s] = encode_direction<T>(smp.d);
        ch.task_begin[s] = ch.task_level.size();
        const int evals = plan.head_evaluations();
        for (int j = 0; j < evals; ++j) {
            const int level = plan.mode == EvalMode::feature_interp ? plan.head : plan.terms[j].level;
            ch.task_level.push_back(std::uint8_t(level));
            ch.task_column.push_back(std::uint32_t(ch.column_sample[level].size()));
            ch.column_sample[level].push_back(std::uint32_t(s));
            ch.column_term[level].push_back(std::uint8_t(j));
        }
    }
    ch.task_begin[ns] = ch.task_level.size();

    const int dim = field.feature_dim();
    std::vector<T> feat(dim);
    for (int level = 0; level < field.num_levels(); ++level) {
        const std::size_t n = ch.column_sample[level].size();
        HeadBatch<T> &b = ch.batches[level];
        b.resize(n, dim);
        if (n == 0) continue;
        for (std::size_t col = 0; col < n; ++col) {
            const std::size_t s = ch.column_sample[level][col];
            plan_features(field, ch.plans[s], ch.column_term[level][col], ch.samples[s].x, std::span<T>(feat));
            for (int k = 0; k < dim; ++k) b.features[std::size_t(k) * n + col] = feat[k];
            for (int k = 0; k < kShDim; ++k) b.sh[std::size_t(k) * n + col] = ch.sh[s][k];
        }
        field.head_forward(level, b);
        if (stats) stats->head_evaluations[level] += n;
    }

    ch.sigma.resize(ns);
    ch.delta.resize(ns);
    ch.color.resize(ns);
    std::array<HeadRaw<T>, kMaxLevels> raws;
    for (std::size_t s = 0; s < ns; ++s) {
        const int evals = ch.plans[s].head_evaluations();
        for (int j = 0; j < evals; ++j) raws[j] = ch.raw(s, j);
        const FieldSample<T> out = combine_outputs(ch.plans[s], raws.data());
        ch.sigma[s] = out.sigma;
        ch.delta[s] = ch.samples[s].delta;
        ch.color[s] = out.color;
    }

    const Rgb<T> bg = options.background.template cast<T>();
    const std::size_t nr = ch.num_rays();
    ch.composites.resize(nr);
    ch.ray_color.resize(nr);
    for (std::size_t r = 0; r < nr; ++r) {
        const std::size_t b0 = ch.ray_begin[r], len = ch.ray_begin[r + 1] - b0;
        ch.composites[r] = composite<T>(std::span<const T>(ch.sigma.data() + b0, len),
                                        std::span<const T>(ch.delta.data() + b0, len),
                                        std::span<const Rgb<T>>(ch.color.data() + b0, len), bg);
        ch.ray_color[r] = ch.composites[r].color;
    }
    if (stats) {
        stats->samples += ns;
        stats->clamped += clamped_count;
    }
}

template <class T>
void backward_chunk(const PyramidField<T> &field, const RenderOptions &options, Chunk<T> &ch,
                    std::span<const Rgb<T>> d_ray, std::span<T> grads, std::vector<bool> &grid_touched,
                    std::vector<bool> &head_touched) {
    const std::size_t ns = ch.samples.size();
    std::vector<T> &d_sigma = ch.d_sigma;
    std::vector<Rgb<T>> &d_color = ch.d_color;
    d_sigma.resize(ns);
    d_color.resize(ns);
    const Rgb<T> bg = options.background.template cast<T>();
    for (std::size_t r = 0; r < ch.num_rays(); ++r) {
        const std::size_t b0 = ch.ray_begin[r], len = ch.ray_begin[r + 1] - b0;
        composite_backward<T>(std::span<const T>(ch.sigma.data() + b0, len),
                              std::span<const T>(ch.delta.data() + b0, len),
                              std::span<const Rgb<T>>(ch.color.data() + b0, len), bg, ch.composites[r], d_ray[r],
                              std::span<T>(d_sigma.data() + b0, len), std::span<Rgb<T>>(d_color.data() + b0, len));
    }

    const int L = field.num_levels();
    auto &lvl_dsigma = ch.lvl_dsigma;
    auto &lvl_dcolor = ch.lvl_dcolor;
    for (int level = 0; level < L; ++level) {
        lvl_dsigma[level].assign(ch.batches[level].n, T(0));
        lvl_dcolor[level].assign(ch.batches[level].n * 3, T(0));
    }
    std::array<HeadRaw<T>, kMaxLevels> raws, d_raws;
    for (std::size_t s = 0; s < ns; ++s) {
        const int evals = ch.plans[s].head_evaluations();
        for (int j = 0; j < evals; ++j) raws[j] = ch.raw(s, j);
        combine_backward(ch.plans[s], raws.data(), d_sigma[s], d_color[s], d_raws.data());
        for (int j = 0; j < evals; ++j) {
            const std::size_t t = ch.task_begin[s] + std::size_t(j);
            const int level = ch.task_level[t];
            const std::size_t col = ch.task_column[t], n = ch.batches[level].n;
            lvl_dsigma[level][col] = d_raws[j].sigma;
            for (int c = 0; c < 3; ++c) lvl_dcolor[level][std::size_t(c) * n + col] = d_raws[j].color[c];
        }
    }

    const int dim = field.feature_dim();
    AlignedVector<T> &d_feat = ch.d_feat;
    std::vector<T> col_feat(dim), scaled(dim);
    for (int level = 0; level < L; ++level) {
        const HeadBatch<T> &b = ch.batches[level];
        const std::size_t n = b.n;
        if (n == 0) continue;
        head_touched[level] = true;
        d_feat.resize(n * dim);
        field.head_backward(level, b, lvl_dsigma[level].data(), lvl_dcolor[level].data(), grads, d_feat.data());
        for (std::size_t col = 0; col < n; ++col) {
            const std::size_t s = ch.column_sample[level][col];
            const SamplePlan &plan = ch.plans[s];
            for (int k = 0; k < dim; ++k) col_feat[k] = d_feat[std::size_t(k) * n + col];
            if (plan.mode == EvalMode::feature_interp) {
                for (int i = 0; i < plan.count; ++i) {
                    const T w = T(plan.terms[i].weight);
                    for (int k = 0; k < dim; ++k) scaled[k] = w * col_feat[k];
                    field.encode_backward(plan.terms[i].level, ch.samples[s].x, scaled, grads);
                    grid_touched[field.grid_index(plan.terms[i].level)] = true;
                }
            } else {
                const int view = plan.terms[ch.column_term[level][col]].level;
                field.encode_backward(view, ch.samples[s].x, col_feat, grads);
                grid_touched[field.grid_index(view)] = true;
            }
        }
    }
}

} // namespace

template <class T>
Rgb<T> render_ray_naive(const PyramidField<T> &field, const PyramidConfig &config, const Ray<T> &ray,
                        const RenderOptions &options, std::mt19937_64 *rng, RenderStats *stats) {
    const auto samples = sample_ray(ray, options.samples_per_ray, options.occupancy, rng);
    std::vector<T> sigma, delta;
    std::vector<Rgb<T>> color;
    for (const auto &smp : samples) {
        bool clamped = false;
        const LevelAssignment a = sample_assignment(smp, config, options.supervision, &clamped);
        const SamplePlan plan = plan_sample(a, config.mode);
        if (options.supervision && options.check_supervision) {
            check_supervised(*options.supervision, smp.x.template cast<double>(), plan);
        }
        const FieldSample<T> out = evaluate(field, smp, a, config);
        sigma.push_back(out.sigma);
        delta.push_back(smp.delta);
        color.push_back(out.color);
        if (stats) {
            ++stats->samples;
            stats->clamped += clamped ? 1 : 0;
            if (plan.mode == EvalMode::feature_interp) {
                ++stats->head_evaluations[plan.head];
            } else {
                for (int i = 0; i < plan.count; ++i) ++stats->head_evaluations[plan.terms[i].level];
            }
        }
    }
    return composite<T>(sigma, delta, color, options.background.template cast<T>()).color;
}

template <class T>
std::vector<Rgb<T>> render_rays(const PyramidField<T> &field, const PyramidConfig &config,
                                std::span<const Ray<T>> rays, const RenderOptions &options, std::mt19937_64 *rng,
                                RenderStats *stats) {
    std::vector<Rgb<T>> out;
    out.reserve(rays.size());
    Chunk<T> ch;
    const std::size_t step = std::max<std::size_t>(1, options.chunk_rays);
    for (std::size_t r0 = 0; r0 < rays.size(); r0 += step) {
        const std::size_t len = std::min(step, rays.size() - r0);
        forward_chunk(field, config, rays.subspan(r0, len), options, rng, ch, stats);
        out.insert(out.end(), ch.ray_color.begin(), ch.ray_color.end());
    }
    return out;
}

template <class T>
Image render_image(const PyramidField<T> &field, const PyramidConfig &config, const Camera &camera,
                   const RenderOptions &options, RenderStats *stats) {
    camera.validate();
    std::vector<Pixel> pixels;
    pixels.reserve(std::size_t(camera.width) * camera.height);
    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) pixels.push_back({x, y});
    }
    const auto rays = generate_rays<T>(camera, pixels);
    const auto colors = render_rays(field, config, std::span<const Ray<T>>(rays), options, nullptr, stats);
    Image img(camera.width, camera.height);
    for (std::size_t i = 0; i < pixels.size(); ++i) img.set(pixels[i].x, pixels[i].y, colors[i].template cast<float>());
    return img;
}

template <class T>
TrainBatchResult render_rays_backward(const PyramidField<T> &field, const PyramidConfig &config,
                                      std::span<const Ray<T>> rays, std::span<const Rgb<T>> targets,
                                      const RenderOptions &options, std::mt19937_64 *rng, std::span<T> grads,
                                      SupervisionGrid *record, std::vector<Rgb<T>> *predicted,
                                      RenderStats *stats) {
    if (rays.empty()) throw ValidationError("render_rays_backward: empty batch");
    if (rays.size() != targets.size()) throw ValidationError("render_rays_backward: rays/targets size mismatch");
    const int L = field.num_levels();
    std::vector<bool> grid_touched(field.grids().size(), false), head_touched(L, false);
    const double inv_b = 1.0 / double(rays.size());
    double loss = 0.0;
    if (predicted) predicted->clear();

    Chunk<T> ch;
    std::vector<Rgb<T>> d_ray;
    const std::size_t step = std::max<std::size_t>(1, options.chunk_rays);
    for (std::size_t r0 = 0; r0 < rays.size(); r0 += step) {
        const std::size_t len = std::min(step, rays.size() - r0);
        forward_chunk(field, config, rays.subspan(r0, len), options, rng, ch, stats);
        d_ray.resize(len);
        for (std::size_t r = 0; r < len; ++r) {
            const Rgb<T> diff = ch.ray_color[r] - targets[r0 + r];
            loss += double(diff.squaredNorm());
            d_ray[r] = T(2.0 * inv_b) * diff;
        }
        if (record) {
            for (std::size_t s = 0; s < ch.samples.size(); ++s) {
                record->record(ch.samples[s].x.template cast<double>(), ch.plans[s].lowest_level(),
                               ch.plans[s].highest_level());
            }
        }
        if (predicted) predicted->insert(predicted->end(), ch.ray_color.begin(), ch.ray_color.end());
        backward_chunk(field, options, ch, std::span<const Rgb<T>>(d_ray), grads, grid_touched, head_touched);
    }

    TrainBatchResult result;
    result.loss = loss * inv_b;
    const auto &segs = field.params().segments();
    result.touched_segments.assign(segs.size(), false);
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string &name = segs[i].name;
        for (int h = 0; h < L; ++h) {
            if (head_touched[h] && name == PyramidField<T>::head_segment(h)) result.touched_segments[i] = true;
        }
        if (name == "grid") result.touched_segments[i] = grid_touched[0];
        for (std::size_t g = 0; g < grid_touched.size() && grid_touched.size() > 1; ++g) {
            if (grid_touched[g] && name == "grid" + std::to_string(g)) result.touched_segments[i] = true;
        }
    }
    if (!std::isfinite(result.loss)) {
        std::size_t worst = 0;
        double worst_err = -1.0;
        for (std::size_t r = 0; r < rays.size() && predicted && r < predicted->size(); ++r) {
            const double e = double(((*predicted)[r] - targets[r]).squaredNorm());
            if (!std::isfinite(e)) {
                worst = r;
                break;
            }
            if (e > worst_err) worst_err = e, worst = r;
        }
        throw NumericalError("non-finite loss in batch of " + std::to_string(rays.size()) +
                             " rays (first offending ray index " + std::to_string(worst) + ")");
    }
    return result;
}

template <class T>
void update_occupancy(const PyramidField<T> &field, const PyramidConfig &config, OccupancyGrid &grid,
                      const SupervisionGrid *supervision, double mean_delta, std::mt19937_64 *rng) {
    const std::size_t cells = grid.num_cells();
    const Vec3d size = grid.cell_size();
    const int L = field.num_levels();
    const int dim = field.feature_dim();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    constexpr std::size_t kCellChunk = 16384;

    std::vector<Vec3<T>> pts;
    std::vector<SamplePlan> plans;
    std::array<HeadBatch<T>, kMaxLevels> batches;
    std::array<std::vector<std::uint32_t>, kMaxLevels> cols;
    std::vector<T> feat(dim);
    for (std::size_t c0 = 0; c0 < cells; c0 += kCellChunk) {
        const std::size_t len = std::min(kCellChunk, cells - c0);
        pts.resize(len);
        plans.resize(len);
        for (auto &v : cols) v.clear();
        for (std::size_t i = 0; i < len; ++i) {
            Vec3d off(0.5, 0.5, 0.5);
            if (rng) off = Vec3d(uni(*rng), uni(*rng), uni(*rng));
            const Vec3d p = grid.cell_min(c0 + i) + off.cwiseProduct(size);
            pts[i] = p.cast<T>();
            int level = L - 1;
            if (supervision && !supervision->empty()) {
                const std::size_t sc = supervision->cell_of(p);
                level = supervision->touched(sc) ? supervision->max_level(sc) : supervision->global_max();
            }
            LevelAssignment a;
            a.level = level;
            a.w = 1.0;
            plans[i] = plan_sample(a, config.mode);
            const int evals = plans[i].head_evaluations();
            for (int j = 0; j < evals; ++j) {
                const int hl = plans[i].mode == EvalMode::feature_interp ? plans[i].head : plans[i].terms[j].level;
                cols[hl].push_back(std::uint32_t(i));
            }
        }
        // Column order within a level follows cell order, so a cell's j-th
        // evaluation at that level is found by a running cursor.
        std::array<std::size_t, kMaxLevels> cursor{};
        for (int level = 0; level < L; ++level) {
            const std::size_t n = cols[level].size();
            batches[level].resize(n, dim);
            if (n == 0) continue;
            std::size_t col = 0;
            for (std::size_t i : cols[level]) {
                const SamplePlan &plan = plans[i];
                int term = 0;
                if (plan.mode != EvalMode::feature_interp) {
                    while (plan.terms[term].level != level) ++term;
                }
                plan_features(field, plan, term, pts[i], std::span<T>(feat));
                for (int k = 0; k < dim; ++k) batches[level].features[std::size_t(k) * n + col] = feat[k];
                ++col;
            }
            field.density_forward(level, batches[level]);
        }
        std::array<HeadRaw<T>, kMaxLevels> raws;
        for (std::size_t i = 0; i < len; ++i) {
            const SamplePlan &plan = plans[i];
            const int evals = plan.head_evaluations();
            for (int j = 0; j < evals; ++j) {
                const int hl = plan.mode == EvalMode::feature_interp ? plan.head : plan.terms[j].level;
                raws[j] = HeadRaw<T>{};
                raws[j].sigma = batches[hl].density_out[cursor[hl]++];
            }
            const double sigma = double(combine_outputs(plan, raws.data()).sigma);
            grid.update(c0 + i, 1.0 - std::exp(-sigma * mean_delta));
        }
    }
}

#define PYRF_INSTANTIATE(T)                                                                                        \
    template LevelAssignment sample_assignment<T>(const FrustumSample<T> &, const PyramidConfig &,               \
                                                  const SupervisionGrid *, bool *);                             \
    template Rgb<T> render_ray_naive<T>(const PyramidField<T> &, const PyramidConfig &, const Ray<T> &,          \
                                        const RenderOptions &, std::mt19937_64 *, RenderStats *);               \
    template std::vector<Rgb<T>> render_rays<T>(const PyramidField<T> &, const PyramidConfig &,                  \
                                                std::span<const Ray<T>>, const RenderOptions &,                 \
                                                std::mt19937_64 *, RenderStats *);                              \
    template Image render_image<T>(const PyramidField<T> &, const PyramidConfig &, const Camera &,              \
                                   const RenderOptions &, RenderStats *);                                       \
    template TrainBatchResult render_rays_backward<T>(                                                           \
        const PyramidField<T> &, const PyramidConfig &, std::span<const Ray<T>>, std::span<const Rgb<T>>,        \
        const RenderOptions &, std::mt19937_64 *, std::span<T>, SupervisionGrid *, std::vector<Rgb<T>> *,        \
        RenderStats *);                                                                                          \
    template void update_occupancy<T>(const PyramidField<T> &, const PyramidConfig &, OccupancyGrid &,           \
                                      const SupervisionGrid *, double, std::mt19937_64 *);

PYRF_INSTANTIATE(float)
PYRF_INSTANTIATE(double)

} // namespace pyrf
