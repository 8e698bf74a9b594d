// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/evaluation.hpp"

#include "pyrf/checkpoint.hpp"
#include "pyrf/metrics.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

namespace pyrf {

using json = nlohmann::json;

namespace {

std::string format_scale(double scale) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", scale);
    return buf;
}

std::string format_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

json metric_json(double v) {
    if (std::isfinite(v)) return v;
    return format_metric(v);
}

std::ofstream open_out(const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

json row_json(const ScaleRow &r) {
    return {{"scale", r.scale},
            {"images", r.images},
            {"psnr", metric_json(r.psnr)},
            {"ssim", metric_json(r.ssim)},
            {"avg_error_2", metric_json(r.avg_error_2)}};
}

} // namespace

void check_compatible(const TrainState &state, const Dataset &dataset) {
    const Aabb &mb = state.model.field.bounds;
    if (!(mb == dataset.bounds)) throw ValidationError("checkpoint incompatible with dataset: scene bounds differ");
}

MetricsReport score_images(const std::vector<Image> &rendered, const std::vector<const View *> &views) {
    if (rendered.size() != views.size()) throw ValidationError("score_images: rendered/view count mismatch");
    std::map<double, ScaleRow, std::greater<>> by_scale;
    for (std::size_t i = 0; i < views.size(); ++i) {
        ScaleRow &r = by_scale[views[i]->scale];
        r.scale = views[i]->scale;
        r.psnr += psnr(rendered[i], views[i]->image);
        r.ssim += ssim(rendered[i], views[i]->image);
        ++r.images;
    }
    MetricsReport report;
    for (auto &[scale, r] : by_scale) {
        r.psnr /= r.images;
        r.ssim /= r.images;
        r.avg_error_2 = avg_error(r.psnr, r.ssim);
        report.rows.push_back(r);
        report.aggregate.psnr += r.psnr;
        report.aggregate.ssim += r.ssim;
        report.aggregate.avg_error_2 += r.avg_error_2;
        report.aggregate.images += r.images;
    }
    if (!report.rows.empty()) {
        const double n = double(report.rows.size());
        report.aggregate.scale = 0.0;
        report.aggregate.psnr /= n;
        report.aggregate.ssim /= n;
        report.aggregate.avg_error_2 /= n;
    }
    return report;
}

MetricsReport evaluate_model(const TrainState &state, const Dataset &dataset, const std::filesystem::path &out_dir,
                             const EvalOptions &options) {
    check_compatible(state, dataset);
    RenderOptions ro = state.render_options(true);
    std::vector<const View *> views;
    for (const View *v : dataset.split(Split::test)) {
        if (options.max_views <= 0 || v->camera_id < options.max_views) views.push_back(v);
    }

    // Images are independent and the model is read-only, so workers pull view
    // indices from a shared counter; results land in fixed slots.
    std::vector<Image> rendered(views.size());
    std::vector<RenderStats> per_view(views.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < views.size(); i = next++) {
            try {
                rendered[i] = render_image(*state.field, state.model.pyramid, views[i]->camera, ro, &per_view[i]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t workers =
        std::clamp<std::size_t>(options.threads > 0 ? std::size_t(options.threads) : std::thread::hardware_concurrency(),
                                1, std::max<std::size_t>(views.size(), 1));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
        worker();
    }
    if (failure) std::rethrow_exception(failure);
    RenderStats stats;
    for (const RenderStats &s : per_view) stats.add(s);
    MetricsReport report = score_images(rendered, views);
    report.fingerprint = config_fingerprint(state.model, state.train);
    report.clamped_samples = stats.clamped;
    if (!out_dir.empty()) {
        write_report(report, out_dir);
        if (options.write_images) {
            for (std::size_t i = 0; i < views.size(); ++i) {
                const auto dir = out_dir / "renders" / format_scale(views[i]->scale);
                std::error_code ec;
                std::filesystem::create_directories(dir, ec);
                if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
                write_png(dir / (std::to_string(views[i]->camera_id) + ".png"), hstack(rendered[i], views[i]->image));
            }
        }
    }
    return report;
}

void write_report(const MetricsReport &report, const std::filesystem::path &out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    {
        auto csv = open_out(out_dir / "report.csv");
        csv << "scale,images,psnr,ssim,avg_error_2\n";
        for (const ScaleRow &r : report.rows) {
            csv << format_scale(r.scale) << ',' << r.images << ',' << format_metric(r.psnr) << ','
                << format_metric(r.ssim) << ',' << format_metric(r.avg_error_2) << '\n';
        }
        const ScaleRow &a = report.aggregate;
        csv << "mean," << a.images << ',' << format_metric(a.psnr) << ',' << format_metric(a.ssim) << ','
            << format_metric(a.avg_error_2) << '\n';
    }
    json j;
    j["rows"] = json::array();
    for (const ScaleRow &r : report.rows) j["rows"].push_back(row_json(r));
    j["aggregate"] = row_json(report.aggregate);
    j["aggregate"].erase("scale");
    j["train_seconds"] = report.train_seconds;
    j["config_fingerprint"] = report.fingerprint;
    j["clamped_samples"] = report.clamped_samples;
    j["lpips"] = nullptr;
    auto out = open_out(out_dir / "report.json");
    out << j.dump(2) << '\n';
}

std::string AblationVariant::name() const {
    return std::string(to_string(mode)) + "-" + to_string(sharing) + "-" + to_string(selection);
}

std::vector<AblationVariant> ablation_matrix() {
    std::vector<AblationVariant> out;
    for (EvalMode m : {EvalMode::default_interp, EvalMode::gauss, EvalMode::laplacian, EvalMode::feature_interp}) {
        for (GridSharing g : {GridSharing::shared, GridSharing::separate}) {
            for (LevelSelection s : {LevelSelection::projected_area, LevelSelection::volume_3d}) {
                out.push_back({m, g, s});
            }
        }
    }
    return out;
}

std::vector<AblationRow> ablate(const Dataset &dataset, const ModelConfig &base_model, const TrainConfig &train_cfg,
                                const std::vector<AblationVariant> &variants, const std::filesystem::path &out_dir) {
    std::vector<AblationRow> rows;
    for (const AblationVariant &v : variants) {
        AblationRow row;
        row.variant = v;
        try {
            ModelConfig model = base_model;
            model.pyramid.mode = v.mode;
            model.pyramid.selection = v.selection;
            model.field.sharing = v.sharing;
            TrainState state = TrainState::create(model, train_cfg);
            TrainRunOptions ro;
            if (!out_dir.empty()) ro.out_dir = out_dir / v.name();
            spdlog::info("ablation variant {}", v.name());
            const double seconds = train(state, dataset, ro);
            EvalOptions eo;
            eo.write_images = false;
            row.report = evaluate_model(state, dataset, ro.out_dir, eo);
            row.report.train_seconds = seconds;
            if (!ro.out_dir.empty()) write_report(row.report, ro.out_dir);
            row.ok = true;
        } catch (const std::exception &e) {
            row.error = e.what();
            spdlog::error("ablation variant {} failed: {}", v.name(), e.what());
        }
        rows.push_back(std::move(row));
        if (!out_dir.empty()) write_ablation(rows, out_dir);
    }
    return rows;
}

void write_ablation(const std::vector<AblationRow> &rows, const std::filesystem::path &out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    auto csv = open_out(out_dir / "ablation.csv");
    auto md = open_out(out_dir / "ablation.md");
    csv << "mode,grid,level_selection,psnr,ssim,avg_error_2,train_seconds,status\n";
    md << "| mode | grid | level selection | PSNR | SSIM | avg_error_2 | train s | status |\n"
       << "|---|---|---|---|---|---|---|---|\n";
    json j = json::array();
    for (const AblationRow &r : rows) {
        const ScaleRow &a = r.report.aggregate;
        const std::string status = r.ok ? "ok" : "failed";
        csv << to_string(r.variant.mode) << ',' << to_string(r.variant.sharing) << ',' << to_string(r.variant.selection)
            << ',' << format_metric(a.psnr) << ',' << format_metric(a.ssim) << ',' << format_metric(a.avg_error_2)
            << ',' << format_metric(r.report.train_seconds) << ',' << status << '\n';
        md << "| " << to_string(r.variant.mode) << " | " << to_string(r.variant.sharing) << " | "
           << to_string(r.variant.selection) << " | " << format_metric(a.psnr) << " | " << format_metric(a.ssim)
           << " | " << format_metric(a.avg_error_2) << " | " << format_metric(r.report.train_seconds) << " | "
           << (r.ok ? status : status + ": " + r.error) << " |\n";
        json row = {{"mode", to_string(r.variant.mode)},
                    {"grid", to_string(r.variant.sharing)},
                    {"level_selection", to_string(r.variant.selection)},
                    {"ok", r.ok}};
        if (r.ok) {
            row["psnr"] = metric_json(a.psnr);
            row["ssim"] = metric_json(a.ssim);
            row["avg_error_2"] = metric_json(a.avg_error_2);
            row["train_seconds"] = r.report.train_seconds;
            row["per_scale"] = json::array();
            for (const ScaleRow &s : r.report.rows) row["per_scale"].push_back(row_json(s));
        } else {
            row["error"] = r.error;
        }
        j.push_back(row);
    }
    auto out = open_out(out_dir / "ablation.json");
    out << j.dump(2) << '\n';
}

void render_flythrough(const TrainState &state, SceneKind scene_kind, int frames, int resolution, double distance,
                       const std::filesystem::path &out_dir) {
    if (frames < 1 || resolution < 1 || !(distance > 0.0)) {
        throw ValidationError("flythrough: frames, resolution and distance must be positive");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    const ProceduralScene scene = make_scene(scene_kind);
    const Vec3d axis = scene.view_axis.normalized();
    const Vec3d e1 = axis.cross(std::abs(axis.z()) < 0.9 ? Vec3d::UnitZ() : Vec3d::UnitX()).normalized();
    const Vec3d e2 = axis.cross(e1);
    const double tilt = 0.5 * scene.view_cone;
    const RenderOptions ro = state.render_options(true);
    for (int i = 0; i < frames; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / frames;
        const Vec3d dir = std::cos(tilt) * axis + std::sin(tilt) * (std::cos(phi) * e1 + std::sin(phi) * e2);
        Camera c;
        c.width = c.height = resolution;
        c.focal = 0.5 * resolution / std::tan(20.0 * std::numbers::pi / 180.0);
        c.pose = look_at(dir * distance, Vec3d::Zero(), e2);
        c.near = std::max(0.05, distance - 0.87);
        c.far = distance + 0.87;
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04d.png", i);
        write_png(out_dir / name, render_image(*state.field, state.model.pyramid, c, ro));
    }
}

} // namespace pyrf
