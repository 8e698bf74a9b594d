// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "support.hpp"

#include "pyrf/adam.hpp"
#include "pyrf/checkpoint.hpp"
#include "pyrf/dataset.hpp"
#include "pyrf/evaluation.hpp"
#include "pyrf/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace pyrf;
namespace fs = std::filesystem;

namespace {

const Dataset &tiny_dataset() {
    static const Dataset ds = [] {
        DatasetOptions o;
        o.scene = SceneKind::colored_spheres;
        o.train_cameras = 4;
        o.test_cameras = 2;
        o.resolution = 16;
        o.supersample = 4;
        o.seed = 3;
        return build_dataset(o);
    }();
    return ds;
}

ModelConfig tiny_model(int levels, EvalMode mode = EvalMode::default_interp) {
    ModelConfig m;
    m.field = test::small_field(levels);
    m.field.bounds = tiny_dataset().bounds;
    m.pyramid.levels = levels;
    m.pyramid.base_resolution = 4.0;
    m.pyramid.scale = 2.0;
    m.pyramid.mode = mode;
    return m;
}

TrainConfig tiny_train() {
    TrainConfig t;
    t.batch_rays = 64;
    t.iterations = 6;
    t.samples_per_ray = 16;
    t.occupancy_every = 4;
    t.occupancy_resolution = 8;
    t.supervision_resolution = 8;
    t.seed = 42;
    return t;
}

void run_steps(TrainState &s, int steps) {
    const RaySampler sampler(tiny_dataset(), Split::train, s.train.scale_weighting);
    std::vector<Ray<float>> rays;
    std::vector<Rgb<float>> targets;
    for (int i = 0; i < steps; ++i) {
        sampler.sample(s.train.batch_rays, s.rng, rays, targets);
        train_step(s, rays, targets, sampler.mean_delta(s.train.samples_per_ray));
    }
}

std::vector<float> values_of(const TrainState &s) {
    const auto v = s.field->params().values();
    return {v.begin(), v.end()};
}

fs::path scratch_dir(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("pyrf_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_SUITE("training") {

TEST_CASE("adam matches a scalar reference to 1e-12") {
    ad::ParameterStore<double> store;
    store.add_segment("grid", 5);
    store.add_segment("head0", 3);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto &v : store.values()) v = u(rng);
    AdamConfig cfg;
    cfg.epsilon = 1e-8;
    Adam<double> adam(store, cfg);
    std::vector<double> ref(store.values().begin(), store.values().end()), m(8, 0.0), v(8, 0.0);
    const std::vector<double> lr = {1e-2, 1e-3};
    for (int t = 1; t <= 20; ++t) {
        for (auto &g : store.grads()) g = u(rng);
        for (std::size_t i = 0; i < 8; ++i) {
            const double g = store.grads()[i];
            m[i] = 0.9 * m[i] + 0.1 * g;
            v[i] = 0.99 * v[i] + 0.01 * g * g;
            const double mh = m[i] / (1.0 - std::pow(0.9, t)), vh = v[i] / (1.0 - std::pow(0.99, t));
            ref[i] -= lr[i < 5 ? 0 : 1] * mh / (std::sqrt(vh) + 1e-8);
        }
        adam.step(store, lr, nullptr);
        for (std::size_t i = 0; i < 8; ++i) CHECK(store.values()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
    CHECK(adam.steps() == std::vector<std::uint64_t>{20, 20});
}

TEST_CASE("adam skips untouched segments and keeps their step count") {
    ad::ParameterStore<float> store;
    store.add_segment("grid", 2);
    store.add_segment("head0", 2);
    Adam<float> adam(store, AdamConfig{});
    for (auto &g : store.grads()) g = 1.0f;
    const std::vector<bool> touched = {true, false};
    adam.step(store, {0.1, 0.1}, &touched);
    CHECK(store.values()[0] == doctest::Approx(-0.1f));
    CHECK(store.values()[2] == 0.0f);
    CHECK(adam.steps() == std::vector<std::uint64_t>{1, 0});
    CHECK_THROWS_AS(adam.step(store, {0.1}, nullptr), ValidationError);
    AdamConfig bad;
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("adam update is bounded by the learning rate for zero residuals") {
    ad::ParameterStore<float> store;
    store.add_segment("head0", 4);
    Adam<float> adam(store, AdamConfig{});
    store.grads()[1] = 1e-30f;
    adam.step(store, {1e-3}, nullptr);
    for (float v : store.values()) CHECK(std::abs(v) <= 1e-3f * 1.0001f);
}

TEST_CASE("config validation") {
    TrainConfig t;
    t.batch_rays = 0;
    CHECK_THROWS_AS(t.validate(), ValidationError);
    t = TrainConfig{};
    t.lr_grid = 0.0;
    CHECK_THROWS_AS(t.validate(), ValidationError);
    ModelConfig m;
    m.field.levels = 3;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    CHECK(parse_scale_weighting("per_scale") == ScaleWeighting::per_scale);
    CHECK_THROWS_AS(parse_scale_weighting("x"), ValidationError);
}

TEST_CASE("ray sampler: per-pixel and per-scale weighting") {
    std::mt19937_64 rng(2);
    std::vector<Ray<float>> rays;
    std::vector<Rgb<float>> targets;
    const double full_focal = tiny_dataset().split(Split::train)[0]->camera.focal;
    auto full_fraction = [&](ScaleWeighting w) {
        const RaySampler s(tiny_dataset(), Split::train, w);
        s.sample(20000, rng, rays, targets);
        int full = 0;
        for (const auto &r : rays) full += std::abs(double(r.footprint_rate) * full_focal - 1.0) < 1e-3 ? 1 : 0;
        return full / 20000.0;
    };
    // 16x16, 8x8, 4x4, 2x2 images: 256 / 340 of all pixels are full scale.
    CHECK(full_fraction(ScaleWeighting::per_pixel) == doctest::Approx(256.0 / 340.0).epsilon(0.03));
    CHECK(full_fraction(ScaleWeighting::per_scale) == doctest::Approx(0.25).epsilon(0.08));
}

TEST_CASE("fixed-seed training is bit-reproducible") {
    TrainState a = TrainState::create(tiny_model(3), tiny_train());
    TrainState b = TrainState::create(tiny_model(3), tiny_train());
    run_steps(a, 6);
    run_steps(b, 6);
    CHECK(values_of(a) == values_of(b));
    CHECK(a.occupancy.estimates() == b.occupancy.estimates());
    CHECK(a.supervision.max_levels() == b.supervision.max_levels());
    CHECK(a.iteration == 6);
}

TEST_CASE("loss decreases on a tiny scene") {
    TrainConfig t = tiny_train();
    t.batch_rays = 256;
    TrainState s = TrainState::create(tiny_model(2), t);
    const RaySampler sampler(tiny_dataset(), Split::train, t.scale_weighting);
    std::vector<Ray<float>> rays;
    std::vector<Rgb<float>> targets;
    std::mt19937_64 fixed(9);
    sampler.sample(256, fixed, rays, targets);
    const double first = train_step(s, rays, targets, sampler.mean_delta(16)).loss;
    double last = first;
    for (int i = 0; i < 40; ++i) last = train_step(s, rays, targets, sampler.mean_delta(16)).loss;
    CHECK(last < 0.5 * first);
}

TEST_CASE("single-ray overfit drives the squared error below 1e-4") {
    TrainConfig t = tiny_train();
    t.batch_rays = 1;
    t.occupancy_every = 1000;
    TrainState s = TrainState::create(tiny_model(2), t);
    const RaySampler sampler(tiny_dataset(), Split::train, t.scale_weighting);
    // Centre pixel of a full-scale view, which looks at the origin.
    const Camera &cam = tiny_dataset().split(Split::train)[0]->camera;
    const std::vector<Ray<float>> rays{generate_ray<float>(cam, Pixel{cam.width / 2, cam.height / 2})};
    const std::vector<Rgb<float>> targets{Rgb<float>(0.8f, 0.2f, 0.4f)};
    for (int i = 0; i < 500; ++i) train_step(s, rays, targets, sampler.mean_delta(16));
    // train_step reports the loss before its update, so one more call scores the 500th.
    const double loss = train_step(s, rays, targets, sampler.mean_delta(16)).loss;
    CHECK(loss < 1e-4);
}

TEST_CASE("training on a multiscale dataset supervises more than one level") {
    TrainState s = TrainState::create(tiny_model(3), tiny_train());
    run_steps(s, 6);
    std::set<int> seen;
    for (std::int8_t v : s.supervision.min_levels()) if (v >= 0) seen.insert(v);
    for (std::int8_t v : s.supervision.max_levels()) if (v >= 0) seen.insert(v);
    CHECK(seen.size() >= 2);
}

TEST_CASE("updating only touched heads equals updating every head") {
    // A footprint scale that always maps to the finest level leaves head 0 untouched.
    ModelConfig m = tiny_model(2, EvalMode::gauss);
    m.pyramid.base_resolution = 1e-3;
    TrainConfig t = tiny_train();
    TrainState a = TrainState::create(m, t);
    t.update_all_segments = true;
    TrainState b = TrainState::create(m, t);
    run_steps(a, 5);
    run_steps(b, 5);
    CHECK(values_of(a) == values_of(b));
    CHECK(a.adam.steps() != b.adam.steps());
}

TEST_CASE("checkpoint round trip: renders, optimizer state and continued training") {
    const fs::path dir = scratch_dir("ckpt");
    TrainState a = TrainState::create(tiny_model(3, EvalMode::laplacian), tiny_train());
    run_steps(a, 5);
    save_checkpoint(dir / "c.pyrf", a);
    TrainState b = load_checkpoint(dir / "c.pyrf");
    CHECK(b.model == a.model);
    CHECK(b.train == a.train);
    CHECK(b.iteration == 5);
    CHECK(values_of(a) == values_of(b));
    CHECK(a.adam.first_moment() == b.adam.first_moment());
    CHECK(a.adam.steps() == b.adam.steps());
    CHECK(a.occupancy.bits() == b.occupancy.bits());
    CHECK(a.supervision.min_levels() == b.supervision.min_levels());

    const Camera cam = tiny_dataset().split(Split::test)[0]->camera;
    const Image ra = render_image(*a.field, a.model.pyramid, cam, a.render_options());
    const Image rb = render_image(*b.field, b.model.pyramid, cam, b.render_options());
    CHECK(ra.data == rb.data);

    run_steps(a, 3);
    run_steps(b, 3);
    CHECK(values_of(a) == values_of(b));
    CHECK(config_fingerprint(a.model, a.train) == config_fingerprint(b.model, b.train));
    fs::remove_all(dir);
}

TEST_CASE("config json round trip and fingerprint sensitivity") {
    ModelConfig m = tiny_model(4, EvalMode::feature_interp);
    m.field.sharing = GridSharing::separate;
    m.pyramid.selection = LevelSelection::volume_3d;
    TrainConfig t = tiny_train();
    t.scale_weighting = ScaleWeighting::per_scale;
    ModelConfig m2;
    TrainConfig t2;
    parse_config_json(config_json(m, t), m2, t2);
    CHECK(m2 == m);
    CHECK(t2 == t);
    TrainConfig t3 = t;
    t3.seed = 1;
    CHECK(config_fingerprint(m, t) != config_fingerprint(m, t3));
    CHECK_THROWS_AS(parse_config_json("{", m2, t2), ValidationError);
}

TEST_CASE("damaged checkpoints are rejected") {
    const fs::path dir = scratch_dir("ckpt_bad");
    TrainState a = TrainState::create(tiny_model(2), tiny_train());
    save_checkpoint(dir / "c.pyrf", a);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.pyrf"), IoError);
    const auto size = fs::file_size(dir / "c.pyrf");
    fs::resize_file(dir / "c.pyrf", size / 2);
    CHECK_THROWS_AS(load_checkpoint(dir / "c.pyrf"), ValidationError);
    std::ofstream(dir / "junk.pyrf") << "not a checkpoint at all";
    CHECK_THROWS_AS(load_checkpoint(dir / "junk.pyrf"), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("train writes metrics and a checkpoint") {
    const fs::path dir = scratch_dir("train");
    TrainConfig t = tiny_train();
    t.log_every = 2;
    t.eval_every = 3;
    TrainState s = TrainState::create(tiny_model(2), t);
    std::vector<TrainProgress> rows;
    TrainRunOptions ro;
    ro.out_dir = dir;
    ro.on_progress = [&](const TrainProgress &p) { rows.push_back(p); };
    train(s, tiny_dataset(), ro);
    CHECK(fs::exists(dir / "checkpoint.pyrf"));
    std::ifstream csv(dir / "metrics.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "iteration,wall_seconds,train_loss,test_psnr,test_ssim");
    REQUIRE(rows.size() == 4);  // iterations 2, 3, 4, 6
    CHECK(rows.back().iteration == 6);
    // An all-background test image can be matched exactly early on, giving +inf.
    CHECK(!std::isnan(rows.back().test_psnr));
    CHECK(std::isfinite(rows.back().test_ssim));
    CHECK(std::isnan(rows[0].test_psnr));
    fs::remove_all(dir);
}

TEST_CASE("evaluation reports do not depend on the rendering thread count") {
    TrainState s = TrainState::create(tiny_model(3), tiny_train());
    run_steps(s, 6);
    EvalOptions one, many;
    one.threads = 1;
    many.threads = 3;
    const MetricsReport a = evaluate_model(s, tiny_dataset(), {}, one);
    const MetricsReport b = evaluate_model(s, tiny_dataset(), {}, many);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].psnr == b.rows[i].psnr);
        CHECK(a.rows[i].ssim == b.rows[i].ssim);
    }
    CHECK(a.clamped_samples == b.clamped_samples);
}

} // TEST_SUITE
