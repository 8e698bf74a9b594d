// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// Reference training run on the colored_spheres scene. Several minutes on one
// core, so it is registered as its own ctest entry.
//
#include "pyrf/dataset.hpp"
#include "pyrf/evaluation.hpp"
#include "pyrf/trainer.hpp"

#include <doctest.h>
#include <spdlog/spdlog.h>

#include <numeric>

using namespace pyrf;

TEST_SUITE("reference_run") {

TEST_CASE("colored_spheres: 2000 iterations exceed 25 dB at full scale; early loss trends down") {
    spdlog::set_level(spdlog::level::warn);
    DatasetOptions o;
    o.scene = SceneKind::colored_spheres;
    const Dataset ds = build_dataset(o);
    ModelConfig m;
    m.field.bounds = ds.bounds;
    TrainConfig t;
    t.iterations = 2000;
    t.batch_rays = 1024;  // desk batch, see the acceptance runner
    t.seed = 7;
    t.log_every = 1;
    t.eval_every = 0;
    TrainState s = TrainState::create(m, t);
    std::vector<double> losses;
    TrainRunOptions ro;
    ro.on_progress = [&](const TrainProgress &p) { losses.push_back(p.train_loss); };
    train(s, ds, ro);
    REQUIRE(losses.size() == 2000);

    // 50-step moving average over the first 200 iterations never rises.
    constexpr int kWindow = 50;
    std::vector<double> avg;
    for (int i = 0; i + kWindow <= 200; ++i) {
        avg.push_back(std::accumulate(losses.begin() + i, losses.begin() + i + kWindow, 0.0) / kWindow);
    }
    int rises = 0;
    for (std::size_t i = 1; i < avg.size(); ++i) rises += avg[i] > avg[i - 1] ? 1 : 0;
    CHECK(rises == 0);

    EvalOptions eo;
    eo.write_images = false;
    const MetricsReport r = evaluate_model(s, ds, {}, eo);
    REQUIRE(!r.rows.empty());
    CHECK(r.rows.front().scale == 1.0);
    CHECK(r.rows.front().psnr > 25.0);
    MESSAGE("full-scale psnr " << r.rows.front().psnr << ", moving-average rises " << rises);
}

} // TEST_SUITE
