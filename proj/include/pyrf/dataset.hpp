// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// Multiscale posed-image datasets. Each camera is rendered at scales
// 1, 1/2, 1/4 and 1/8 by re-tracing at scaled intrinsics. On disk a dataset
// is a directory holding manifest.json and 8-bit RGB PNGs.
//
#pragma once

#include "pyrf/camera.hpp"
#include "pyrf/image.hpp"
#include "pyrf/scene.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace pyrf {

inline constexpr std::array<double, 4> kDatasetScales = {1.0, 0.5, 0.25, 0.125};

enum class Split { train, test };
const char *to_string(Split s);

struct View {
    Split split = Split::train;
    int camera_id = 0;  // index within its split
    double scale = 1.0;
    Camera camera;
    std::string path;  // relative to the dataset root
    Image image;
};

struct Dataset {
    SceneKind scene = SceneKind::slanted_checkerboard;
    Aabb bounds;
    std::vector<View> views;

    std::vector<const View *> split(Split s) const;
    /// Distinct scales present, descending.
    std::vector<double> scales() const;
    /// Throws ValidationError describing the first broken invariant.
    void validate() const;
};

struct DatasetOptions {
    SceneKind scene = SceneKind::slanted_checkerboard;
    int train_cameras = 40;
    int test_cameras = 10;
    int resolution = 128;  // full-scale width and height
    int supersample = 64;
    double fov_degrees = 40.0;
    double min_distance = 0.9;
    double max_distance = 7.2;  // 8:1 range
    double view_cone = 0.0;     // radians around the scene view axis; 0 keeps the scene default
    std::uint64_t seed = 0;
};

/// Cameras on an orbit around the scene's view axis, looking at the origin,
/// with distance log-uniform in [min_distance, max_distance].
std::vector<Camera> sample_cameras(const ProceduralScene &scene, int count, const DatasetOptions &options,
                                   std::mt19937_64 &rng);

/// Renders all views in memory (paths filled, nothing written).
Dataset build_dataset(const DatasetOptions &options);

void save_dataset(const Dataset &dataset, const std::filesystem::path &dir);
/// Loads manifest and images; validates. Missing images raise IoError naming the path.
Dataset load_dataset(const std::filesystem::path &dir);

} // namespace pyrf
