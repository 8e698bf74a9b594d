// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/dataset.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

namespace pyrf {

using json = nlohmann::json;

const char *to_string(Split s) { return s == Split::train ? "train" : "test"; }

namespace {

Split parse_split(const std::string &s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw ValidationError("manifest: unknown split '" + s + "'");
}

int scale_index(double scale) {
    for (std::size_t i = 0; i < kDatasetScales.size(); ++i) {
        if (scale == kDatasetScales[i]) return int(i);
    }
    return -1;
}

std::string view_path(Split split, int camera_id, double scale) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s/s%d/%03d.png", to_string(split), int(std::lround(1.0 / scale)), camera_id);
    return buf;
}

std::uint64_t view_seed(std::uint64_t seed, Split split, int camera_id, double scale) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(split == Split::train ? 1 : 2),
                      std::uint32_t(camera_id), std::uint32_t(scale_index(scale))};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (std::uint64_t(out[0]) << 32) | out[1];
}

} // namespace

std::vector<const View *> Dataset::split(Split s) const {
    std::vector<const View *> out;
    for (const View &v : views) {
        if (v.split == s) out.push_back(&v);
    }
    return out;
}

std::vector<double> Dataset::scales() const {
    std::set<double, std::greater<>> s;
    for (const View &v : views) s.insert(v.scale);
    return {s.begin(), s.end()};
}

void Dataset::validate() const {
    if (split(Split::train).empty()) throw ValidationError("dataset: no train views");
    if (split(Split::test).empty()) throw ValidationError("dataset: no test views");
    std::map<std::pair<int, int>, const View *> full;  // (split, camera) -> scale-1 view
    std::set<std::tuple<int, int, int>> seen;
    for (const View &v : views) {
        const std::string where = "dataset view " + v.path + ": ";
        if (scale_index(v.scale) < 0) throw ValidationError(where + "unsupported scale " + std::to_string(v.scale));
        try {
            v.camera.validate();
        } catch (const ValidationError &e) {
            throw ValidationError(where + e.what());
        }
        if (v.image.width != v.camera.width || v.image.height != v.camera.height) {
            throw ValidationError(where + "image is " + std::to_string(v.image.width) + "x" +
                                  std::to_string(v.image.height) + ", camera expects " +
                                  std::to_string(v.camera.width) + "x" + std::to_string(v.camera.height));
        }
        if (!seen.insert({int(v.split), v.camera_id, scale_index(v.scale)}).second) {
            throw ValidationError(where + "duplicate (split, camera, scale)");
        }
        if (v.scale == 1.0) full[{int(v.split), v.camera_id}] = &v;
    }
    for (const View &v : views) {
        const auto it = full.find({int(v.split), v.camera_id});
        if (it == full.end()) throw ValidationError("dataset view " + v.path + ": no full-scale view of its camera");
        const Camera expect = it->second->camera.scaled(v.scale);
        if (v.camera.width != expect.width || v.camera.height != expect.height || v.camera.focal != expect.focal ||
            v.camera.pose != expect.pose || v.camera.near != expect.near || v.camera.far != expect.far) {
            throw ValidationError("dataset view " + v.path + ": intrinsics/pose inconsistent with its full-scale view");
        }
    }
    for (const View *t : split(Split::test)) {
        for (const View *r : split(Split::train)) {
            if (t->camera.pose == r->camera.pose) {
                throw ValidationError("dataset: test view " + t->path + " reuses the pose of train view " + r->path);
            }
        }
    }
}

std::vector<Camera> sample_cameras(const ProceduralScene &scene, int count, const DatasetOptions &options,
                                   std::mt19937_64 &rng) {
    const Vec3d axis = scene.view_axis.normalized();
    Vec3d e1 = axis.cross(std::abs(axis.z()) < 0.9 ? Vec3d::UnitZ() : Vec3d::UnitX()).normalized();
    const Vec3d e2 = axis.cross(e1);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double cos_max = std::cos(options.view_cone > 0 ? options.view_cone : scene.view_cone);
    const double focal = 0.5 * options.resolution / std::tan(0.5 * options.fov_degrees * std::numbers::pi / 180.0);
    std::vector<Camera> cams;
    for (int i = 0; i < count; ++i) {
        const double cos_t = 1.0 - uni(rng) * (1.0 - cos_max);
        const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        const double phi = 2.0 * std::numbers::pi * uni(rng);
        const double dist = options.min_distance * std::pow(options.max_distance / options.min_distance, uni(rng));
        const Vec3d dir = cos_t * axis + sin_t * (std::cos(phi) * e1 + std::sin(phi) * e2);
        Camera c;
        c.width = c.height = options.resolution;
        c.focal = focal;
        c.pose = look_at(dir * dist, Vec3d::Zero(), e2);
        c.near = std::max(0.05, dist - 0.87);
        c.far = dist + 0.87;
        cams.push_back(c);
    }
    return cams;
}

Dataset build_dataset(const DatasetOptions &options) {
    if (options.train_cameras < 1 || options.test_cameras < 1) {
        throw ValidationError("dataset: camera counts must be >= 1");
    }
    if (options.resolution < 8) throw ValidationError("dataset: resolution must be >= 8");
    const ProceduralScene scene = make_scene(options.scene);
    std::mt19937_64 rng(options.seed);
    const auto train = sample_cameras(scene, options.train_cameras, options, rng);
    const auto test = sample_cameras(scene, options.test_cameras, options, rng);
    Dataset ds;
    ds.scene = options.scene;
    auto add = [&](Split split, const std::vector<Camera> &cams) {
        for (int id = 0; id < int(cams.size()); ++id) {
            for (double scale : kDatasetScales) {
                View v;
                v.split = split;
                v.camera_id = id;
                v.scale = scale;
                v.camera = cams[id].scaled(scale);
                v.path = view_path(split, id, scale);
                TraceOptions to;
                to.supersample = options.supersample;
                to.seed = view_seed(options.seed, split, id, scale);
                v.image = trace_reference(scene, v.camera, to);
                ds.views.push_back(std::move(v));
            }
        }
    };
    add(Split::train, train);
    add(Split::test, test);
    ds.validate();
    return ds;
}

void save_dataset(const Dataset &dataset, const std::filesystem::path &dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    json manifest;
    manifest["format"] = "pyrf-multiscale";
    manifest["version"] = 1;
    manifest["scene"] = to_string(dataset.scene);
    manifest["bounds"] = {{"lo", {dataset.bounds.lo[0], dataset.bounds.lo[1], dataset.bounds.lo[2]}},
                          {"hi", {dataset.bounds.hi[0], dataset.bounds.hi[1], dataset.bounds.hi[2]}}};
    json images = json::array();
    for (const View &v : dataset.views) {
        const fs::path p = dir / v.path;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
        write_png(p, v.image);
        json pose = json::array();
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 4; ++c) pose.push_back(v.camera.pose(r, c));
        }
        images.push_back({{"split", to_string(v.split)},
                          {"camera", v.camera_id},
                          {"path", v.path},
                          {"scale", v.scale},
                          {"width", v.camera.width},
                          {"height", v.camera.height},
                          {"focal", v.camera.focal},
                          {"pose", pose},
                          {"near", v.camera.near},
                          {"far", v.camera.far}});
    }
    manifest["images"] = images;
    const fs::path mp = dir / "manifest.json";
    std::ofstream out(mp);
    if (!out) throw IoError("cannot write " + mp.string());
    out << manifest.dump(1) << '\n';
    if (!out) throw IoError("failed writing " + mp.string());
}

Dataset load_dataset(const std::filesystem::path &dir) {
    const std::filesystem::path mp = dir / "manifest.json";
    std::ifstream in(mp);
    if (!in) throw IoError("cannot open " + mp.string());
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception &e) {
        throw ValidationError("malformed manifest " + mp.string() + ": " + e.what());
    }
    Dataset ds;
    try {
        if (m.value("format", "") != "pyrf-multiscale") throw ValidationError("not a pyrf dataset manifest");
        ds.scene = parse_scene_kind(m.at("scene").get<std::string>());
        if (m.contains("bounds")) {
            for (int a = 0; a < 3; ++a) {
                ds.bounds.lo[a] = m["bounds"]["lo"][a].get<double>();
                ds.bounds.hi[a] = m["bounds"]["hi"][a].get<double>();
            }
        }
        for (const json &j : m.at("images")) {
            View v;
            v.split = parse_split(j.at("split").get<std::string>());
            v.camera_id = j.at("camera").get<int>();
            v.path = j.at("path").get<std::string>();
            v.scale = j.at("scale").get<double>();
            v.camera.width = j.at("width").get<int>();
            v.camera.height = j.at("height").get<int>();
            v.camera.focal = j.at("focal").get<double>();
            const json &pose = j.at("pose");
            if (pose.size() != 12) throw ValidationError("pose of " + v.path + " must have 12 entries");
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 4; ++c) v.camera.pose(r, c) = pose[r * 4 + c].get<double>();
            }
            v.camera.near = j.at("near").get<double>();
            v.camera.far = j.at("far").get<double>();
            const std::filesystem::path ip = dir / v.path;
            if (!std::filesystem::exists(ip)) throw IoError("dataset image missing: " + ip.string());
            v.image = read_png(ip);
            ds.views.push_back(std::move(v));
        }
    } catch (const json::exception &e) {
        throw ValidationError("bad manifest " + mp.string() + ": " + e.what());
    }
    ds.validate();
    spdlog::debug("loaded {} views from {}", ds.views.size(), dir.string());
    return ds;
}

} // namespace pyrf
