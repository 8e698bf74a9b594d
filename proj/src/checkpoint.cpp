// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
#include "pyrf/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace pyrf {

using json = nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

json bounds_json(const Aabb &b) {
    return {{"lo", {b.lo[0], b.lo[1], b.lo[2]}}, {"hi", {b.hi[0], b.hi[1], b.hi[2]}}};
}

json model_json(const ModelConfig &m) {
    const HashGridConfig &g = m.field.grid;
    return {{"grid",
             {{"num_levels", g.num_levels},
              {"base_resolution", g.base_resolution},
              {"per_level_scale", g.per_level_scale},
              {"features_per_level", g.features_per_level},
              {"table_size", g.table_size}}},
            {"levels", m.field.levels},
            {"sharing", to_string(m.field.sharing)},
            {"bounds", bounds_json(m.field.bounds)},
            {"pyramid",
             {{"levels", m.pyramid.levels},
              {"base_resolution", m.pyramid.base_resolution},
              {"scale", m.pyramid.scale},
              {"mode", to_string(m.pyramid.mode)},
              {"level_selection", to_string(m.pyramid.selection)},
              {"continuous_blend", m.pyramid.continuous_blend}}}};
}

json train_json(const TrainConfig &t) {
    return {{"batch_rays", t.batch_rays},
            {"iterations", t.iterations},
            {"samples_per_ray", t.samples_per_ray},
            {"lr_grid", t.lr_grid},
            {"lr_heads", t.lr_heads},
            {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"epsilon", t.adam.epsilon}}},
            {"seed", t.seed},
            {"occupancy_every", t.occupancy_every},
            {"occupancy_resolution", t.occupancy_resolution},
            {"supervision_resolution", t.supervision_resolution},
            {"log_every", t.log_every},
            {"eval_every", t.eval_every},
            {"eval_max_views", t.eval_max_views},
            {"scale_weighting", to_string(t.scale_weighting)},
            {"chunk_rays", t.chunk_rays},
            {"update_all_segments", t.update_all_segments}};
}

template <class V>
void get_if(const json &j, const char *key, V &out) {
    if (j.contains(key)) out = j.at(key).get<V>();
}

void read_bounds(const json &j, Aabb &b) {
    for (int a = 0; a < 3; ++a) {
        b.lo[a] = j.at("lo").at(a).get<double>();
        b.hi[a] = j.at("hi").at(a).get<double>();
    }
}

void read_model(const json &j, ModelConfig &m) {
    if (j.contains("grid")) {
        const json &g = j["grid"];
        get_if(g, "num_levels", m.field.grid.num_levels);
        get_if(g, "base_resolution", m.field.grid.base_resolution);
        get_if(g, "per_level_scale", m.field.grid.per_level_scale);
        get_if(g, "features_per_level", m.field.grid.features_per_level);
        get_if(g, "table_size", m.field.grid.table_size);
    }
    get_if(j, "levels", m.field.levels);
    if (j.contains("sharing")) m.field.sharing = parse_grid_sharing(j["sharing"].get<std::string>());
    if (j.contains("bounds")) read_bounds(j["bounds"], m.field.bounds);
    if (j.contains("pyramid")) {
        const json &p = j["pyramid"];
        get_if(p, "levels", m.pyramid.levels);
        get_if(p, "base_resolution", m.pyramid.base_resolution);
        get_if(p, "scale", m.pyramid.scale);
        if (p.contains("mode")) m.pyramid.mode = parse_eval_mode(p["mode"].get<std::string>());
        if (p.contains("level_selection")) {
            m.pyramid.selection = parse_level_selection(p["level_selection"].get<std::string>());
        }
        get_if(p, "continuous_blend", m.pyramid.continuous_blend);
    }
}

void read_train(const json &j, TrainConfig &t) {
    get_if(j, "batch_rays", t.batch_rays);
    get_if(j, "iterations", t.iterations);
    get_if(j, "samples_per_ray", t.samples_per_ray);
    get_if(j, "lr_grid", t.lr_grid);
    get_if(j, "lr_heads", t.lr_heads);
    if (j.contains("adam")) {
        get_if(j["adam"], "beta1", t.adam.beta1);
        get_if(j["adam"], "beta2", t.adam.beta2);
        get_if(j["adam"], "epsilon", t.adam.epsilon);
    }
    get_if(j, "seed", t.seed);
    get_if(j, "occupancy_every", t.occupancy_every);
    get_if(j, "occupancy_resolution", t.occupancy_resolution);
    get_if(j, "supervision_resolution", t.supervision_resolution);
    get_if(j, "log_every", t.log_every);
    get_if(j, "eval_every", t.eval_every);
    get_if(j, "eval_max_views", t.eval_max_views);
    if (j.contains("scale_weighting")) t.scale_weighting = parse_scale_weighting(j["scale_weighting"].get<std::string>());
    get_if(j, "chunk_rays", t.chunk_rays);
    get_if(j, "update_all_segments", t.update_all_segments);
}

class Writer {
public:
    template <class V>
    void put(V v) {
        const auto *p = reinterpret_cast<const char *>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(V));
    }
    template <class V>
    void put_array(const std::vector<V> &v) {
        const auto *p = reinterpret_cast<const char *>(v.data());
        buf_.insert(buf_.end(), p, p + v.size() * sizeof(V));
    }
    void put_bytes(const std::string &s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    std::string take() { return {buf_.begin(), buf_.end()}; }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    Reader(const std::string &data, std::string what) : data_(data), what_(std::move(what)) {}
    template <class V>
    V get() {
        V v;
        need(sizeof(V));
        std::memcpy(&v, data_.data() + pos_, sizeof(V));
        pos_ += sizeof(V);
        return v;
    }
    template <class V>
    std::vector<V> get_array(std::size_t n) {
        need(n * sizeof(V));
        std::vector<V> v(n);
        std::memcpy(v.data(), data_.data() + pos_, n * sizeof(V));
        pos_ += n * sizeof(V);
        return v;
    }
    void expect_end() const {
        if (pos_ != data_.size()) throw ValidationError("checkpoint section " + what_ + " has trailing bytes");
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw ValidationError("checkpoint section " + what_ + " is truncated");
    }
    const std::string &data_;
    std::string what_;
    std::size_t pos_ = 0;
};

} // namespace

std::string config_json(const ModelConfig &model, const TrainConfig &train) {
    return json{{"model", model_json(model)}, {"train", train_json(train)}}.dump();
}

void parse_config_json(const std::string &text, ModelConfig &model, TrainConfig &train) {
    try {
        const json j = json::parse(text);
        if (j.contains("model")) read_model(j["model"], model);
        if (j.contains("train")) read_train(j["train"], train);
    } catch (const json::exception &e) {
        throw ValidationError(std::string("bad configuration JSON: ") + e.what());
    }
}

std::string config_fingerprint(const ModelConfig &model, const TrainConfig &train) {
    // FNV-1a over the canonical JSON.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : config_json(model, train)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_checkpoint(const std::filesystem::path &path, const TrainState &state) {
    std::vector<std::pair<std::string, std::string>> sections;

    json conf = json::parse(config_json(state.model, state.train));
    conf["iteration"] = state.iteration;
    std::ostringstream rng;
    rng << state.rng;
    conf["rng"] = rng.str();
    sections.emplace_back("CONF", conf.dump());

    const auto values = state.field->params().values();
    Writer parm;
    parm.put<std::uint64_t>(values.size());
    parm.put_array(std::vector<float>(values.begin(), values.end()));
    sections.emplace_back("PARM", parm.take());

    Writer supv;
    supv.put<std::uint32_t>(std::uint32_t(state.supervision.resolution()));
    supv.put<std::uint32_t>(std::uint32_t(state.supervision.levels()));
    supv.put_array(state.supervision.min_levels());
    supv.put_array(state.supervision.max_levels());
    sections.emplace_back("SUPV", supv.take());

    Writer occu;
    occu.put<std::uint32_t>(std::uint32_t(state.occupancy.resolution()));
    occu.put<double>(state.occupancy.threshold());
    occu.put<double>(state.occupancy.decay());
    occu.put_array(state.occupancy.estimates());
    occu.put_array(state.occupancy.bits());
    sections.emplace_back("OCCU", occu.take());

    Writer adam;
    adam.put<std::uint64_t>(state.adam.first_moment().size());
    adam.put_array(state.adam.first_moment());
    adam.put_array(state.adam.second_moment());
    adam.put<std::uint32_t>(std::uint32_t(state.adam.steps().size()));
    adam.put_array(state.adam.steps());
    sections.emplace_back("ADAM", adam.take());

    Writer file;
    file.put_bytes("PYRF");
    file.put<std::uint32_t>(kCheckpointVersion);
    file.put<std::uint32_t>(std::uint32_t(sections.size()));
    for (const auto &[tag, payload] : sections) {
        file.put_bytes(tag);
        file.put<std::uint64_t>(payload.size());
        file.put_bytes(payload);
    }
    const std::string bytes = file.take();
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp);
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out) throw IoError("failed writing " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

TrainState load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader head(bytes, "header");
    const auto magic = head.get_array<char>(4);
    if (std::string(magic.begin(), magic.end()) != "PYRF") throw ValidationError(path.string() + " is not a pyrf checkpoint");
    const auto version = head.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw ValidationError("checkpoint " + path.string() + " has version " + std::to_string(version) +
                              ", expected " + std::to_string(kCheckpointVersion));
    }
    const auto count = head.get<std::uint32_t>();
    std::map<std::string, std::string> sections;
    std::size_t pos = 12;
    for (std::uint32_t i = 0; i < count; ++i) {
        if (pos + 12 > bytes.size()) throw ValidationError("checkpoint " + path.string() + " is truncated");
        const std::string tag = bytes.substr(pos, 4);
        std::uint64_t len;
        std::memcpy(&len, bytes.data() + pos + 4, 8);
        pos += 12;
        if (pos + len > bytes.size()) throw ValidationError("checkpoint section " + tag + " is truncated");
        sections[tag] = bytes.substr(pos, len);
        pos += len;
    }
    for (const char *tag : {"CONF", "PARM", "SUPV", "OCCU", "ADAM"}) {
        if (!sections.count(tag)) throw ValidationError("checkpoint " + path.string() + " lacks section " + tag);
    }

    ModelConfig model;
    TrainConfig train;
    parse_config_json(sections["CONF"], model, train);
    TrainState state = TrainState::create(model, train);
    const json conf = json::parse(sections["CONF"]);
    state.iteration = conf.at("iteration").get<std::uint64_t>();
    std::istringstream rng(conf.at("rng").get<std::string>());
    rng >> state.rng;
    if (!rng) throw ValidationError("checkpoint rng state is malformed");

    Reader parm(sections["PARM"], "PARM");
    const auto n = parm.get<std::uint64_t>();
    auto values = state.field->params().values();
    if (n != values.size()) {
        throw ValidationError("checkpoint has " + std::to_string(n) + " parameters, model expects " +
                              std::to_string(values.size()));
    }
    const auto stored = parm.get_array<float>(n);
    std::copy(stored.begin(), stored.end(), values.begin());
    parm.expect_end();

    Reader supv(sections["SUPV"], "SUPV");
    const auto sres = supv.get<std::uint32_t>();
    const auto slev = supv.get<std::uint32_t>();
    state.supervision = SupervisionGrid(model.field.bounds, int(slev), int(sres));
    const std::size_t scells = std::size_t(sres) * sres * sres;
    auto mins = supv.get_array<std::int8_t>(scells);
    auto maxs = supv.get_array<std::int8_t>(scells);
    state.supervision.assign(std::move(mins), std::move(maxs));
    supv.expect_end();

    Reader occu(sections["OCCU"], "OCCU");
    const auto ores = occu.get<std::uint32_t>();
    const double threshold = occu.get<double>();
    const double decay = occu.get<double>();
    state.occupancy = OccupancyGrid(model.field.bounds, int(ores), threshold, decay);
    const std::size_t ocells = std::size_t(ores) * ores * ores;
    auto est = occu.get_array<float>(ocells);
    auto bits = occu.get_array<std::uint8_t>(ocells);
    state.occupancy.assign(std::move(est), std::move(bits));
    occu.expect_end();

    Reader adam(sections["ADAM"], "ADAM");
    const auto an = adam.get<std::uint64_t>();
    if (an != values.size()) throw ValidationError("checkpoint optimizer state size mismatch");
    state.adam.first_moment() = adam.get_array<float>(an);
    state.adam.second_moment() = adam.get_array<float>(an);
    const auto nseg = adam.get<std::uint32_t>();
    if (nseg != state.adam.steps().size()) throw ValidationError("checkpoint optimizer segment count mismatch");
    state.adam.steps() = adam.get_array<std::uint64_t>(nseg);
    adam.expect_end();
    return state;
}

} // namespace pyrf
