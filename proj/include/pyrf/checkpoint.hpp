// Copyright Contributors to the pyrf Project
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoints; the byte layout is described in docs/checkpoint_format.md.
//
#pragma once

#include "pyrf/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace pyrf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// JSON text of the model and training configuration.
std::string config_json(const ModelConfig &model, const TrainConfig &train);
/// Parses config_json output; absent keys keep their defaults.
void parse_config_json(const std::string &text, ModelConfig &model, TrainConfig &train);
/// Short stable hex digest of config_json, for reports.
std::string config_fingerprint(const ModelConfig &model, const TrainConfig &train);

void save_checkpoint(const std::filesystem::path &path, const TrainState &state);
TrainState load_checkpoint(const std::filesystem::path &path);

} // namespace pyrf
