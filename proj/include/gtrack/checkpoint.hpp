#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "gtrack/optim.hpp"

namespace gtrack {

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json params_to_json(const ParamStore& params);

/// Copies values from `j` into an already-built store. Every stored
/// parameter must be present in `j` with a matching shape, and vice versa.
void params_from_json(const nlohmann::json& j, ParamStore& params);

/// File container: {"format_version", "config", "params"}. The config block
/// is caller-defined (model hyperparameters) and returned verbatim on load.
void save_checkpoint(const std::string& path, const nlohmann::json& config,
                     const ParamStore& params);

struct LoadedCheckpoint {
  nlohmann::json config;
  nlohmann::json params;  // feed to params_from_json once the store exists
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace gtrack
