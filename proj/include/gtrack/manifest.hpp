#pragma once

#include <map>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

namespace gtrack {

// Record of one CLI run: the exact argv, the resolved configuration, and
// content hashes of everything read and written. No timestamps, so a replay
// that produces identical bytes produces an identical manifest.
struct RunManifest {
  std::vector<std::string> command;
  std::string version;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path -> sha256
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

void save_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

// Re-hashes each recorded file; returns one message per mismatch or missing
// file (empty means everything matches).
std::vector<std::string> verify_hashes(
    const std::map<std::string, std::string>& expected);

}  // namespace gtrack
