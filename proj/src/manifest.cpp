#include "gtrack/manifest.hpp"

#include "gtrack/common.hpp"
#include "gtrack/mot_io.hpp"
#include "gtrack/sha256.hpp"

namespace gtrack {

void to_json(nlohmann::json& j, const RunManifest& m) {
  j = nlohmann::json{{"command", m.command},
                     {"version", m.version},
                     {"config", m.config},
                     {"inputs", m.inputs},
                     {"outputs", m.outputs}};
}

void from_json(const nlohmann::json& j, RunManifest& m) {
  m = RunManifest{};
  m.command = j.at("command").get<std::vector<std::string>>();
  m.version = j.value("version", std::string());
  m.config = j.value("config", nlohmann::json::object());
  m.inputs = j.value("inputs", std::map<std::string, std::string>{});
  m.outputs = j.value("outputs", std::map<std::string, std::string>{});
}

void save_manifest(const std::string& path, const RunManifest& m) {
  write_text_file(path, nlohmann::json(m).dump(1) + "\n");
}

RunManifest load_manifest(const std::string& path) {
  nlohmann::json j =
      nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON in " + path);
  return j.get<RunManifest>();
}

std::vector<std::string> verify_hashes(
    const std::map<std::string, std::string>& expected) {
  std::vector<std::string> problems;
  for (const auto& [path, want] : expected) {
    std::string got;
    try {
      got = sha256_file(path);
    } catch (const Error&) {
      problems.push_back(path + ": missing");
      continue;
    }
    if (got != want) {
      problems.push_back(path + ": hash mismatch (expected " + want +
                         ", got " + got + ")");
    }
  }
  return problems;
}

}  // namespace gtrack
