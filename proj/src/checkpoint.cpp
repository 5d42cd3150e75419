#include "gtrack/checkpoint.hpp"

#include <fstream>

namespace gtrack {

nlohmann::json params_to_json(const ParamStore& params) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, t] : params.items()) {
    j[name] = {{"rows", t.rows()}, {"cols", t.cols()}, {"data", t.value()}};
  }
  return j;
}

void params_from_json(const nlohmann::json& j, ParamStore& params) {
  if (!j.is_object()) {
    throw ParseError("checkpoint: params block is not an object");
  }
  for (auto& [name, t] : params.items()) {
    if (!j.contains(name)) {
      throw ParseError("checkpoint: missing parameter '" + name + "'");
    }
    const nlohmann::json& e = j.at(name);
    const int rows = e.at("rows").get<int>();
    const int cols = e.at("cols").get<int>();
    if (rows != t.rows() || cols != t.cols()) {
      throw ParseError("checkpoint: parameter '" + name + "' has shape " +
                       std::to_string(rows) + "x" + std::to_string(cols) +
                       ", expected " + std::to_string(t.rows()) + "x" +
                       std::to_string(t.cols()));
    }
    std::vector<double> data = e.at("data").get<std::vector<double>>();
    if (data.size() != t.size()) {
      throw ParseError("checkpoint: parameter '" + name +
                       "' data length mismatch");
    }
    t.value_mut() = std::move(data);
  }
  for (const auto& [name, e] : j.items()) {
    if (!params.has(name)) {
      throw ParseError("checkpoint: unexpected parameter '" + name + "'");
    }
  }
}

void save_checkpoint(const std::string& path, const nlohmann::json& config,
                     const ParamStore& params) {
  nlohmann::json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["config"] = config;
  j["params"] = params_to_json(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot open '" + path + "' for writing");
  out << j.dump(1) << "\n";
  if (!out) throw Error("checkpoint: write to '" + path + "' failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint: '" + path + "' is not valid JSON: " +
                     e.what());
  }
  if (!j.contains("format_version") ||
      j.at("format_version").get<int>() != kCheckpointFormatVersion) {
    throw ParseError("checkpoint: '" + path +
                     "' has unsupported format version");
  }
  LoadedCheckpoint loaded;
  loaded.config = j.value("config", nlohmann::json::object());
  loaded.params = j.at("params");
  return loaded;
}

}  // namespace gtrack
