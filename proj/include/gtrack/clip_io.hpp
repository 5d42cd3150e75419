#pragma once

#include <string>

#include "gtrack/detection.hpp"
#include "gtrack/sim.hpp"
#include "nlohmann/json.hpp"

namespace gtrack {

void to_json(nlohmann::json& j, const Box& b);
void from_json(const nlohmann::json& j, Box& b);
void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);
void to_json(nlohmann::json& j, const Detection& d);
void from_json(const nlohmann::json& j, Detection& d);
void to_json(nlohmann::json& j, const DetectionClip& c);
void from_json(const nlohmann::json& j, DetectionClip& c);
void to_json(nlohmann::json& j, const GroundTruthClip& c);
void from_json(const nlohmann::json& j, GroundTruthClip& c);

// JSON files keep full double precision, so clips survive a save/load cycle
// bit-for-bit (unlike the fixed-precision CSV form).
void save_detections(const std::string& path, const DetectionClip& clip);
DetectionClip load_detections(const std::string& path);
void save_ground_truth(const std::string& path, const GroundTruthClip& clip);
GroundTruthClip load_ground_truth(const std::string& path);

}  // namespace gtrack
