#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "gtrack/detection.hpp"
#include "gtrack/geometry.hpp"

namespace gtrack {

/// Greedy frame-to-frame trackers: match each frame's detections against
/// live tracks (and recently lost ones, within the rebirth window) by IoU
/// against the last box, cosine similarity against a feature running mean,
/// or the better of the two.
struct BaselineConfig {
  enum class Mode { kIou, kReid, kCombined };
  Mode mode = Mode::kIou;
  double iou_gate = 0.3;  // minimum IoU for a feasible match
  double cos_gate = 0.4;  // minimum cosine similarity for a feasible match
  int rebirth = 30;       // frames a lost track stays matchable
  double det_score_threshold = 0.0;
  double feature_momentum = 0.9;
  int min_track_length = 1;
};

void validate(const BaselineConfig& cfg);
void to_json(nlohmann::json& j, const BaselineConfig& cfg);
void from_json(const nlohmann::json& j, BaselineConfig& cfg);

std::vector<Trajectory> greedy_track(const DetectionClip& dets,
                                     const BaselineConfig& cfg);

}  // namespace gtrack
