#pragma once

#include <vector>

#include "gtrack/geometry.hpp"

namespace gtrack {

/// One detected object in one frame. `source_id` is the simulator's ground
/// truth identity (-1 for false positives); it exists for evaluation and
/// oracle experiments and is never visible to the learned model.
struct Detection {
  int frame = 1;  // 1-based
  Box box{0.0, 0.0, 1.0, 1.0};
  double confidence = 1.0;
  std::vector<double> feature;
  std::vector<double> class_scores;
  int class_id = 0;
  int source_id = -1;
};

/// Detections for a clip, grouped per frame (index t-1 holds frame t).
struct DetectionClip {
  int frames = 0;
  std::vector<std::vector<Detection>> per_frame;

  // Dimension of the first feature found; 0 when there are none.
  int feature_dim() const {
    for (const auto& f : per_frame) {
      for (const auto& d : f) {
        if (!d.feature.empty()) return static_cast<int>(d.feature.size());
      }
    }
    return 0;
  }

  std::size_t total_detections() const {
    std::size_t n = 0;
    for (const auto& f : per_frame) n += f.size();
    return n;
  }
};

/// One frame of a tracker's history buffer.
struct FrameSlice {
  int frame = 1;
  std::vector<Detection> dets;
};

}  // namespace gtrack
