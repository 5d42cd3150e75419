#pragma once

#include <vector>

#include "gtrack/detection.hpp"
#include "gtrack/geometry.hpp"

namespace gtrack {

struct OcclusionEpisode {
  int object = 0;  // index into the scenario's objects
  int start = 1;   // first occluded frame (1-based)
  int duration = 1;
};

struct ScenarioConfig {
  int num_objects = 4;
  int clip_len = 8;
  double arena_w = 100.0;
  double arena_h = 100.0;
  double min_speed = 0.5;
  double max_speed = 3.0;
  double direction_change_prob = 0.05;
  double box_min_size = 6.0;
  double box_max_size = 14.0;
  std::vector<OcclusionEpisode> occlusions;
  int max_occlusion = 16;
  int appearance_dim = 8;
  int feature_dim = 32;
  // The appearance/geometry -> feature projection is drawn from its own seed
  // so feature semantics stay fixed while clip seeds vary during training.
  unsigned long long feature_projection_seed = 99;
  double feature_scale = 2.0;
  double box_jitter = 0.0;    // box noise, fraction of box size
  double dropout = 0.0;       // per-detection miss probability
  double fp_rate = 0.0;       // mean false positives per frame
  double feature_noise = 0.0; // appearance noise before projection
  int num_classes = 1;
  unsigned long long seed = 1;
};

void validate(const ScenarioConfig& cfg);  // throws ConfigError

struct GroundTruthClip {
  int frames = 0;
  std::vector<Trajectory> trajectories;  // trajectory id = object index
  std::vector<std::vector<double>> appearance;
  std::vector<int> class_ids;
};

/// K trajectories with piecewise-linear bouncing motion inside the arena;
/// occlusion episodes delete their slices. Pure function of the config.
GroundTruthClip generate_scenario(const ScenarioConfig& cfg);

/// Noisy detections for every visible ground-truth slice: jittered boxes,
/// features projected from (noisy appearance + box geometry), dropout, and
/// rejection-sampled false positives (IoU < 0.5 against every ground-truth
/// box of the frame so identity labels stay unambiguous). Per-frame order is
/// shuffled. Pure function of (gt, config).
DetectionClip render_detections(const GroundTruthClip& gt,
                                const ScenarioConfig& cfg);

struct AugmentSpec {
  double scale_min = 0.8;
  double scale_max = 1.2;
  double translate = 10.0;  // max |offset| per axis
};

/// Clip synthesis from a single frame: sample two augmented copies of its
/// boxes (scale about the arena center plus translation) and linearly
/// interpolate between them across T frames, keeping identities.
GroundTruthClip static_scene_clip(const GroundTruthClip& gt_frame, int t_len,
                                  const AugmentSpec& aug,
                                  unsigned long long seed);

}  // namespace gtrack
