#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "gtrack/detection.hpp"
#include "gtrack/gtr_head.hpp"
#include "gtrack/sim.hpp"

namespace gtrack {

/// Ground-truth association labels for one clip under the 0.5-IoU rule.
struct ClipAssignment {
  // alpha[k][t-1]: detection index within frame t matched to trajectory k,
  // or -1 when the trajectory is absent/unmatched there.
  std::vector<std::vector<int>> alpha;
  // det_to_traj[t-1][i]: trajectory index owning detection i of frame t,
  // or -1 for background.
  std::vector<std::vector<int>> det_to_traj;
};

/// Per trajectory and frame: the best-IoU detection at IoU >= 0.5, with each
/// detection granted to at most one trajectory (higher IoU wins conflicts,
/// ties prefer the lower detection index, then the lower trajectory index;
/// losers get no box).
ClipAssignment assign_gt(const DetectionClip& dets, const GroundTruthClip& gt);

/// Training objective on a clip whose queries are all N detections: matched
/// queries pay -log P(their trajectory's detection | frame) on every frame,
/// background queries pay -log P(empty | frame) on every frame. Summed over
/// the clip (not averaged), so the zero-init value is sum of log(N_t + 1)
/// over every (query, frame) pair.
Tensor association_loss(const AssociationScores& scores,
                        const ClipAssignment& assign);

/// How training scenarios are sampled per iteration: the base config with a
/// fresh seed and an object count drawn from [min_objects, max_objects].
struct ScenarioDistribution {
  ScenarioConfig base;
  int min_objects = 2;
  int max_objects = 6;
};

struct TrainConfig {
  int clip_len = 8;
  int batch_size = 4;
  int iterations = 500;
  unsigned long long seed = 1;
  AdamWOptions optim;
  GtrConfig model;
  ScenarioDistribution scenarios;
};

void validate(const TrainConfig& cfg);
void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);
void to_json(nlohmann::json& j, const ScenarioConfig& cfg);
void from_json(const nlohmann::json& j, ScenarioConfig& cfg);
void to_json(nlohmann::json& j, const AdamWOptions& o);
void from_json(const nlohmann::json& j, AdamWOptions& o);

struct TrainResult {
  GtrHead head;
  std::vector<double> loss_history;  // one batch-mean loss per iteration
};

/// Flattens a clip's detections into (features, partition, per-frame row
/// offsets) in frame order; row of (t, i) = partition.column(t-1, i).
struct ClipTensors {
  Tensor features;
  FramePartition part;
};
ClipTensors clip_to_tensors(const DetectionClip& clip);

/// Batch loss for one clip (graph tensor), exposed for gradient checks.
Tensor clip_loss(const GtrHead& head, const DetectionClip& dets,
                 const GroundTruthClip& gt);

TrainResult train(const TrainConfig& cfg);

}  // namespace gtrack
