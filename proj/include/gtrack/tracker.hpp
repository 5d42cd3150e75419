#pragma once

#include <deque>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtrack/detection.hpp"
#include "gtrack/gtr_head.hpp"

namespace gtrack {

struct InferenceConfig {
  int window = 32;                  // history buffer length T
  double theta = 0.2;               // reject links scoring below this
  double det_score_threshold = 0.55;
  bool use_location = false;        // fuse IoU with the link score via max
  int min_track_length = 5;
};

void validate(const InferenceConfig& cfg);
void to_json(nlohmann::json& j, const InferenceConfig& cfg);
void from_json(const nlohmann::json& j, InferenceConfig& cfg);

/// Produces per-query association distributions over a window. Queries are
/// always the newest frame's detections.
class AssociationBackend {
 public:
  virtual ~AssociationBackend() = default;
  virtual AssociationDistribution associate(
      const std::vector<FrameSlice>& buffer) = 0;
};

/// Runs the learned head over the buffer's features.
class GtrBackend : public AssociationBackend {
 public:
  explicit GtrBackend(const GtrHead& head) : head_(&head) {}
  AssociationDistribution associate(
      const std::vector<FrameSlice>& buffer) override;

 private:
  const GtrHead* head_;
};

/// Ground-truth scores from Detection::source_id: +50 logits on same-source
/// pairs, -50 otherwise. False positives (source -1) match nothing.
class OracleBackend : public AssociationBackend {
 public:
  AssociationDistribution associate(
      const std::vector<FrameSlice>& buffer) override;
};

struct WindowAssociation {
  AssociationDistribution dist;
  // choice[q][t]: argmax detection index in buffer frame t, or -1 for none.
  std::vector<std::vector<int>> choice;
};

WindowAssociation window_associate(const std::vector<FrameSlice>& buffer,
                                   AssociationBackend& backend);

struct TrackEntry {
  int id = 0;
  std::map<int, Box> boxes;      // frame -> box
  std::map<int, int> det_index;  // frame -> detection index in that frame
  std::vector<double> confidences;
  std::vector<std::vector<double>> member_class_scores;
  int class_id = 0;
  int last_frame = 0;
};

struct TrackSet {
  std::deque<FrameSlice> buffer;
  std::vector<TrackEntry> tracks;
  int next_id = 1;
};

struct LinkEvent {
  int frame = 0;
  int query = 0;
  int track_id = 0;
  double score = 0.0;
  bool is_new = false;
};

/// Links the newest frame's queries to tracks holding a detection somewhere
/// in the buffer: link score = mean probability the query assigns to the
/// track's stored detections (optionally max-fused with IoU against the
/// track's latest box), solved as a min-cost matching on 1 - score. Matches
/// scoring below theta are rejected; rejected and unmatched queries start
/// new tracks.
void link_tracks(TrackSet& ts, const WindowAssociation& wa,
                 const InferenceConfig& cfg,
                 std::vector<LinkEvent>* trace = nullptr);

struct TrackingResult {
  std::vector<Trajectory> tracks;
  // Parallel to tracks: class-score vectors of each member detection.
  std::vector<std::vector<std::vector<double>>> member_class_scores;
  std::vector<LinkEvent> trace;
};

/// Online loop: per frame, threshold detections by confidence, push into the
/// buffer (strict FIFO eviction beyond `window`), associate, link. The id
/// emitted for a frame never changes once that frame is processed.
TrackingResult track_sequence(const DetectionClip& dets,
                              AssociationBackend& backend,
                              const InferenceConfig& cfg);

/// Drops tracks with fewer than min_track_length boxes.
TrackingResult& postprocess(TrackingResult& result,
                            const InferenceConfig& cfg);

/// Replaces each track's class vector with the mean of its members'
/// vectors; no-op with a warning when members carry no class scores.
TrackingResult& average_class_scores(TrackingResult& result);

}  // namespace gtrack
