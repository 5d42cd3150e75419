#include "gtrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "gtrack/hungarian.hpp"

namespace gtrack {

void validate(const InferenceConfig& cfg) {
  if (cfg.window < 1) throw ConfigError("inference: window must be >= 1");
  // theta above 1 is allowed: it degenerates to a new track per detection
  if (cfg.theta < 0.0 || cfg.theta > 2.0) {
    throw ConfigError("inference: theta out of range");
  }
  if (cfg.min_track_length < 1) {
    throw ConfigError("inference: min_track_length must be >= 1");
  }
}

void to_json(nlohmann::json& j, const InferenceConfig& cfg) {
  j = nlohmann::json{{"window", cfg.window},
                     {"theta", cfg.theta},
                     {"det_score_threshold", cfg.det_score_threshold},
                     {"use_location", cfg.use_location},
                     {"min_track_length", cfg.min_track_length}};
}

void from_json(const nlohmann::json& j, InferenceConfig& cfg) {
  InferenceConfig def;
  cfg.window = j.value("window", def.window);
  cfg.theta = j.value("theta", def.theta);
  cfg.det_score_threshold =
      j.value("det_score_threshold", def.det_score_threshold);
  cfg.use_location = j.value("use_location", def.use_location);
  cfg.min_track_length = j.value("min_track_length", def.min_track_length);
}

AssociationDistribution GtrBackend::associate(
    const std::vector<FrameSlice>& buffer) {
  if (buffer.empty()) throw ContractError("associate: empty buffer");
  const int d = head_->config().dim;
  std::vector<int> counts;
  counts.reserve(buffer.size());
  std::vector<double> data;
  for (const FrameSlice& slice : buffer) {
    counts.push_back(static_cast<int>(slice.dets.size()));
    for (const Detection& det : slice.dets) {
      if (static_cast<int>(det.feature.size()) != d) {
        throw ShapeError("associate: detection feature dim " +
                         std::to_string(det.feature.size()) +
                         " does not match model dim " + std::to_string(d));
      }
      data.insert(data.end(), det.feature.begin(), det.feature.end());
    }
  }
  FramePartition part = FramePartition::from_counts(std::move(counts));
  Tensor features = Tensor::constant(part.total(), d, std::move(data));

  const int last = part.frames() - 1;
  std::vector<int> query_rows;
  query_rows.reserve(part.count(last));
  for (int i = 0; i < part.count(last); ++i) {
    query_rows.push_back(part.column(last, i));
  }
  return association_distribution(head_->forward(features, part, query_rows));
}

AssociationDistribution OracleBackend::associate(
    const std::vector<FrameSlice>& buffer) {
  if (buffer.empty()) throw ContractError("associate: empty buffer");
  std::vector<int> counts;
  counts.reserve(buffer.size());
  for (const FrameSlice& slice : buffer) {
    counts.push_back(static_cast<int>(slice.dets.size()));
  }
  FramePartition part = FramePartition::from_counts(std::move(counts));
  const std::vector<Detection>& queries = buffer.back().dets;
  const int m = static_cast<int>(queries.size());
  const int n = part.total();

  std::vector<double> g(static_cast<std::size_t>(m) * n, -50.0);
  for (int q = 0; q < m; ++q) {
    const int src = queries[q].source_id;
    if (src < 0) continue;
    int col = 0;
    for (const FrameSlice& slice : buffer) {
      for (const Detection& det : slice.dets) {
        if (det.source_id == src) {
          g[static_cast<std::size_t>(q) * n + col] = 50.0;
        }
        ++col;
      }
    }
  }
  return association_distribution_raw(g, m, part);
}

WindowAssociation window_associate(const std::vector<FrameSlice>& buffer,
                                   AssociationBackend& backend) {
  if (buffer.empty()) throw ContractError("window_associate: empty buffer");
  WindowAssociation wa;
  wa.dist = backend.associate(buffer);
  const int frames = wa.dist.part.frames();
  if (frames != static_cast<int>(buffer.size())) {
    throw ContractError("window_associate: backend covered " +
                        std::to_string(frames) + " frames for a buffer of " +
                        std::to_string(buffer.size()));
  }
  wa.choice.resize(wa.dist.queries());
  for (int q = 0; q < wa.dist.queries(); ++q) {
    wa.choice[q].assign(frames, -1);
    for (int t = 0; t < frames; ++t) {
      const std::vector<double>& row = wa.dist.p[q][t];
      int best = 0;
      for (int i = 1; i < static_cast<int>(row.size()); ++i) {
        if (row[i] > row[best]) best = i;
      }
      wa.choice[q][t] = best - 1;  // slot 0 is the empty token
    }
  }
  return wa;
}

void link_tracks(TrackSet& ts, const WindowAssociation& wa,
                 const InferenceConfig& cfg, std::vector<LinkEvent>* trace) {
  if (ts.buffer.empty()) throw ContractError("link_tracks: empty buffer");
  const FrameSlice& current = ts.buffer.back();
  const int cur_frame = current.frame;
  const int m = static_cast<int>(current.dets.size());
  if (wa.dist.queries() != m) {
    throw ContractError("link_tracks: " + std::to_string(wa.dist.queries()) +
                        " queries for " + std::to_string(m) + " detections");
  }

  // Candidates: tracks holding a stored detection in any buffer frame before
  // the current one. Older tracks have slid out of the window and can no
  // longer be scored, so they are simply not matchable.
  const int first_frame = ts.buffer.front().frame;
  std::vector<int> candidates;
  for (int c = 0; c < static_cast<int>(ts.tracks.size()); ++c) {
    const TrackEntry& track = ts.tracks[c];
    auto it = track.det_index.lower_bound(first_frame);
    if (it != track.det_index.end() && it->first < cur_frame) {
      candidates.push_back(c);
    }
  }

  const int n_cand = static_cast<int>(candidates.size());
  std::vector<double> score(static_cast<std::size_t>(m) *
                                std::max(n_cand, 1),
                            0.0);
  for (int c = 0; c < n_cand; ++c) {
    const TrackEntry& track = ts.tracks[candidates[c]];
    for (int q = 0; q < m; ++q) {
      double total = 0.0;
      int shared = 0;
      for (int t = 0; t < static_cast<int>(ts.buffer.size()) - 1; ++t) {
        const int frame = ts.buffer[t].frame;
        auto it = track.det_index.find(frame);
        if (it == track.det_index.end()) continue;
        total += wa.dist.p[q][t][it->second + 1];
        ++shared;
      }
      double s = shared > 0 ? total / shared : 0.0;
      if (cfg.use_location && !track.boxes.empty()) {
        s = std::max(s, iou(current.dets[q].box, track.boxes.rbegin()->second));
      }
      score[static_cast<std::size_t>(q) * n_cand + c] = s;
    }
  }

  std::vector<int> match(m, -1);  // query -> candidate slot
  if (n_cand > 0 && m > 0) {
    std::vector<double> cost(score.size());
    for (std::size_t i = 0; i < score.size(); ++i) cost[i] = 1.0 - score[i];
    AssignmentResult ar = solve_assignment(cost, m, n_cand);
    match = ar.row_to_col;
  }

  auto append = [&](TrackEntry& track, int q) {
    const Detection& det = current.dets[q];
    track.boxes.emplace(cur_frame, det.box);
    track.det_index[cur_frame] = q;
    track.confidences.push_back(det.confidence);
    track.member_class_scores.push_back(det.class_scores);
    track.last_frame = cur_frame;
  };

  for (int q = 0; q < m; ++q) {
    double s = 0.0;
    if (match[q] >= 0) {
      s = score[static_cast<std::size_t>(q) * n_cand + match[q]];
    }
    if (match[q] >= 0 && s >= cfg.theta) {
      TrackEntry& track = ts.tracks[candidates[match[q]]];
      append(track, q);
      if (trace) trace->push_back({cur_frame, q, track.id, s, false});
    } else {
      TrackEntry track;
      track.id = ts.next_id++;
      track.class_id = current.dets[q].class_id;
      append(track, q);
      if (trace) trace->push_back({cur_frame, q, track.id, s, true});
      ts.tracks.push_back(std::move(track));
    }
  }
}

TrackingResult track_sequence(const DetectionClip& dets,
                              AssociationBackend& backend,
                              const InferenceConfig& cfg) {
  validate(cfg);
  TrackSet ts;
  TrackingResult result;
  for (int t = 1; t <= dets.frames; ++t) {
    FrameSlice slice;
    slice.frame = t;
    for (const Detection& d : dets.per_frame[t - 1]) {
      if (d.confidence >= cfg.det_score_threshold) slice.dets.push_back(d);
    }
    ts.buffer.push_back(std::move(slice));
    if (static_cast<int>(ts.buffer.size()) > cfg.window) {
      ts.buffer.pop_front();
    }
    std::vector<FrameSlice> window(ts.buffer.begin(), ts.buffer.end());
    WindowAssociation wa = window_associate(window, backend);
    link_tracks(ts, wa, cfg, &result.trace);
  }

  for (const TrackEntry& track : ts.tracks) {
    Trajectory traj;
    traj.id = track.id;
    traj.slices = track.boxes;
    traj.class_id = track.class_id;
    double conf = 0.0;
    for (double c : track.confidences) conf += c;
    traj.score = track.confidences.empty()
                     ? 0.0
                     : conf / static_cast<double>(track.confidences.size());
    result.tracks.push_back(std::move(traj));
    result.member_class_scores.push_back(track.member_class_scores);
  }
  return result;
}

TrackingResult& postprocess(TrackingResult& result,
                            const InferenceConfig& cfg) {
  std::size_t keep = 0;
  for (std::size_t i = 0; i < result.tracks.size(); ++i) {
    if (static_cast<int>(result.tracks[i].length()) >= cfg.min_track_length) {
      if (keep != i) {
        result.tracks[keep] = std::move(result.tracks[i]);
        result.member_class_scores[keep] =
            std::move(result.member_class_scores[i]);
      }
      ++keep;
    }
  }
  result.tracks.resize(keep);
  result.member_class_scores.resize(keep);
  return result;
}

TrackingResult& average_class_scores(TrackingResult& result) {
  bool warned = false;
  for (std::size_t i = 0; i < result.tracks.size(); ++i) {
    std::size_t dim = 0;
    int members = 0;
    for (const std::vector<double>& s : result.member_class_scores[i]) {
      if (s.empty()) continue;
      if (dim == 0) dim = s.size();
      if (s.size() != dim) {
        throw ContractError("average_class_scores: inconsistent class dims");
      }
      ++members;
    }
    if (members == 0) {
      if (!warned) {
        std::fprintf(stderr,
                     "average_class_scores: no per-detection class scores; "
                     "leaving tracks unchanged\n");
        warned = true;
      }
      continue;
    }
    std::vector<double> mean(dim, 0.0);
    for (const std::vector<double>& s : result.member_class_scores[i]) {
      if (s.empty()) continue;
      for (std::size_t c = 0; c < dim; ++c) mean[c] += s[c];
    }
    for (double& v : mean) v /= members;
    result.tracks[i].class_scores = mean;
    result.tracks[i].class_id = static_cast<int>(
        std::max_element(mean.begin(), mean.end()) - mean.begin());
  }
  return result;
}

}  // namespace gtrack
