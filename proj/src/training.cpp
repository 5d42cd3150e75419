#include "gtrack/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "gtrack/rng.hpp"

namespace gtrack {

ClipAssignment assign_gt(const DetectionClip& dets,
                         const GroundTruthClip& gt) {
  if (dets.frames != gt.frames) {
    throw ContractError("assign_gt: clip frame counts differ (" +
                        std::to_string(dets.frames) + " vs " +
                        std::to_string(gt.frames) + ")");
  }
  const int frames = dets.frames;
  const int k_count = static_cast<int>(gt.trajectories.size());

  ClipAssignment out;
  out.alpha.assign(k_count, std::vector<int>(frames, -1));
  out.det_to_traj.resize(frames);

  for (int t = 1; t <= frames; ++t) {
    const std::vector<Detection>& frame_dets = dets.per_frame[t - 1];
    out.det_to_traj[t - 1].assign(frame_dets.size(), -1);

    // Each trajectory's best detection at this frame.
    struct Claim {
      double iou_val;
      int det;
      int traj;
    };
    std::vector<Claim> claims;
    for (int k = 0; k < k_count; ++k) {
      auto it = gt.trajectories[k].slices.find(t);
      if (it == gt.trajectories[k].slices.end()) continue;
      double best = 0.0;
      int best_i = -1;
      for (int i = 0; i < static_cast<int>(frame_dets.size()); ++i) {
        const double v = iou(frame_dets[i].box, it->second);
        if (v > best) {
          best = v;
          best_i = i;
        }
      }
      if (best_i >= 0 && best >= 0.5) claims.push_back({best, best_i, k});
    }
    // Conflicting claims on one detection: highest IoU wins; losers stay
    // unmatched rather than falling back to a worse detection.
    std::sort(claims.begin(), claims.end(), [](const Claim& a, const Claim& b) {
      return std::tie(b.iou_val, a.det, a.traj) <
             std::tie(a.iou_val, b.det, b.traj);
    });
    for (const Claim& c : claims) {
      if (out.det_to_traj[t - 1][c.det] != -1) continue;
      out.det_to_traj[t - 1][c.det] = c.traj;
      out.alpha[c.traj][t - 1] = c.det;
    }
  }
  return out;
}

ClipTensors clip_to_tensors(const DetectionClip& clip) {
  std::vector<int> counts(clip.frames);
  const int d = clip.feature_dim();
  std::vector<double> data;
  for (int t = 0; t < clip.frames; ++t) {
    counts[t] = static_cast<int>(clip.per_frame[t].size());
    for (const Detection& det : clip.per_frame[t]) {
      if (static_cast<int>(det.feature.size()) != d) {
        throw ContractError("clip_to_tensors: inconsistent feature dims");
      }
      data.insert(data.end(), det.feature.begin(), det.feature.end());
    }
  }
  ClipTensors out;
  out.part = FramePartition::from_counts(std::move(counts));
  out.features = Tensor::constant(out.part.total(), d, std::move(data));
  return out;
}

Tensor association_loss(const AssociationScores& scores,
                        const ClipAssignment& assign) {
  const FramePartition& part = scores.part;
  const int m = scores.queries();
  if (static_cast<int>(assign.det_to_traj.size()) != part.frames()) {
    throw ContractError("association_loss: assignment covers " +
                        std::to_string(assign.det_to_traj.size()) +
                        " frames, scores cover " +
                        std::to_string(part.frames()));
  }
  for (int t = 0; t < part.frames(); ++t) {
    if (static_cast<int>(assign.det_to_traj[t].size()) != part.count(t)) {
      throw ContractError("association_loss: frame " + std::to_string(t + 1) +
                          " has " +
                          std::to_string(assign.det_to_traj[t].size()) +
                          " labels for " + std::to_string(part.count(t)) +
                          " detections");
    }
  }
  if (m != part.total()) {
    throw ContractError(
        "association_loss: training queries must be all window detections");
  }

  // Queries are the flat detections; query q in frame s belongs to
  // trajectory det_to_traj[s][i] (or background). Target in frame t is that
  // trajectory's detection there (column shifted +1 past the empty slot).
  std::vector<int> query_traj(m, -1);
  for (int t = 0; t < part.frames(); ++t) {
    for (int i = 0; i < part.count(t); ++i) {
      query_traj[part.column(t, i)] = assign.det_to_traj[t][i];
    }
  }

  std::vector<Tensor> frame_terms;
  frame_terms.reserve(part.frames());
  Tensor empty_col = Tensor::zeros(m, 1);
  for (int t = 0; t < part.frames(); ++t) {
    const int nt = part.count(t);
    Tensor logits;
    if (nt == 0) {
      logits = empty_col;
    } else {
      Tensor seg = slice_cols(scores.g, part.offset(t), part.offset(t) + nt);
      logits = concat_cols({empty_col, seg});
    }
    Tensor logp = log_softmax_rows(logits);
    std::vector<int> target(m, 0);
    for (int q = 0; q < m; ++q) {
      const int traj = query_traj[q];
      if (traj >= 0) {
        const int a = assign.alpha[traj][t];
        target[q] = a + 1;  // -1 (absent) lands on the empty slot
      }
    }
    frame_terms.push_back(sum(gather_per_row(logp, target)));
  }
  Tensor total = frame_terms[0];
  for (std::size_t t = 1; t < frame_terms.size(); ++t) {
    total = add(total, frame_terms[t]);
  }
  return scale(total, -1.0);
}

void validate(const TrainConfig& cfg) {
  if (cfg.clip_len < 2) throw ConfigError("train: clip_len must be >= 2");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (cfg.iterations < 0) throw ConfigError("train: iterations must be >= 0");
  if (cfg.scenarios.min_objects < 1 ||
      cfg.scenarios.max_objects < cfg.scenarios.min_objects) {
    throw ConfigError("train: invalid object count range");
  }
  validate(cfg.model);
}

void to_json(nlohmann::json& j, const ScenarioConfig& cfg) {
  j = nlohmann::json{{"num_objects", cfg.num_objects},
                     {"clip_len", cfg.clip_len},
                     {"arena_w", cfg.arena_w},
                     {"arena_h", cfg.arena_h},
                     {"min_speed", cfg.min_speed},
                     {"max_speed", cfg.max_speed},
                     {"direction_change_prob", cfg.direction_change_prob},
                     {"box_min_size", cfg.box_min_size},
                     {"box_max_size", cfg.box_max_size},
                     {"max_occlusion", cfg.max_occlusion},
                     {"appearance_dim", cfg.appearance_dim},
                     {"feature_dim", cfg.feature_dim},
                     {"feature_projection_seed", cfg.feature_projection_seed},
                     {"feature_scale", cfg.feature_scale},
                     {"box_jitter", cfg.box_jitter},
                     {"dropout", cfg.dropout},
                     {"fp_rate", cfg.fp_rate},
                     {"feature_noise", cfg.feature_noise},
                     {"num_classes", cfg.num_classes},
                     {"seed", cfg.seed}};
  j["occlusions"] = nlohmann::json::array();
  for (const OcclusionEpisode& ep : cfg.occlusions) {
    j["occlusions"].push_back({{"object", ep.object},
                               {"start", ep.start},
                               {"duration", ep.duration}});
  }
}

void from_json(const nlohmann::json& j, ScenarioConfig& cfg) {
  ScenarioConfig def;
  cfg.num_objects = j.value("num_objects", def.num_objects);
  cfg.clip_len = j.value("clip_len", def.clip_len);
  cfg.arena_w = j.value("arena_w", def.arena_w);
  cfg.arena_h = j.value("arena_h", def.arena_h);
  cfg.min_speed = j.value("min_speed", def.min_speed);
  cfg.max_speed = j.value("max_speed", def.max_speed);
  cfg.direction_change_prob =
      j.value("direction_change_prob", def.direction_change_prob);
  cfg.box_min_size = j.value("box_min_size", def.box_min_size);
  cfg.box_max_size = j.value("box_max_size", def.box_max_size);
  cfg.max_occlusion = j.value("max_occlusion", def.max_occlusion);
  cfg.appearance_dim = j.value("appearance_dim", def.appearance_dim);
  cfg.feature_dim = j.value("feature_dim", def.feature_dim);
  cfg.feature_projection_seed =
      j.value("feature_projection_seed", def.feature_projection_seed);
  cfg.feature_scale = j.value("feature_scale", def.feature_scale);
  cfg.box_jitter = j.value("box_jitter", def.box_jitter);
  cfg.dropout = j.value("dropout", def.dropout);
  cfg.fp_rate = j.value("fp_rate", def.fp_rate);
  cfg.feature_noise = j.value("feature_noise", def.feature_noise);
  cfg.num_classes = j.value("num_classes", def.num_classes);
  cfg.seed = j.value("seed", def.seed);
  cfg.occlusions.clear();
  for (const auto& e : j.value("occlusions", nlohmann::json::array())) {
    OcclusionEpisode ep;
    ep.object = e.value("object", 0);
    ep.start = e.value("start", 1);
    ep.duration = e.value("duration", 1);
    cfg.occlusions.push_back(ep);
  }
}

void to_json(nlohmann::json& j, const AdamWOptions& o) {
  j = nlohmann::json{{"lr", o.lr},           {"beta1", o.beta1},
                     {"beta2", o.beta2},     {"eps", o.eps},
                     {"weight_decay", o.weight_decay},
                     {"grad_clip", o.grad_clip}};
}

void from_json(const nlohmann::json& j, AdamWOptions& o) {
  AdamWOptions def;
  o.lr = j.value("lr", def.lr);
  o.beta1 = j.value("beta1", def.beta1);
  o.beta2 = j.value("beta2", def.beta2);
  o.eps = j.value("eps", def.eps);
  o.weight_decay = j.value("weight_decay", def.weight_decay);
  o.grad_clip = j.value("grad_clip", def.grad_clip);
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  j = nlohmann::json{{"clip_len", cfg.clip_len},
                     {"batch_size", cfg.batch_size},
                     {"iterations", cfg.iterations},
                     {"seed", cfg.seed},
                     {"optim", cfg.optim},
                     {"model", cfg.model},
                     {"scenario_base", cfg.scenarios.base},
                     {"min_objects", cfg.scenarios.min_objects},
                     {"max_objects", cfg.scenarios.max_objects}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  TrainConfig def;
  cfg.clip_len = j.value("clip_len", def.clip_len);
  cfg.batch_size = j.value("batch_size", def.batch_size);
  cfg.iterations = j.value("iterations", def.iterations);
  cfg.seed = j.value("seed", def.seed);
  if (j.contains("optim")) cfg.optim = j.at("optim").get<AdamWOptions>();
  if (j.contains("model")) cfg.model = j.at("model").get<GtrConfig>();
  if (j.contains("scenario_base")) {
    cfg.scenarios.base = j.at("scenario_base").get<ScenarioConfig>();
  }
  cfg.scenarios.min_objects = j.value("min_objects", def.scenarios.min_objects);
  cfg.scenarios.max_objects = j.value("max_objects", def.scenarios.max_objects);
}

Tensor clip_loss(const GtrHead& head, const DetectionClip& dets,
                 const GroundTruthClip& gt) {
  ClipTensors ct = clip_to_tensors(dets);
  std::vector<int> all_rows(ct.part.total());
  for (int i = 0; i < ct.part.total(); ++i) all_rows[i] = i;
  AssociationScores scores = head.forward(ct.features, ct.part, all_rows);
  return association_loss(scores, assign_gt(dets, gt));
}

TrainResult train(const TrainConfig& cfg) {
  validate(cfg);
  GtrHead head(cfg.model);
  AdamW opt(cfg.optim);
  std::vector<double> history;
  history.reserve(cfg.iterations);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    head.params().zero_grad();
    Tensor batch_loss;
    for (int b = 0; b < cfg.batch_size; ++b) {
      ScenarioConfig sc = cfg.scenarios.base;
      sc.clip_len = cfg.clip_len;
      Rng pick(mix_seed(cfg.seed, static_cast<std::uint64_t>(iter), b));
      sc.num_objects = static_cast<int>(pick.uniform_int(
          cfg.scenarios.min_objects, cfg.scenarios.max_objects));
      sc.seed = pick.next_u64();
      GroundTruthClip gt = generate_scenario(sc);
      DetectionClip dets = render_detections(gt, sc);
      if (dets.total_detections() == 0) continue;  // nothing to supervise
      Tensor loss = clip_loss(head, dets, gt);
      batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
    }
    double value = 0.0;
    if (batch_loss.defined()) {
      batch_loss = scale(batch_loss, 1.0 / cfg.batch_size);
      value = batch_loss.scalar();
      if (!std::isfinite(value)) {
        throw Error("train: non-finite loss at iteration " +
                    std::to_string(iter) + " (seed " +
                    std::to_string(cfg.seed) + ")");
      }
      backward(batch_loss);
      opt.step(head.params());
    }
    history.push_back(value);
  }
  return TrainResult{std::move(head), std::move(history)};
}

}  // namespace gtrack
