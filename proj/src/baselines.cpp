#include "gtrack/baselines.hpp"

#include <cmath>
#include <string>

#include "gtrack/hungarian.hpp"

namespace gtrack {

namespace {

// Finite sentinel for infeasible pairs; real costs stay below 2.
constexpr double kBlocked = 1e6;

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return -1.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na < 1e-24 || nb < 1e-24) return -1.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

void validate(const BaselineConfig& cfg) {
  if (cfg.rebirth < 0) throw ConfigError("baseline: rebirth must be >= 0");
  if (cfg.iou_gate < 0.0 || cfg.iou_gate > 1.0) {
    throw ConfigError("baseline: iou_gate must be in [0, 1]");
  }
  if (cfg.cos_gate < -1.0 || cfg.cos_gate > 1.0) {
    throw ConfigError("baseline: cos_gate must be in [-1, 1]");
  }
  if (cfg.feature_momentum < 0.0 || cfg.feature_momentum >= 1.0) {
    throw ConfigError("baseline: feature_momentum must be in [0, 1)");
  }
  if (cfg.min_track_length < 1) {
    throw ConfigError("baseline: min_track_length must be >= 1");
  }
}

namespace {

const char* mode_name(BaselineConfig::Mode m) {
  switch (m) {
    case BaselineConfig::Mode::kIou: return "iou";
    case BaselineConfig::Mode::kReid: return "reid";
    case BaselineConfig::Mode::kCombined: return "combined";
  }
  return "iou";
}

BaselineConfig::Mode mode_from_name(const std::string& s) {
  if (s == "iou") return BaselineConfig::Mode::kIou;
  if (s == "reid") return BaselineConfig::Mode::kReid;
  if (s == "combined" || s == "iou+reid") return BaselineConfig::Mode::kCombined;
  throw ConfigError("baseline: unknown mode '" + s + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const BaselineConfig& cfg) {
  j = nlohmann::json{{"mode", mode_name(cfg.mode)},
                     {"iou_gate", cfg.iou_gate},
                     {"cos_gate", cfg.cos_gate},
                     {"rebirth", cfg.rebirth},
                     {"det_score_threshold", cfg.det_score_threshold},
                     {"feature_momentum", cfg.feature_momentum},
                     {"min_track_length", cfg.min_track_length}};
}

void from_json(const nlohmann::json& j, BaselineConfig& cfg) {
  BaselineConfig def;
  cfg.mode = mode_from_name(j.value("mode", std::string(mode_name(def.mode))));
  cfg.iou_gate = j.value("iou_gate", def.iou_gate);
  cfg.cos_gate = j.value("cos_gate", def.cos_gate);
  cfg.rebirth = j.value("rebirth", def.rebirth);
  cfg.det_score_threshold =
      j.value("det_score_threshold", def.det_score_threshold);
  cfg.feature_momentum = j.value("feature_momentum", def.feature_momentum);
  cfg.min_track_length = j.value("min_track_length", def.min_track_length);
}

std::vector<Trajectory> greedy_track(const DetectionClip& dets,
                                     const BaselineConfig& cfg) {
  validate(cfg);
  struct State {
    int id;
    std::map<int, Box> boxes;
    Box last_box{0.0, 0.0, 1.0, 1.0};
    std::vector<double> ema;  // feature running mean
    int last_matched = 0;
    double conf_sum = 0.0;
    int class_id = 0;
  };
  std::vector<State> states;
  int next_id = 1;

  for (int t = 1; t <= dets.frames; ++t) {
    std::vector<const Detection*> frame;
    for (const Detection& d : dets.per_frame[t - 1]) {
      if (d.confidence >= cfg.det_score_threshold) frame.push_back(&d);
    }

    std::vector<int> cands;
    for (int s = 0; s < static_cast<int>(states.size()); ++s) {
      if (t - states[s].last_matched - 1 <= cfg.rebirth) cands.push_back(s);
    }

    const int rows = static_cast<int>(cands.size());
    const int cols = static_cast<int>(frame.size());
    std::vector<int> matched_det(rows, -1);
    if (rows > 0 && cols > 0) {
      std::vector<double> cost(static_cast<std::size_t>(rows) * cols,
                               kBlocked);
      for (int r = 0; r < rows; ++r) {
        const State& st = states[cands[r]];
        for (int c = 0; c < cols; ++c) {
          double best = kBlocked;
          if (cfg.mode != BaselineConfig::Mode::kReid) {
            const double v = iou(st.last_box, frame[c]->box);
            if (v >= cfg.iou_gate) best = std::min(best, 1.0 - v);
          }
          if (cfg.mode != BaselineConfig::Mode::kIou) {
            const double v = cosine(st.ema, frame[c]->feature);
            if (v >= cfg.cos_gate) best = std::min(best, 1.0 - v);
          }
          cost[static_cast<std::size_t>(r) * cols + c] = best;
        }
      }
      AssignmentResult ar = solve_assignment(cost, rows, cols);
      for (int r = 0; r < rows; ++r) {
        const int c = ar.row_to_col[r];
        if (c >= 0 &&
            cost[static_cast<std::size_t>(r) * cols + c] < kBlocked / 2) {
          matched_det[r] = c;
        }
      }
    }

    std::vector<char> det_taken(cols, 0);
    for (int r = 0; r < rows; ++r) {
      if (matched_det[r] < 0) continue;
      det_taken[matched_det[r]] = 1;
      State& st = states[cands[r]];
      const Detection& d = *frame[matched_det[r]];
      st.boxes.emplace(t, d.box);
      st.last_box = d.box;
      st.last_matched = t;
      st.conf_sum += d.confidence;
      if (!d.feature.empty()) {
        if (st.ema.size() != d.feature.size()) {
          st.ema = d.feature;
        } else {
          for (std::size_t i = 0; i < st.ema.size(); ++i) {
            st.ema[i] = cfg.feature_momentum * st.ema[i] +
                        (1.0 - cfg.feature_momentum) * d.feature[i];
          }
        }
      }
    }
    for (int c = 0; c < cols; ++c) {
      if (det_taken[c]) continue;
      State st;
      st.id = next_id++;
      const Detection& d = *frame[c];
      st.boxes.emplace(t, d.box);
      st.last_box = d.box;
      st.last_matched = t;
      st.conf_sum = d.confidence;
      st.ema = d.feature;
      st.class_id = d.class_id;
      states.push_back(std::move(st));
    }
  }

  std::vector<Trajectory> out;
  for (State& st : states) {
    if (static_cast<int>(st.boxes.size()) < cfg.min_track_length) continue;
    Trajectory traj;
    traj.id = st.id;
    traj.score = st.conf_sum / static_cast<double>(st.boxes.size());
    traj.class_id = st.class_id;
    traj.slices = std::move(st.boxes);
    out.push_back(std::move(traj));
  }
  return out;
}

}  // namespace gtrack
