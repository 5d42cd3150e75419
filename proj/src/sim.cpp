#include "gtrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gtrack/rng.hpp"

namespace gtrack {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Stream tags so generation and rendering never replay each other's draws.
constexpr std::uint64_t kGenStream = 0x67656e;     // "gen"
constexpr std::uint64_t kRenderStream = 0x726e64;  // "rnd"
constexpr std::uint64_t kStaticStream = 0x737463;  // "stc"

}  // namespace

void validate(const ScenarioConfig& cfg) {
  if (cfg.num_objects < 1) throw ConfigError("scenario: num_objects must be >= 1");
  if (cfg.clip_len < 2) throw ConfigError("scenario: clip_len must be >= 2");
  if (cfg.arena_w <= 0.0 || cfg.arena_h <= 0.0) {
    throw ConfigError("scenario: arena must have positive size");
  }
  if (cfg.box_min_size <= 0.0 || cfg.box_max_size < cfg.box_min_size) {
    throw ConfigError("scenario: invalid box size range");
  }
  if (cfg.box_max_size >= std::min(cfg.arena_w, cfg.arena_h)) {
    throw ConfigError("scenario: boxes must fit inside the arena");
  }
  if (cfg.min_speed < 0.0 || cfg.max_speed < cfg.min_speed) {
    throw ConfigError("scenario: invalid speed range");
  }
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(cfg.direction_change_prob)) {
    throw ConfigError("scenario: direction_change_prob must be in [0, 1]");
  }
  if (!prob(cfg.dropout)) throw ConfigError("scenario: dropout must be in [0, 1]");
  if (cfg.fp_rate < 0.0) throw ConfigError("scenario: fp_rate must be >= 0");
  if (cfg.box_jitter < 0.0 || cfg.feature_noise < 0.0) {
    throw ConfigError("scenario: noise sigmas must be >= 0");
  }
  if (cfg.appearance_dim < 1) throw ConfigError("scenario: appearance_dim must be >= 1");
  if (cfg.feature_dim < 1) throw ConfigError("scenario: feature_dim must be >= 1");
  if (cfg.num_classes < 1) throw ConfigError("scenario: num_classes must be >= 1");
  if (cfg.feature_scale <= 0.0) throw ConfigError("scenario: feature_scale must be > 0");
  for (const OcclusionEpisode& ep : cfg.occlusions) {
    if (ep.object < 0 || ep.object >= cfg.num_objects) {
      throw ConfigError("scenario: occlusion object " + std::to_string(ep.object) +
                        " out of range for " + std::to_string(cfg.num_objects) +
                        " objects");
    }
    if (ep.start < 1 || ep.duration < 1) {
      throw ConfigError("scenario: occlusion episode must have start >= 1, duration >= 1");
    }
    if (ep.duration > cfg.max_occlusion) {
      throw ConfigError("scenario: occlusion duration " + std::to_string(ep.duration) +
                        " exceeds max " + std::to_string(cfg.max_occlusion));
    }
  }
}

GroundTruthClip generate_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  Rng rng(mix_seed(cfg.seed, kGenStream));
  GroundTruthClip clip;
  clip.frames = cfg.clip_len;
  clip.trajectories.resize(cfg.num_objects);
  clip.appearance.resize(cfg.num_objects);
  clip.class_ids.resize(cfg.num_objects);

  for (int k = 0; k < cfg.num_objects; ++k) {
    const double w = rng.uniform(cfg.box_min_size, cfg.box_max_size);
    const double h = rng.uniform(cfg.box_min_size, cfg.box_max_size);
    double cx = rng.uniform(w / 2, cfg.arena_w - w / 2);
    double cy = rng.uniform(h / 2, cfg.arena_h - h / 2);
    const double speed = rng.uniform(cfg.min_speed, cfg.max_speed);
    double theta = rng.uniform(0.0, 2.0 * kPi);
    double vx = speed * std::cos(theta);
    double vy = speed * std::sin(theta);

    Trajectory& traj = clip.trajectories[k];
    traj.id = k;
    for (int t = 1; t <= cfg.clip_len; ++t) {
      traj.slices.emplace(t, Box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2));
      if (rng.uniform() < cfg.direction_change_prob) {
        theta = rng.uniform(0.0, 2.0 * kPi);
        vx = speed * std::cos(theta);
        vy = speed * std::sin(theta);
      }
      cx += vx;
      cy += vy;
      // bounce off the walls, keeping the box inside
      if (cx < w / 2) { cx = w - cx; vx = -vx; }
      if (cx > cfg.arena_w - w / 2) { cx = 2 * (cfg.arena_w - w / 2) - cx; vx = -vx; }
      if (cy < h / 2) { cy = h - cy; vy = -vy; }
      if (cy > cfg.arena_h - h / 2) { cy = 2 * (cfg.arena_h - h / 2) - cy; vy = -vy; }
      cx = std::clamp(cx, w / 2, cfg.arena_w - w / 2);
      cy = std::clamp(cy, h / 2, cfg.arena_h - h / 2);
    }

    std::vector<double>& app = clip.appearance[k];
    app.resize(cfg.appearance_dim);
    double norm = 0.0;
    for (double& a : app) {
      a = rng.normal();
      norm += a * a;
    }
    norm = std::sqrt(std::max(norm, 1e-12));
    for (double& a : app) a *= cfg.feature_scale / norm;

    clip.class_ids[k] = static_cast<int>(rng.below(cfg.num_classes));
    traj.class_id = clip.class_ids[k];
  }

  for (const OcclusionEpisode& ep : cfg.occlusions) {
    for (int t = ep.start; t < ep.start + ep.duration; ++t) {
      clip.trajectories[ep.object].slices.erase(t);
    }
  }
  return clip;
}

namespace {

// Fixed random projection mixing appearance and normalized box geometry
// into the feature space; row-major (appearance_dim + 4) x feature_dim.
std::vector<double> feature_projection(const ScenarioConfig& cfg) {
  Rng rng(mix_seed(cfg.feature_projection_seed, 0x70726f6a));  // "proj"
  const int in_dim = cfg.appearance_dim + 4;
  std::vector<double> p(static_cast<std::size_t>(in_dim) * cfg.feature_dim);
  const double s = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& v : p) v = rng.normal() * s;
  return p;
}

std::vector<double> project_feature(const std::vector<double>& proj,
                                    const std::vector<double>& appearance,
                                    const Box& box, const ScenarioConfig& cfg) {
  std::vector<double> raw(appearance);
  raw.push_back(box.cx() / cfg.arena_w);
  raw.push_back(box.cy() / cfg.arena_h);
  raw.push_back(box.width() / cfg.arena_w);
  raw.push_back(box.height() / cfg.arena_h);
  std::vector<double> f(cfg.feature_dim, 0.0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double rv = raw[i];
    for (int j = 0; j < cfg.feature_dim; ++j) {
      f[j] += rv * proj[i * cfg.feature_dim + j];
    }
  }
  return f;
}

Box jitter_box(const Box& b, double sigma, Rng& rng) {
  if (sigma <= 0.0) return b;
  const double cx = b.cx() + rng.normal() * sigma * b.width();
  const double cy = b.cy() + rng.normal() * sigma * b.height();
  const double w = b.width() * std::max(0.2, 1.0 + rng.normal() * sigma);
  const double h = b.height() * std::max(0.2, 1.0 + rng.normal() * sigma);
  return Box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2);
}

}  // namespace

DetectionClip render_detections(const GroundTruthClip& gt,
                                const ScenarioConfig& cfg) {
  validate(cfg);
  if (static_cast<int>(gt.trajectories.size()) != cfg.num_objects) {
    throw ContractError("render_detections: clip has " +
                        std::to_string(gt.trajectories.size()) +
                        " trajectories, config says " +
                        std::to_string(cfg.num_objects));
  }
  Rng rng(mix_seed(cfg.seed, kRenderStream));
  const std::vector<double> proj = feature_projection(cfg);

  DetectionClip clip;
  clip.frames = gt.frames;
  clip.per_frame.resize(gt.frames);

  for (int t = 1; t <= gt.frames; ++t) {
    std::vector<Detection>& dets = clip.per_frame[t - 1];
    std::vector<const Box*> gt_boxes;
    for (int k = 0; k < cfg.num_objects; ++k) {
      auto it = gt.trajectories[k].slices.find(t);
      if (it == gt.trajectories[k].slices.end()) continue;
      gt_boxes.push_back(&it->second);
      if (rng.uniform() < cfg.dropout) continue;

      Detection d;
      d.frame = t;
      d.box = jitter_box(it->second, cfg.box_jitter, rng);
      std::vector<double> app = gt.appearance[k];
      if (cfg.feature_noise > 0.0) {
        for (double& a : app) a += rng.normal() * cfg.feature_noise;
      }
      d.feature = project_feature(proj, app, d.box, cfg);
      d.confidence = 1.0 - 0.5 * rng.uniform();  // (0.5, 1]
      d.class_id = gt.class_ids[k];
      d.class_scores.resize(cfg.num_classes);
      for (int c = 0; c < cfg.num_classes; ++c) {
        d.class_scores[c] = (c == d.class_id) ? 0.7 + 0.3 * rng.uniform()
                                              : 0.3 * rng.uniform();
      }
      d.source_id = k;
      dets.push_back(std::move(d));
    }

    const int fp_count = rng.poisson(cfg.fp_rate);
    for (int f = 0; f < fp_count; ++f) {
      bool placed = false;
      for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
        const double w = rng.uniform(cfg.box_min_size, cfg.box_max_size);
        const double h = rng.uniform(cfg.box_min_size, cfg.box_max_size);
        const double cx = rng.uniform(w / 2, cfg.arena_w - w / 2);
        const double cy = rng.uniform(h / 2, cfg.arena_h - h / 2);
        Box fp_box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2);
        bool clear = true;
        for (const Box* gb : gt_boxes) {
          if (iou(fp_box, *gb) >= 0.5) {
            clear = false;
            break;
          }
        }
        if (!clear) continue;

        Detection d;
        d.frame = t;
        d.box = fp_box;
        std::vector<double> app(cfg.appearance_dim);
        double norm = 0.0;
        for (double& a : app) {
          a = rng.normal();
          norm += a * a;
        }
        norm = std::sqrt(std::max(norm, 1e-12));
        for (double& a : app) a *= cfg.feature_scale / norm;
        d.feature = project_feature(proj, app, d.box, cfg);
        d.confidence = rng.uniform(0.05, 0.6);
        d.class_id = static_cast<int>(rng.below(cfg.num_classes));
        d.class_scores.resize(cfg.num_classes);
        for (int c = 0; c < cfg.num_classes; ++c) {
          d.class_scores[c] = 0.3 * rng.uniform();
        }
        d.source_id = -1;
        dets.push_back(std::move(d));
        placed = true;
      }
    }

    rng.shuffle(dets);
  }
  return clip;
}

GroundTruthClip static_scene_clip(const GroundTruthClip& gt_frame, int t_len,
                                  const AugmentSpec& aug,
                                  unsigned long long seed) {
  if (t_len < 2) throw ConfigError("static_scene_clip: need at least 2 frames");
  if (aug.scale_min <= 0.0 || aug.scale_max < aug.scale_min) {
    throw ConfigError("static_scene_clip: invalid scale range");
  }
  if (aug.translate < 0.0) {
    throw ConfigError("static_scene_clip: negative translate range");
  }
  Rng rng(mix_seed(seed, kStaticStream));

  // Two global augmentations (scale about the scene centroid + offset),
  // forming the clip's first and last frames.
  double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
  for (const Trajectory& traj : gt_frame.trajectories) {
    if (traj.slices.empty()) continue;
    const Box& b = traj.slices.begin()->second;
    min_x = std::min(min_x, b.x1);
    min_y = std::min(min_y, b.y1);
    max_x = std::max(max_x, b.x2);
    max_y = std::max(max_y, b.y2);
  }
  const double ctr_x = (min_x + max_x) / 2;
  const double ctr_y = (min_y + max_y) / 2;

  struct Aug {
    double s, dx, dy;
  };
  auto sample = [&]() {
    return Aug{rng.uniform(aug.scale_min, aug.scale_max),
               rng.uniform(-aug.translate, aug.translate),
               rng.uniform(-aug.translate, aug.translate)};
  };
  const Aug a0 = sample();
  const Aug a1 = sample();
  auto apply = [&](const Aug& a, const Box& b) {
    return Box(ctr_x + a.s * (b.x1 - ctr_x) + a.dx,
               ctr_y + a.s * (b.y1 - ctr_y) + a.dy,
               ctr_x + a.s * (b.x2 - ctr_x) + a.dx,
               ctr_y + a.s * (b.y2 - ctr_y) + a.dy);
  };

  GroundTruthClip clip;
  clip.frames = t_len;
  clip.appearance = gt_frame.appearance;
  clip.class_ids = gt_frame.class_ids;
  clip.trajectories.reserve(gt_frame.trajectories.size());
  for (const Trajectory& traj : gt_frame.trajectories) {
    Trajectory out;
    out.id = traj.id;
    out.class_id = traj.class_id;
    out.class_scores = traj.class_scores;
    if (!traj.slices.empty()) {
      const Box& base = traj.slices.begin()->second;
      const Box b0 = apply(a0, base);
      const Box b1 = apply(a1, base);
      for (int t = 1; t <= t_len; ++t) {
        const double blend = static_cast<double>(t - 1) / (t_len - 1);
        out.slices.emplace(t, interpolate_box(b0, b1, blend));
      }
    }
    clip.trajectories.push_back(std::move(out));
  }
  return clip;
}

}  // namespace gtrack
