#include "gtrack/suites.hpp"

#include <cstdio>

#include "gtrack/rng.hpp"

namespace gtrack {

namespace {

ScenarioConfig suite_base() {
  ScenarioConfig sc;
  sc.clip_len = 40;
  sc.arena_w = 100.0;
  sc.arena_h = 100.0;
  sc.min_speed = 1.0;
  sc.max_speed = 3.0;
  sc.direction_change_prob = 0.03;
  sc.box_min_size = 8.0;
  sc.box_max_size = 14.0;
  sc.appearance_dim = 8;
  sc.feature_dim = 32;
  sc.num_classes = 3;
  return sc;
}

constexpr std::uint64_t kOcclusionTag = 0x6f63636c;
constexpr std::uint64_t kNoiseTag = 0x6e6f6973;
constexpr std::uint64_t kCleanTag = 0x636c6561;

// Non-overlapping disappearances for a subset of objects, each 3..max_gap
// frames, kept away from the clip edges so every track exists before and
// after its gap.
std::vector<OcclusionEpisode> sample_occlusions(Rng& rng, int num_objects,
                                                int clip_len, int episodes,
                                                int max_gap) {
  std::vector<OcclusionEpisode> out;
  std::vector<int> objects(num_objects);
  for (int i = 0; i < num_objects; ++i) objects[i] = i;
  rng.shuffle(objects);
  const int lo = 6;
  const int hi_margin = 6;
  for (int e = 0; e < episodes && e < num_objects; ++e) {
    OcclusionEpisode ep;
    ep.object = objects[e];
    ep.duration = static_cast<int>(rng.uniform_int(3, max_gap));
    const int hi = clip_len - hi_margin - ep.duration;
    if (hi < lo) continue;
    ep.start = static_cast<int>(rng.uniform_int(lo, hi));
    out.push_back(ep);
  }
  return out;
}

}  // namespace

std::vector<ScenarioConfig> occlusion_suite(int count, std::uint64_t seed) {
  std::vector<ScenarioConfig> out;
  for (int i = 0; i < count; ++i) {
    ScenarioConfig sc = suite_base();
    sc.num_objects = 4 + (i % 3);
    sc.box_jitter = 0.02;
    sc.dropout = 0.03;
    sc.fp_rate = 0.2;
    sc.feature_noise = 0.15;
    sc.seed = mix_seed(seed, kOcclusionTag, static_cast<std::uint64_t>(i));
    Rng rng(mix_seed(sc.seed, kOcclusionTag));
    sc.occlusions =
        sample_occlusions(rng, sc.num_objects, sc.clip_len, sc.num_objects, 8);
    out.push_back(std::move(sc));
  }
  return out;
}

std::vector<ScenarioConfig> feature_noise_suite(int count,
                                                std::uint64_t seed) {
  std::vector<ScenarioConfig> out;
  for (int i = 0; i < count; ++i) {
    ScenarioConfig sc = suite_base();
    sc.num_objects = 4 + (i % 3);
    sc.box_jitter = 0.04;
    sc.dropout = 0.05;
    sc.fp_rate = 0.5;
    sc.feature_noise = 0.6;
    sc.seed = mix_seed(seed, kNoiseTag, static_cast<std::uint64_t>(i));
    Rng rng(mix_seed(sc.seed, kNoiseTag));
    sc.occlusions =
        sample_occlusions(rng, sc.num_objects, sc.clip_len, 2, 4);
    out.push_back(std::move(sc));
  }
  return out;
}

std::vector<ScenarioConfig> clean_suite(int count, std::uint64_t seed,
                                        int max_gap) {
  std::vector<ScenarioConfig> out;
  for (int i = 0; i < count; ++i) {
    ScenarioConfig sc = suite_base();
    sc.num_objects = 3 + (i % 4);
    sc.box_jitter = 0.0;
    sc.dropout = 0.0;
    sc.fp_rate = 0.0;
    sc.feature_noise = 0.0;
    sc.seed = mix_seed(seed, kCleanTag, static_cast<std::uint64_t>(i));
    Rng rng(mix_seed(sc.seed, kCleanTag));
    sc.occlusions = sample_occlusions(rng, sc.num_objects, sc.clip_len,
                                      sc.num_objects / 2, max_gap);
    out.push_back(std::move(sc));
  }
  return out;
}

namespace {

TrainConfig suite_train_base(std::uint64_t seed) {
  TrainConfig tc;
  tc.clip_len = 8;
  tc.batch_size = 2;
  tc.iterations = 3000;
  tc.seed = seed;
  tc.optim.lr = 1e-3;
  tc.optim.weight_decay = 1e-4;
  tc.optim.grad_clip = 0.1;
  tc.model.dim = 32;
  tc.model.heads = 4;
  tc.model.ffn_mult = 2;
  tc.model.encoder_layers = 1;
  tc.model.decoder_layers = 1;
  tc.model.max_frames = 64;
  tc.model.init_seed = seed;
  tc.scenarios.min_objects = 2;
  tc.scenarios.max_objects = 6;
  return tc;
}

}  // namespace

TrainConfig occlusion_train_config(std::uint64_t seed) {
  TrainConfig tc = suite_train_base(seed);
  ScenarioConfig sc = suite_base();
  sc.clip_len = tc.clip_len;
  sc.box_jitter = 0.02;
  sc.dropout = 0.03;
  sc.fp_rate = 0.2;
  sc.feature_noise = 0.15;
  tc.scenarios.base = sc;
  return tc;
}

TrainConfig feature_noise_train_config(std::uint64_t seed) {
  TrainConfig tc = suite_train_base(seed);
  ScenarioConfig sc = suite_base();
  sc.clip_len = tc.clip_len;
  sc.box_jitter = 0.04;
  sc.dropout = 0.05;
  sc.fp_rate = 0.5;
  sc.feature_noise = 0.6;
  tc.scenarios.base = sc;
  return tc;
}

InferenceConfig suite_inference_config(int window) {
  InferenceConfig icfg;
  icfg.window = window;
  icfg.theta = 0.2;
  // Survivor confidences live in (0.5, 1]; clutter sits below 0.6. The
  // synthetic detector is better-calibrated than a real one, so the split
  // point keeps nearly all real boxes while dropping most clutter.
  icfg.det_score_threshold = 0.55;
  icfg.min_track_length = 5;
  icfg.use_location = false;
  return icfg;
}

MetricsReport evaluate_suite(const std::vector<ScenarioConfig>& suite,
                             AssociationBackend& backend,
                             const InferenceConfig& icfg) {
  std::vector<EvalPair> pairs;
  for (const ScenarioConfig& sc : suite) {
    const GroundTruthClip gt = generate_scenario(sc);
    const DetectionClip dets = render_detections(gt, sc);
    TrackingResult result = track_sequence(dets, backend, icfg);
    postprocess(result, icfg);
    average_class_scores(result);
    pairs.push_back(EvalPair{gt.trajectories, result.tracks});
  }
  return evaluate(merge_pairs(pairs));
}

MetricsReport evaluate_suite(const std::vector<ScenarioConfig>& suite,
                             const GtrHead& head,
                             const InferenceConfig& icfg) {
  GtrBackend backend(head);
  return evaluate_suite(suite, backend, icfg);
}

MetricsReport evaluate_suite_baseline(const std::vector<ScenarioConfig>& suite,
                                      BaselineConfig bcfg,
                                      const InferenceConfig& icfg) {
  bcfg.det_score_threshold = icfg.det_score_threshold;
  bcfg.min_track_length = icfg.min_track_length;
  std::vector<EvalPair> pairs;
  for (const ScenarioConfig& sc : suite) {
    const GroundTruthClip gt = generate_scenario(sc);
    const DetectionClip dets = render_detections(gt, sc);
    std::vector<Trajectory> preds = greedy_track(dets, bcfg);
    pairs.push_back(EvalPair{gt.trajectories, std::move(preds)});
  }
  return evaluate(merge_pairs(pairs));
}

std::vector<WindowSweepRow> window_sweep(
    const GtrHead& head, const std::vector<ScenarioConfig>& suite,
    const std::vector<int>& windows, const InferenceConfig& base) {
  std::vector<WindowSweepRow> rows;
  for (int w : windows) {
    InferenceConfig icfg = base;
    icfg.window = w;
    WindowSweepRow row;
    row.window = w;
    row.report = evaluate_suite(suite, head, icfg);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_table(const std::vector<WindowSweepRow>& rows) {
  std::string out =
      "window     MOTA     IDF1     HOTA     DetA     AssA     FP    FN  IDSW\n";
  char buf[256];
  for (const WindowSweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%6d %8.4f %8.4f %8.4f %8.4f %8.4f %6d %5d %5d\n", r.window,
                  r.report.mota, r.report.idf1, r.report.hota, r.report.deta,
                  r.report.assa, r.report.fp, r.report.fn, r.report.idsw);
    out += buf;
  }
  return out;
}

std::vector<GradcheckCase> run_gradcheck_suite(double eps) {
  ScenarioConfig sc;
  sc.num_objects = 3;
  sc.clip_len = 3;
  sc.arena_w = 100.0;
  sc.arena_h = 100.0;
  sc.box_min_size = 8.0;
  sc.box_max_size = 14.0;
  sc.appearance_dim = 6;
  sc.feature_dim = 16;
  sc.box_jitter = 0.05;
  sc.dropout = 0.15;
  sc.fp_rate = 0.4;
  sc.feature_noise = 0.3;
  sc.num_classes = 2;
  sc.seed = 20240u;
  const GroundTruthClip gt = generate_scenario(sc);
  DetectionClip dets = render_detections(gt, sc);
  // Keep the instance small enough that every variant checks in seconds.
  while (dets.total_detections() > 12) {
    sc.seed += 1;
    dets = render_detections(gt, sc);
  }

  GtrConfig base;
  base.dim = 16;
  base.heads = 4;
  base.ffn_mult = 2;
  base.encoder_layers = 1;
  base.decoder_layers = 1;
  base.max_frames = 8;
  base.init_seed = 5;

  std::vector<std::pair<std::string, GtrConfig>> variants;
  variants.emplace_back("default", base);
  {
    GtrConfig c = base;
    c.decoder_self_attention = true;
    variants.emplace_back("decoder_self_attention", c);
  }
  {
    GtrConfig c = base;
    c.positional_embedding = true;
    variants.emplace_back("positional_embedding", c);
  }
  {
    GtrConfig c = base;
    c.encoder_layers = 2;
    c.decoder_layers = 2;
    variants.emplace_back("two_layers", c);
  }

  std::vector<GradcheckCase> out;
  for (auto& [name, cfg] : variants) {
    GtrHead head(cfg);
    auto loss_fn = [&head, &dets, &gt](ParamStore&) {
      return clip_loss(head, dets, gt);
    };
    GradcheckCase gc;
    gc.name = name;
    gc.report = finite_diff_check(loss_fn, head.params(), eps);
    out.push_back(std::move(gc));
  }
  return out;
}

}  // namespace gtrack
