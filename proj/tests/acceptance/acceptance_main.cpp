// Acceptance gate: every release-blocking property, one verdict line each.
// Exit code 0 only when all twelve hold.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gtrack/cli.hpp"
#include "gtrack/gradcheck.hpp"
#include "gtrack/hungarian.hpp"
#include "gtrack/metrics.hpp"
#include "gtrack/mot_io.hpp"
#include "gtrack/rng.hpp"
#include "gtrack/suites.hpp"
#include "gtrack/tracker.hpp"
#include "gtrack/training.hpp"

using namespace gtrack;

namespace {

struct Verdict {
  int id;
  std::string label;
  bool pass;
  std::string note;
  double seconds;
};

std::vector<Verdict> verdicts;

void run_criterion(int id, const std::string& label,
                   const std::function<std::pair<bool, std::string>()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string note;
  try {
    auto [p, n] = fn();
    pass = p;
    note = std::move(n);
  } catch (const std::exception& e) {
    note = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  verdicts.push_back({id, label, pass, note, secs});
  std::fprintf(stderr, "[%2d done in %.1fs] %s\n", id, secs, label.c_str());
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, ap);
  va_end(ap);
  return buf;
}

// ---- criterion bodies ------------------------------------------------------

std::pair<bool, std::string> c1_gradcheck() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<GradcheckCase> cases = run_gradcheck_suite(1e-5);
  double worst = 0.0;
  std::string worst_name;
  for (const GradcheckCase& c : cases) {
    if (c.report.max_rel_err > worst) {
      worst = c.report.max_rel_err;
      worst_name = c.name;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const bool ok = worst < 1e-4 && secs < 60.0 && !cases.empty();
  return {ok, fmt("max rel err %.3e (%s), %.1fs", worst, worst_name.c_str(),
                  secs)};
}

std::pair<bool, std::string> c2_distribution_law() {
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(4));
    const int frames = 1 + static_cast<int>(rng.below(4));
    std::vector<int> counts(frames);
    for (int& c : counts) c = static_cast<int>(rng.below(6));
    FramePartition part = FramePartition::from_counts(counts);
    const int n = part.total();
    std::vector<double> g(static_cast<std::size_t>(m) * n);
    for (double& v : g) v = rng.uniform(-8.0, 8.0);
    AssociationDistribution dist = association_distribution_raw(g, m, part);

    for (int q = 0; q < m; ++q) {
      for (int t = 0; t < frames; ++t) {
        const std::vector<double>& row = dist.p[q][t];
        double total = 0.0;
        for (double v : row) total += v;
        if (std::abs(total - 1.0) > 1e-9) {
          return {false, fmt("row sum off by %.3e", std::abs(total - 1.0))};
        }
        double denom = 1.0;
        for (int i = 0; i < part.count(t); ++i) {
          denom += std::exp(g[static_cast<std::size_t>(q) * n +
                              part.offset(t) + i]);
        }
        if (row[0] != 1.0 / denom) {
          return {false, fmt("empty-token probability not exact at trial %d",
                             trial)};
        }
        ++checked;
      }
    }
  }
  return {true, fmt("%d distributions exact over 1000 matrices", checked)};
}

std::pair<bool, std::string> c3_closed_form_init() {
  // direct clip losses on fresh (zero score) heads
  Rng rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    ScenarioConfig sc;
    sc.num_objects = 2 + static_cast<int>(rng.below(4));
    sc.clip_len = 3 + static_cast<int>(rng.below(4));
    sc.dropout = trial % 2 == 0 ? 0.0 : 0.2;
    sc.fp_rate = trial % 3 == 0 ? 0.5 : 0.0;
    sc.seed = rng.next_u64();
    GroundTruthClip gt = generate_scenario(sc);
    DetectionClip dets = render_detections(gt, sc);
    if (dets.total_detections() == 0) continue;

    GtrConfig model;
    model.dim = 32;
    model.heads = 4;
    model.init_seed = rng.next_u64();
    GtrHead head(model);
    double per_query = 0.0;
    for (const auto& frame : dets.per_frame) {
      per_query += std::log(static_cast<double>(frame.size()) + 1.0);
    }
    const double expected =
        static_cast<double>(dets.total_detections()) * per_query;
    worst = std::max(worst,
                     std::abs(clip_loss(head, dets, gt).scalar() - expected));
  }

  // the training loop's iteration-0 value against the sampler-derived form
  TrainConfig tc;
  tc.clip_len = 4;
  tc.batch_size = 3;
  tc.iterations = 1;
  tc.seed = 17;
  tc.model.dim = 16;
  tc.model.heads = 4;
  tc.scenarios.base.feature_dim = 16;
  TrainResult tr = train(tc);
  double expected = 0.0;
  for (int b = 0; b < tc.batch_size; ++b) {
    ScenarioConfig sc = tc.scenarios.base;
    sc.clip_len = tc.clip_len;
    Rng pick(mix_seed(tc.seed, 0, static_cast<std::uint64_t>(b)));
    sc.num_objects = static_cast<int>(
        pick.uniform_int(tc.scenarios.min_objects, tc.scenarios.max_objects));
    sc.seed = pick.next_u64();
    DetectionClip dets = render_detections(generate_scenario(sc), sc);
    double per_query = 0.0;
    for (const auto& frame : dets.per_frame) {
      per_query += std::log(static_cast<double>(frame.size()) + 1.0);
    }
    expected += static_cast<double>(dets.total_detections()) * per_query;
  }
  expected /= tc.batch_size;
  worst = std::max(worst, std::abs(tr.loss_history.at(0) - expected));
  return {worst < 1e-9, fmt("worst deviation %.3e", worst)};
}

std::pair<bool, std::string> c4_oracle_tracking() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<ScenarioConfig> suite = clean_suite(20, 404, 6);
  InferenceConfig icfg;
  icfg.window = 8;  // every sampled gap (3..6) fits inside the buffer
  icfg.theta = 0.2;
  icfg.det_score_threshold = 0.0;
  icfg.min_track_length = 1;

  OracleBackend oracle;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const GroundTruthClip gt = generate_scenario(suite[i]);
    const DetectionClip dets = render_detections(gt, suite[i]);
    const TrackingResult r = track_sequence(dets, oracle, icfg);
    EvalPair pair{gt.trajectories, r.tracks};
    const double mota = clear_mot(pair).mota;
    const double idf1 = idf1_score(pair).idf1;
    if (mota != 1.0 || idf1 != 1.0) {
      return {false, fmt("scenario %zu: MOTA %.4f IDF1 %.4f", i, mota, idf1)};
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {secs < 60.0, fmt("20 scenarios perfect in %.1fs", secs)};
}

double brute_force_assignment(const std::vector<double>& cost, int rows,
                              int cols) {
  // cheapest matching of exactly min(rows, cols) pairs
  const int want = std::min(rows, cols);
  std::vector<char> used(cols, 0);
  std::function<double(int, int)> rec = [&](int r, int matched) -> double {
    if (r == rows) {
      return matched == want ? 0.0
                             : std::numeric_limits<double>::infinity();
    }
    double best = rec(r + 1, matched);  // leave this row out
    for (int c = 0; c < cols; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      best = std::min(best, cost[static_cast<std::size_t>(r) * cols + c] +
                                rec(r + 1, matched + 1));
      used[c] = 0;
    }
    return best;
  };
  return rec(0, 0);
}

std::pair<bool, std::string> c5_hungarian_exact() {
  Rng rng(555);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + static_cast<int>(rng.below(6));
    const int cols = 1 + static_cast<int>(rng.below(6));
    std::vector<double> cost(static_cast<std::size_t>(rows) * cols);
    for (double& v : cost) {
      v = static_cast<double>(rng.uniform_int(0, 9));
    }
    const AssignmentResult ar = solve_assignment(cost, rows, cols);
    const double expected = brute_force_assignment(cost, rows, cols);
    if (ar.cost != expected) {
      return {false, fmt("trial %d: %0.f vs brute force %.0f", trial, ar.cost,
                         expected)};
    }
  }
  return {true, "200 matrices, integer costs, exact"};
}

Trajectory accept_span(int id, const Box& b, int first, int last) {
  Trajectory t;
  t.id = id;
  for (int f = first; f <= last; ++f) t.slices.emplace(f, b);
  return t;
}

int accept_brute_idtp(const EvalPair& pair) {
  const int g_n = static_cast<int>(pair.gt.size());
  const int p_n = static_cast<int>(pair.pred.size());
  std::vector<std::vector<int>> ov(g_n, std::vector<int>(p_n, 0));
  for (int g = 0; g < g_n; ++g) {
    for (int p = 0; p < p_n; ++p) {
      for (const auto& [frame, box] : pair.gt[g].slices) {
        auto it = pair.pred[p].slices.find(frame);
        if (it != pair.pred[p].slices.end() && iou(box, it->second) >= 0.5) {
          ++ov[g][p];
        }
      }
    }
  }
  std::vector<char> used(p_n, 0);
  std::function<int(int)> rec = [&](int g) -> int {
    if (g == g_n) return 0;
    int best = rec(g + 1);
    for (int p = 0; p < p_n; ++p) {
      if (used[p]) continue;
      used[p] = 1;
      best = std::max(best, ov[g][p] + rec(g + 1));
      used[p] = 0;
    }
    return best;
  };
  return rec(0);
}

std::pair<bool, std::string> c6_metrics_oracles() {
  const Box a(0, 0, 10, 10), b(30, 0, 40, 10), far(60, 60, 70, 70);

  // instance 1: perfect predictions
  EvalPair perfect;
  perfect.gt = {accept_span(1, a, 1, 10), accept_span(2, b, 1, 10)};
  perfect.pred = {accept_span(7, a, 1, 10), accept_span(9, b, 1, 10)};
  if (clear_mot(perfect).mota != 1.0 || idf1_score(perfect).idf1 != 1.0 ||
      std::abs(hota(perfect).hota - 1.0) > 1e-12) {
    return {false, "perfect instance mis-scored"};
  }

  // instance 2: 1 false positive + 2 misses + 1 switch over 20 boxes
  EvalPair mixed;
  mixed.gt = {accept_span(1, a, 1, 10), accept_span(2, b, 1, 10)};
  Trajectory p3 = accept_span(13, b, 1, 10);
  p3.slices.erase(4);
  p3.slices.erase(5);
  mixed.pred = {accept_span(11, a, 1, 5), accept_span(12, a, 6, 10), p3,
                accept_span(14, far, 3, 3)};
  const ClearMotResult mot = clear_mot(mixed);
  if (mot.fp != 1 || mot.fn != 2 || mot.idsw != 1 ||
      std::abs(mot.mota - 0.8) > 1e-12) {
    return {false, fmt("mixed instance: MOTA %.4f fp %d fn %d idsw %d",
                       mot.mota, mot.fp, mot.fn, mot.idsw)};
  }
  const IdfResult idf = idf1_score(mixed);
  if (idf.idtp != 13 || std::abs(idf.idf1 - 26.0 / 39.0) > 1e-12) {
    return {false, fmt("mixed instance idf1 %.6f", idf.idf1)};
  }

  // instance 3: identity swap halfway through, detection-perfect
  EvalPair swap;
  swap.gt = {accept_span(1, a, 1, 6), accept_span(2, b, 1, 6)};
  Trajectory s1 = accept_span(3, a, 1, 3);
  for (int f = 4; f <= 6; ++f) s1.slices.emplace(f, b);
  Trajectory s2 = accept_span(4, b, 1, 3);
  for (int f = 4; f <= 6; ++f) s2.slices.emplace(f, a);
  swap.pred = {s1, s2};
  const HotaResult h = hota(swap);
  if (std::abs(h.deta - 1.0) > 1e-9 || std::abs(h.assa - 1.0 / 3.0) > 1e-9 ||
      std::abs(h.hota - 1.0 / std::sqrt(3.0)) > 1e-9) {
    return {false,
            fmt("swap instance: DetA %.6f AssA %.6f HOTA %.6f", h.deta,
                h.assa, h.hota)};
  }

  // 50 random small instances against brute-force id bijection
  Rng rng(606);
  const double xs[4] = {0.0, 3.0, 8.0, 20.0};
  auto random_tracks = [&](int max_tracks, int id0) {
    std::vector<Trajectory> out;
    const int n = 1 + static_cast<int>(rng.below(max_tracks));
    for (int i = 0; i < n; ++i) {
      Trajectory t;
      t.id = id0 + i;
      for (int f = 1; f <= 6; ++f) {
        if (rng.uniform() < 0.3) continue;
        const double x = xs[rng.below(4)];
        t.slices.emplace(f, Box(x, 0, x + 10, 10));
      }
      if (!t.slices.empty()) out.push_back(std::move(t));
    }
    return out;
  };
  for (int trial = 0; trial < 50; ++trial) {
    EvalPair pair;
    pair.gt = random_tracks(4, 1);
    pair.pred = random_tracks(4, 100);
    if (idf1_score(pair).idtp != accept_brute_idtp(pair)) {
      return {false, fmt("idf1 bijection mismatch at trial %d", trial)};
    }
  }
  return {true, "3 hand instances exact, 50 idf1 bijections exact"};
}

// shared between criteria 7 and 8
struct OcclusionStudy {
  std::vector<WindowSweepRow> rows;
  double greedy_iou_assa = 0.0;
  double train_secs = 0.0;
  bool ready = false;
};
OcclusionStudy occlusion_study;

void run_occlusion_study() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<ScenarioConfig> suite = occlusion_suite(8, 7);
  TrainResult tr = train(occlusion_train_config(7));
  const InferenceConfig icfg = suite_inference_config(16);
  occlusion_study.rows = window_sweep(tr.head, suite, {2, 4, 8, 16}, icfg);
  BaselineConfig bc;
  bc.mode = BaselineConfig::Mode::kIou;
  occlusion_study.greedy_iou_assa =
      evaluate_suite_baseline(suite, bc, icfg).assa;
  occlusion_study.train_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  occlusion_study.ready = true;
}

std::pair<bool, std::string> c7_window_trend() {
  if (!occlusion_study.ready) run_occlusion_study();
  const std::vector<WindowSweepRow>& rows = occlusion_study.rows;
  std::string curve;
  for (const WindowSweepRow& r : rows) {
    curve += fmt("%s%.4f", curve.empty() ? "" : " -> ", r.report.assa);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].report.assa < rows[i - 1].report.assa - 0.01) monotone = false;
  }
  const double gain = rows.back().report.assa - rows.front().report.assa;
  const bool ok = gain >= 0.05 && monotone &&
                  occlusion_study.train_secs < 900.0;
  return {ok, fmt("AssA %s (train+eval %.0fs)", curve.c_str(),
                  occlusion_study.train_secs)};
}

std::pair<bool, std::string> c8_global_beats_greedy() {
  if (!occlusion_study.ready) run_occlusion_study();
  const double model = occlusion_study.rows.back().report.assa;
  const double greedy = occlusion_study.greedy_iou_assa;
  return {model >= greedy + 0.05,
          fmt("AssA %.4f vs greedy-overlap %.4f", model, greedy)};
}

std::pair<bool, std::string> c9_attention_ablation() {
  const std::vector<ScenarioConfig> suite = feature_noise_suite(8, 7);
  const InferenceConfig icfg = suite_inference_config(16);
  double full_sum = 0.0, dot_sum = 0.0;
  for (int s = 0; s < 3; ++s) {
    TrainConfig tc = feature_noise_train_config(107 + s);
    TrainResult full = train(tc);
    TrainConfig dot_tc = tc;
    dot_tc.model.dot_product_only = true;
    TrainResult dot = train(dot_tc);
    full_sum += evaluate_suite(suite, full.head, icfg).assa;
    dot_sum += evaluate_suite(suite, dot.head, icfg).assa;
  }
  const double full_mean = full_sum / 3.0;
  const double dot_mean = dot_sum / 3.0;
  return {full_mean >= dot_mean,
          fmt("mean AssA full %.4f vs dot-product %.4f over 3 seeds",
              full_mean, dot_mean)};
}

std::pair<bool, std::string> c10_permutation_equivariance() {
  GtrConfig cfg;
  cfg.dim = 32;
  cfg.heads = 4;
  cfg.init_seed = 3;
  GtrHead head(cfg);
  Rng rng(1010);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + static_cast<int>(rng.below(9));
    std::vector<double> data(static_cast<std::size_t>(n) * 32);
    for (double& v : data) v = rng.uniform(-2.0, 2.0);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);

    FramePartition part = FramePartition::from_counts({n});
    Tensor base = head.encode(Tensor::constant(n, 32, data), part);
    std::vector<double> moved(data.size());
    for (int r = 0; r < n; ++r) {
      for (int j = 0; j < 32; ++j) {
        moved[static_cast<std::size_t>(r) * 32 + j] =
            data[static_cast<std::size_t>(perm[r]) * 32 + j];
      }
    }
    Tensor out = head.encode(Tensor::constant(n, 32, moved), part);
    for (int r = 0; r < n; ++r) {
      for (int j = 0; j < 32; ++j) {
        worst = std::max(worst,
                         std::abs(out.at(r, j) - base.at(perm[r], j)));
      }
    }
  }
  return {worst < 1e-9, fmt("20 random row permutations, worst |delta| %.3e",
                            worst)};
}

std::pair<bool, std::string> c11_csv_round_trip() {
  Rng rng(1111);
  for (int clip = 0; clip < 100; ++clip) {
    ScenarioConfig sc;
    sc.num_objects = 2 + static_cast<int>(rng.below(4));
    sc.clip_len = 4 + static_cast<int>(rng.below(5));
    sc.box_jitter = 0.05;
    sc.dropout = 0.1;
    sc.fp_rate = 0.5;
    sc.num_classes = 3;
    sc.seed = rng.next_u64();
    const GroundTruthClip gt = generate_scenario(sc);
    const DetectionClip dets = render_detections(gt, sc);

    for (const std::vector<MotRow>& rows :
         {trajectories_to_rows(gt.trajectories), detections_to_rows(dets)}) {
      const std::string text = write_mot_csv(rows);
      if (write_mot_csv(parse_mot_csv(text)) != text) {
        return {false, fmt("clip %d: bytes changed on re-write", clip)};
      }
    }
  }
  return {true, "100 clips, trajectory + detection tables byte-stable"};
}

std::pair<bool, std::string> c12_manifest_replay() {
  namespace fs = std::filesystem;
  const std::string dir =
      (fs::temp_directory_path() / "gtrack_accept").string();
  fs::remove_all(dir);
  fs::create_directories(dir);

  nlohmann::json scenario = {
      {"num_objects", 4}, {"clip_len", 12},  {"feature_dim", 16},
      {"box_jitter", 0.02}, {"dropout", 0.05}, {"fp_rate", 0.3},
      {"seed", 123},
  };
  write_text_file(dir + "/scenario.json", scenario.dump(1) + "\n");

  TrainConfig tc;
  tc.clip_len = 4;
  tc.batch_size = 2;
  tc.iterations = 40;
  tc.seed = 9;
  tc.optim.lr = 1e-3;
  tc.model.dim = 16;
  tc.model.heads = 4;
  tc.scenarios.base.feature_dim = 16;
  tc.scenarios.min_objects = 2;
  tc.scenarios.max_objects = 4;
  write_text_file(dir + "/train.json", nlohmann::json(tc).dump(1) + "\n");

  const std::vector<std::vector<std::string>> pipelines = {
      {"simulate", "--config", dir + "/scenario.json", "--out-dir", dir,
       "--name", "clip"},
      {"train", "--config", dir + "/train.json", "--out", dir + "/model.json"},
      {"track", "--model", dir + "/model.json", "--dets",
       dir + "/clip_dets.json", "--out", dir + "/results.csv", "--window",
       "8", "--min-length", "2"},
      {"eval", "--gt", dir + "/clip_gt.csv", "--results", dir + "/results.csv",
       "--out", dir + "/report.json"},
      {"gradcheck", "--eps", "1e-5", "--out", dir + "/gradcheck.json"},
      {"ablate", "--suite", "occlusion", "--what", "window", "--count", "2",
       "--seed", "11", "--iterations", "30", "--out-dir", dir + "/ablate"},
  };
  const std::vector<std::string> manifests = {
      dir + "/clip_manifest.json",
      dir + "/model.json.manifest.json",
      dir + "/results.csv.manifest.json",
      dir + "/report.json.manifest.json",
      dir + "/gradcheck.json.manifest.json",
      dir + "/ablate/ablate_manifest.json",
  };

  for (std::size_t i = 0; i < pipelines.size(); ++i) {
    if (run_cli(pipelines[i]) != 0) {
      return {false, fmt("pipeline '%s' failed", pipelines[i][0].c_str())};
    }
  }
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    if (run_cli({"replay", manifests[i]}) != 0) {
      return {false, fmt("replay of '%s' not byte-identical",
                         pipelines[i][0].c_str())};
    }
  }
  fs::remove_all(dir);
  return {true, fmt("%zu pipelines replayed byte-for-byte",
                    pipelines.size())};
}

}  // namespace

int main() {
  run_criterion(1, "gradient correctness on the full head", c1_gradcheck);
  run_criterion(2, "association distribution law", c2_distribution_law);
  run_criterion(3, "closed-form loss at initialization", c3_closed_form_init);
  run_criterion(4, "oracle tracking is perfect", c4_oracle_tracking);
  run_criterion(5, "assignment solver is exact", c5_hungarian_exact);
  run_criterion(6, "metrics match hand values and brute force",
                c6_metrics_oracles);
  run_criterion(7, "association accuracy grows with the window",
                c7_window_trend);
  run_criterion(8, "trained model beats the greedy overlap baseline",
                c8_global_beats_greedy);
  run_criterion(9, "attention beats raw dot products", c9_attention_ablation);
  run_criterion(10, "encoder is permutation equivariant",
                c10_permutation_equivariance);
  run_criterion(11, "csv round trip is byte-exact", c11_csv_round_trip);
  run_criterion(12, "every pipeline replays byte-for-byte",
                c12_manifest_replay);

  bool all = true;
  std::printf("\n================ acceptance summary ================\n");
  for (const Verdict& v : verdicts) {
    all = all && v.pass;
    std::printf("criterion %2d  %s  %s (%s; %.1fs)\n", v.id,
                v.pass ? "PASS" : "FAIL", v.label.c_str(), v.note.c_str(),
                v.seconds);
  }
  std::printf("====================================================\n");
  std::printf("ACCEPTANCE: %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
