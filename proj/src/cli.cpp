#include "gtrack/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gtrack/clip_io.hpp"
#include "gtrack/common.hpp"
#include "gtrack/manifest.hpp"
#include "gtrack/mot_io.hpp"
#include "gtrack/sha256.hpp"
#include "gtrack/suites.hpp"

namespace gtrack {

namespace {

nlohmann::json load_json_file(const std::string& path) {
  nlohmann::json j =
      nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON in " + path);
  return j;
}

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
}

RunManifest start_manifest(const std::vector<std::string>& argv,
                           nlohmann::json config) {
  RunManifest m;
  m.command = argv;
  m.version = kVersion;
  m.config = std::move(config);
  return m;
}

void add_output(RunManifest& m, const std::string& path) {
  m.outputs[path] = sha256_file(path);
}

void add_input(RunManifest& m, const std::string& path) {
  m.inputs[path] = sha256_file(path);
}

int cmd_simulate(const std::vector<std::string>& argv,
                 const std::string& config_path, const std::string& out_dir,
                 const std::string& name, std::string manifest_path) {
  const nlohmann::json cj = load_json_file(config_path);
  const ScenarioConfig sc = cj.get<ScenarioConfig>();
  validate(sc);
  const GroundTruthClip gt = generate_scenario(sc);
  const DetectionClip dets = render_detections(gt, sc);

  std::filesystem::create_directories(out_dir);
  const std::string base = out_dir + "/" + name;
  const std::string gt_csv = base + "_gt.csv";
  const std::string gt_json = base + "_gt.json";
  const std::string dets_json = base + "_dets.json";
  const std::string dets_csv = base + "_dets.csv";
  write_text_file(gt_csv, write_mot_csv(trajectories_to_rows(gt.trajectories)));
  save_ground_truth(gt_json, gt);
  save_detections(dets_json, dets);
  write_text_file(dets_csv, write_mot_csv(detections_to_rows(dets)));

  RunManifest m = start_manifest(argv, nlohmann::json(sc));
  add_input(m, config_path);
  for (const std::string& p : {gt_csv, gt_json, dets_json, dets_csv}) {
    add_output(m, p);
  }
  if (manifest_path.empty()) manifest_path = base + "_manifest.json";
  save_manifest(manifest_path, m);

  std::printf("simulated %d frames, %zu tracks, %d detections\n", gt.frames,
              gt.trajectories.size(),
              static_cast<int>(dets.total_detections()));
  std::printf("wrote %s %s %s %s\n", gt_csv.c_str(), gt_json.c_str(),
              dets_json.c_str(), dets_csv.c_str());
  return 0;
}

int cmd_train(const std::vector<std::string>& argv,
              const std::string& config_path, const std::string& out_path,
              std::string loss_log_path, std::string manifest_path) {
  const nlohmann::json cj = load_json_file(config_path);
  const TrainConfig tc = cj.get<TrainConfig>();
  validate(tc);
  TrainResult result = train(tc);

  ensure_parent_dir(out_path);
  result.head.save(out_path);

  if (loss_log_path.empty()) loss_log_path = out_path + ".loss.csv";
  std::string log = "iteration,loss\n";
  char buf[128];
  for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.10g\n", i,
                  result.loss_history[i]);
    log += buf;
  }
  ensure_parent_dir(loss_log_path);
  write_text_file(loss_log_path, log);

  RunManifest m = start_manifest(argv, nlohmann::json(tc));
  add_input(m, config_path);
  add_output(m, out_path);
  add_output(m, loss_log_path);
  if (manifest_path.empty()) manifest_path = out_path + ".manifest.json";
  save_manifest(manifest_path, m);

  const double first = result.loss_history.empty() ? 0.0
                                                   : result.loss_history.front();
  const double last = result.loss_history.empty() ? 0.0
                                                  : result.loss_history.back();
  std::printf("trained %d iterations, loss %.6f -> %.6f\n", tc.iterations,
              first, last);
  std::printf("wrote %s %s\n", out_path.c_str(), loss_log_path.c_str());
  return 0;
}

struct TrackFlags {
  std::string config_path;
  int window = -1;
  double theta = -1.0;
  double score = -1.0;
  int min_length = -1;
  bool use_location = false;
  bool location_set = false;
};

InferenceConfig resolve_inference(const TrackFlags& f) {
  InferenceConfig icfg;
  if (!f.config_path.empty()) {
    icfg = load_json_file(f.config_path).get<InferenceConfig>();
  }
  if (f.window >= 0) icfg.window = f.window;
  if (f.theta >= 0.0) icfg.theta = f.theta;
  if (f.score >= 0.0) icfg.det_score_threshold = f.score;
  if (f.min_length >= 0) icfg.min_track_length = f.min_length;
  if (f.location_set) icfg.use_location = f.use_location;
  validate(icfg);
  return icfg;
}

int cmd_track(const std::vector<std::string>& argv,
              const std::string& model_path, const std::string& dets_path,
              const std::string& out_path, std::string trace_path,
              const TrackFlags& flags, std::string manifest_path) {
  const GtrHead head = GtrHead::load(model_path);
  const DetectionClip dets = load_detections(dets_path);
  const InferenceConfig icfg = resolve_inference(flags);

  GtrBackend backend(head);
  TrackingResult result = track_sequence(dets, backend, icfg);
  postprocess(result, icfg);
  average_class_scores(result);

  ensure_parent_dir(out_path);
  write_text_file(out_path, write_mot_csv(trajectories_to_rows(result.tracks)));

  if (trace_path.empty()) trace_path = out_path + ".trace.json";
  nlohmann::json trace = nlohmann::json::array();
  for (const LinkEvent& e : result.trace) {
    trace.push_back({{"frame", e.frame},
                     {"query", e.query},
                     {"track_id", e.track_id},
                     {"score", e.score},
                     {"is_new", e.is_new}});
  }
  ensure_parent_dir(trace_path);
  write_text_file(trace_path, trace.dump(1) + "\n");

  RunManifest m = start_manifest(argv, nlohmann::json(icfg));
  add_input(m, model_path);
  add_input(m, dets_path);
  if (!flags.config_path.empty()) add_input(m, flags.config_path);
  add_output(m, out_path);
  add_output(m, trace_path);
  if (manifest_path.empty()) manifest_path = out_path + ".manifest.json";
  save_manifest(manifest_path, m);

  std::printf("tracked %d frames into %zu tracks\n", dets.frames,
              result.tracks.size());
  std::printf("wrote %s %s\n", out_path.c_str(), trace_path.c_str());
  return 0;
}

int cmd_eval(const std::vector<std::string>& argv,
             const std::vector<std::string>& gt_paths,
             const std::vector<std::string>& result_paths,
             const std::string& out_path, std::string manifest_path) {
  if (gt_paths.size() != result_paths.size()) {
    throw ConfigError("eval: need one --results per --gt");
  }
  std::vector<EvalPair> pairs;
  for (std::size_t i = 0; i < gt_paths.size(); ++i) {
    EvalPair p;
    p.gt = rows_to_trajectories(parse_mot_csv(read_text_file(gt_paths[i])));
    p.pred =
        rows_to_trajectories(parse_mot_csv(read_text_file(result_paths[i])));
    pairs.push_back(std::move(p));
  }

  nlohmann::json report;
  report["sequences"] = nlohmann::json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const MetricsReport r = evaluate(pairs[i]);
    nlohmann::json jr = r;
    jr["gt_file"] = gt_paths[i];
    jr["results_file"] = result_paths[i];
    report["sequences"].push_back(jr);
    if (pairs.size() > 1) {
      std::printf("sequence %zu (%s):\n%s", i + 1, gt_paths[i].c_str(),
                  report_table(r).c_str());
    }
  }
  const MetricsReport agg = evaluate(merge_pairs(pairs));
  report["aggregate"] = agg;
  std::printf("aggregate over %zu sequence(s):\n%s", pairs.size(),
              report_table(agg).c_str());

  ensure_parent_dir(out_path);
  write_text_file(out_path, report.dump(1) + "\n");

  RunManifest m = start_manifest(
      argv, nlohmann::json{{"gt", gt_paths}, {"results", result_paths}});
  for (const std::string& p : gt_paths) add_input(m, p);
  for (const std::string& p : result_paths) add_input(m, p);
  add_output(m, out_path);
  if (manifest_path.empty()) manifest_path = out_path + ".manifest.json";
  save_manifest(manifest_path, m);
  return 0;
}

int cmd_gradcheck(const std::vector<std::string>& argv, double eps,
                  const std::string& out_path, std::string manifest_path) {
  const std::vector<GradcheckCase> cases = run_gradcheck_suite(eps);
  bool ok = true;
  nlohmann::json report = nlohmann::json::array();
  for (const GradcheckCase& c : cases) {
    const bool pass = c.report.max_rel_err < 1e-4;
    ok = ok && pass;
    std::printf("%-24s max rel err %.3e (worst %s[%d])  %s\n", c.name.c_str(),
                c.report.max_rel_err, c.report.worst_param.c_str(),
                c.report.worst_index, pass ? "ok" : "FAIL");
    report.push_back({{"name", c.name},
                      {"max_rel_err", c.report.max_rel_err},
                      {"worst_param", c.report.worst_param},
                      {"worst_index", c.report.worst_index},
                      {"analytic", c.report.analytic},
                      {"numeric", c.report.numeric}});
  }
  ensure_parent_dir(out_path);
  write_text_file(out_path, report.dump(1) + "\n");

  RunManifest m = start_manifest(argv, nlohmann::json{{"eps", eps}});
  add_output(m, out_path);
  if (manifest_path.empty()) manifest_path = out_path + ".manifest.json";
  save_manifest(manifest_path, m);
  return ok ? 0 : 1;
}

struct AblateFlags {
  std::string suite = "occlusion";
  std::vector<std::string> what;
  bool window_sweep_flag = false;
  int count = 8;
  std::uint64_t seed = 7;
  int iterations = 0;  // 0 = suite default
  std::string out_dir = ".";
};

std::vector<ScenarioConfig> make_suite(const std::string& name, int count,
                                       std::uint64_t seed) {
  if (name == "occlusion") return occlusion_suite(count, seed);
  if (name == "noise") return feature_noise_suite(count, seed);
  throw ConfigError("ablate: unknown suite '" + name + "'");
}

TrainConfig make_train_config(const std::string& suite, std::uint64_t seed,
                              int iterations) {
  TrainConfig tc = suite == "noise" ? feature_noise_train_config(seed)
                                    : occlusion_train_config(seed);
  if (iterations > 0) tc.iterations = iterations;
  return tc;
}

std::string two_row_table(const std::string& a_name, const MetricsReport& a,
                          const std::string& b_name, const MetricsReport& b) {
  char buf[256];
  std::string out =
      "variant                MOTA     IDF1     HOTA     DetA     AssA\n";
  std::snprintf(buf, sizeof(buf), "%-20s %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                a_name.c_str(), a.mota, a.idf1, a.hota, a.deta, a.assa);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-20s %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                b_name.c_str(), b.mota, b.idf1, b.hota, b.deta, b.assa);
  out += buf;
  return out;
}

int cmd_ablate(const std::vector<std::string>& argv, AblateFlags f,
               std::string manifest_path) {
  if (f.window_sweep_flag) f.what.push_back("window");
  if (f.what.empty()) f.what.push_back("window");
  std::filesystem::create_directories(f.out_dir);
  const std::vector<ScenarioConfig> suite =
      make_suite(f.suite, f.count, f.seed);
  const InferenceConfig icfg = suite_inference_config(16);

  nlohmann::json report;
  std::string tables;

  for (const std::string& what : f.what) {
    if (what == "window") {
      TrainConfig tc = make_train_config(f.suite, f.seed, f.iterations);
      TrainResult tr = train(tc);
      const std::vector<WindowSweepRow> rows =
          window_sweep(tr.head, suite, {2, 4, 8, 16, 32}, icfg);
      const std::string table = sweep_table(rows);
      std::printf("window sweep (%s suite):\n%s\n", f.suite.c_str(),
                  table.c_str());
      tables += "window sweep:\n" + table + "\n";
      report["window"] = nlohmann::json::array();
      for (const WindowSweepRow& r : rows) {
        report["window"].push_back(
            {{"window", r.window}, {"report", r.report}});
      }
      // The greedy baselines see the identical detections.
      BaselineConfig bc;
      for (auto [mode, name] :
           {std::pair{BaselineConfig::Mode::kIou, "greedy_iou"},
            std::pair{BaselineConfig::Mode::kReid, "greedy_reid"},
            std::pair{BaselineConfig::Mode::kCombined, "greedy_combined"}}) {
        bc.mode = mode;
        const MetricsReport r = evaluate_suite_baseline(suite, bc, icfg);
        report[name] = r;
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "%-20s MOTA %7.4f  IDF1 %7.4f  HOTA %7.4f  AssA %7.4f\n",
                      name, r.mota, r.idf1, r.hota, r.assa);
        std::fputs(buf, stdout);
        tables += buf;
      }
    } else if (what == "attention") {
      report["attention"] = nlohmann::json::array();
      double full_sum = 0.0, dot_sum = 0.0;
      for (int s = 0; s < 3; ++s) {
        TrainConfig tc =
            make_train_config(f.suite, f.seed + 100 + s, f.iterations);
        TrainResult full = train(tc);
        TrainConfig dot_tc = tc;
        dot_tc.model.dot_product_only = true;
        TrainResult dot = train(dot_tc);
        const MetricsReport fr = evaluate_suite(suite, full.head, icfg);
        const MetricsReport dr = evaluate_suite(suite, dot.head, icfg);
        full_sum += fr.assa;
        dot_sum += dr.assa;
        const std::string table = two_row_table("full_head", fr,
                                                "dot_product_only", dr);
        std::printf("attention ablation, seed %llu:\n%s\n",
                    static_cast<unsigned long long>(tc.seed), table.c_str());
        tables += table + "\n";
        report["attention"].push_back(
            {{"seed", tc.seed}, {"full", fr}, {"dot_product_only", dr}});
      }
      std::printf("mean AssA: full %.4f vs dot-product %.4f\n\n",
                  full_sum / 3.0, dot_sum / 3.0);
      report["attention_mean_assa"] = {{"full", full_sum / 3.0},
                                       {"dot_product_only", dot_sum / 3.0}};
    } else if (what == "embedding") {
      TrainConfig tc = make_train_config(f.suite, f.seed + 200, f.iterations);
      TrainResult off = train(tc);
      TrainConfig on_tc = tc;
      on_tc.model.positional_embedding = true;
      TrainResult on = train(on_tc);
      const MetricsReport ro = evaluate_suite(suite, off.head, icfg);
      const MetricsReport rn = evaluate_suite(suite, on.head, icfg);
      const std::string table =
          two_row_table("no_positional", ro, "positional", rn);
      std::printf("positional-embedding ablation:\n%s\n", table.c_str());
      tables += table + "\n";
      report["embedding"] = {{"no_positional", ro}, {"positional", rn}};
    } else if (what == "layers") {
      report["layers"] = nlohmann::json::array();
      std::string table =
          "enc dec      MOTA     IDF1     HOTA     DetA     AssA\n";
      for (auto [enc, dec] : {std::pair{1, 1}, std::pair{2, 1},
                              std::pair{1, 2}, std::pair{2, 2}}) {
        TrainConfig tc =
            make_train_config(f.suite, f.seed + 300, f.iterations);
        tc.model.encoder_layers = enc;
        tc.model.decoder_layers = dec;
        TrainResult tr = train(tc);
        const MetricsReport r = evaluate_suite(suite, tr.head, icfg);
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "%3d %3d %9.4f %8.4f %8.4f %8.4f %8.4f\n", enc, dec,
                      r.mota, r.idf1, r.hota, r.deta, r.assa);
        table += buf;
        report["layers"].push_back(
            {{"encoder_layers", enc}, {"decoder_layers", dec}, {"report", r}});
      }
      std::printf("layer-count ablation:\n%s\n", table.c_str());
      tables += table + "\n";
    } else {
      throw ConfigError("ablate: unknown study '" + what + "'");
    }
  }

  const std::string report_path = f.out_dir + "/ablate_report.json";
  const std::string table_path = f.out_dir + "/ablate_tables.txt";
  write_text_file(report_path, report.dump(1) + "\n");
  write_text_file(table_path, tables);

  RunManifest m = start_manifest(argv, nlohmann::json{{"suite", f.suite},
                                                      {"what", f.what},
                                                      {"count", f.count},
                                                      {"seed", f.seed},
                                                      {"iterations",
                                                       f.iterations}});
  add_output(m, report_path);
  add_output(m, table_path);
  if (manifest_path.empty()) {
    manifest_path = f.out_dir + "/ablate_manifest.json";
  }
  save_manifest(manifest_path, m);
  return 0;
}

int cmd_replay(const std::string& manifest_path) {
  const RunManifest m = load_manifest(manifest_path);
  const std::vector<std::string> input_problems = verify_hashes(m.inputs);
  if (!input_problems.empty()) {
    for (const std::string& p : input_problems) {
      std::fprintf(stderr, "replay: input %s\n", p.c_str());
    }
    return 1;
  }
  std::string cmdline;
  for (const std::string& a : m.command) {
    cmdline += (cmdline.empty() ? "" : " ") + a;
  }
  std::printf("replaying: %s\n", cmdline.c_str());
  const int rc = run_cli(m.command);
  if (rc != 0) {
    std::fprintf(stderr, "replay: command exited with %d\n", rc);
    return rc;
  }
  const std::vector<std::string> output_problems = verify_hashes(m.outputs);
  if (!output_problems.empty()) {
    for (const std::string& p : output_problems) {
      std::fprintf(stderr, "replay: output %s\n", p.c_str());
    }
    return 1;
  }
  std::printf("replay ok: %zu output(s) byte-identical\n", m.outputs.size());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"synthetic multi-object tracking workbench"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand(
      "simulate", "generate a scenario clip and its noisy detections");
  std::string sim_config, sim_out_dir = ".", sim_name = "clip", sim_manifest;
  sim->add_option("--config", sim_config, "scenario config JSON")->required();
  sim->add_option("--out-dir", sim_out_dir, "output directory");
  sim->add_option("--name", sim_name, "output file prefix");
  sim->add_option("--manifest", sim_manifest, "manifest path");

  // train
  auto* tr = app.add_subcommand("train",
                                "train the association head on synthetic clips");
  std::string tr_config, tr_out = "model.json", tr_loss, tr_manifest;
  tr->add_option("--config", tr_config, "training config JSON")->required();
  tr->add_option("--out", tr_out, "checkpoint path");
  tr->add_option("--loss-log", tr_loss, "loss history CSV path");
  tr->add_option("--manifest", tr_manifest, "manifest path");

  // track
  auto* trk = app.add_subcommand(
      "track", "run the sliding-window tracker over stored detections");
  std::string trk_model, trk_dets, trk_out = "results.csv", trk_trace,
              trk_manifest;
  TrackFlags trk_flags;
  trk->add_option("--model", trk_model, "checkpoint path")->required();
  trk->add_option("--dets", trk_dets, "detections JSON")->required();
  trk->add_option("--out", trk_out, "results CSV path");
  trk->add_option("--trace", trk_trace, "link-event trace JSON path");
  trk->add_option("--config", trk_flags.config_path, "inference config JSON");
  trk->add_option("--window", trk_flags.window, "history window length");
  trk->add_option("--theta", trk_flags.theta, "link acceptance threshold");
  trk->add_option("--score", trk_flags.score, "detection score threshold");
  trk->add_option("--min-length", trk_flags.min_length,
                  "minimum track length");
  auto* loc = trk->add_flag("--use-location", trk_flags.use_location,
                            "fuse IoU into link scores");
  trk->add_option("--manifest", trk_manifest, "manifest path");

  // eval
  auto* ev = app.add_subcommand(
      "eval", "score tracking results against ground truth");
  std::vector<std::string> ev_gt, ev_res;
  std::string ev_out = "report.json", ev_manifest;
  ev->add_option("--gt", ev_gt, "ground-truth MOT CSV (repeatable)")
      ->required();
  ev->add_option("--results", ev_res, "results MOT CSV (repeatable)")
      ->required();
  ev->add_option("--out", ev_out, "report JSON path");
  ev->add_option("--manifest", ev_manifest, "manifest path");

  // ablate
  auto* ab = app.add_subcommand(
      "ablate", "train + evaluate the study grid on a scenario suite");
  AblateFlags ab_flags;
  std::string ab_manifest;
  ab->add_option("--suite", ab_flags.suite, "occlusion or noise");
  ab->add_option("--what", ab_flags.what,
                 "studies: window attention embedding layers");
  ab->add_flag("--window-sweep", ab_flags.window_sweep_flag,
               "shorthand for --what window");
  ab->add_option("--count", ab_flags.count, "scenarios per suite");
  ab->add_option("--seed", ab_flags.seed, "suite + training seed");
  ab->add_option("--iterations", ab_flags.iterations,
                 "override training iterations");
  ab->add_option("--out-dir", ab_flags.out_dir, "output directory");
  ab->add_option("--manifest", ab_manifest, "manifest path");

  // gradcheck
  auto* gc = app.add_subcommand(
      "gradcheck", "finite-difference validation of the trained path");
  double gc_eps = 1e-5;
  std::string gc_out = "gradcheck_report.json", gc_manifest;
  gc->add_option("--eps", gc_eps, "central-difference step");
  gc->add_option("--out", gc_out, "report JSON path");
  gc->add_option("--manifest", gc_manifest, "manifest path");

  // replay
  auto* rp = app.add_subcommand(
      "replay", "re-run a manifest and verify outputs are byte-identical");
  std::string rp_manifest;
  rp->add_option("manifest", rp_manifest, "manifest JSON path")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("gtrack");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  trk_flags.location_set = loc->count() > 0;

  try {
    if (sim->parsed()) {
      return cmd_simulate(args, sim_config, sim_out_dir, sim_name,
                          sim_manifest);
    }
    if (tr->parsed()) {
      return cmd_train(args, tr_config, tr_out, tr_loss, tr_manifest);
    }
    if (trk->parsed()) {
      return cmd_track(args, trk_model, trk_dets, trk_out, trk_trace,
                       trk_flags, trk_manifest);
    }
    if (ev->parsed()) {
      return cmd_eval(args, ev_gt, ev_res, ev_out, ev_manifest);
    }
    if (ab->parsed()) return cmd_ablate(args, ab_flags, ab_manifest);
    if (gc->parsed()) return cmd_gradcheck(args, gc_eps, gc_out, gc_manifest);
    if (rp->parsed()) return cmd_replay(rp_manifest);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace gtrack
