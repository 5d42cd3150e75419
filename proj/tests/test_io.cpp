#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <string>
#include <vector>

#include "gtrack/checkpoint.hpp"
#include "gtrack/clip_io.hpp"
#include "gtrack/gtr_head.hpp"
#include "gtrack/manifest.hpp"
#include "gtrack/mot_io.hpp"
#include "gtrack/sha256.hpp"
#include "gtrack/sim.hpp"

using namespace gtrack;
using doctest::Contains;

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  CHECK(sha256_hex("The quick brown fox jumps over the lazy dog") ==
        "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");
  // one full block of 64 bytes forces the padding into a second block
  CHECK(sha256_hex(std::string(64, 'a')) ==
        "ffe054fe7ae0cb6dc65c3af9b61d5209f439851db43d0ba5997337df154668eb");
}

TEST_CASE("file hashing matches string hashing") {
  const std::string path = "/tmp/gtrack_sha_probe.txt";
  write_text_file(path, "abc");
  CHECK(sha256_file(path) == sha256_hex("abc"));
  CHECK(read_text_file(path) == "abc");
  std::remove(path.c_str());
  CHECK_THROWS_AS(sha256_file(path), Error);
  CHECK_THROWS_AS(read_text_file(path), Error);
}

TEST_CASE("mot csv parsing") {
  std::vector<MotRow> rows = parse_mot_csv("1,1,10,20,30,40,1,1,1\n");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].frame == 1);
  CHECK(rows[0].id == 1);
  CHECK(rows[0].left == 10.0);
  CHECK(rows[0].top == 20.0);
  CHECK(rows[0].width == 30.0);
  CHECK(rows[0].height == 40.0);
  CHECK(rows[0].conf == 1.0);

  std::vector<Trajectory> trajs = rows_to_trajectories(rows);
  REQUIRE(trajs.size() == 1);
  CHECK(trajs[0].slices.at(1) == Box(10, 20, 40, 60));

  CHECK(parse_mot_csv("").empty());
  CHECK(parse_mot_csv("\n\n").empty());
  // blank lines do not shift the reported line number
  std::string two = "1,1,10,20,30,40,1,1,1\n\n2,1,10,20,30,40,1,1,1\n";
  CHECK(parse_mot_csv(two).size() == 2);
}

TEST_CASE("mot csv rejects malformed rows by line") {
  CHECK_THROWS_WITH_AS(parse_mot_csv("1,1,10,20,30,40,1,1\n"),
                       Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(parse_mot_csv("1,1,10,20,0,40,1,1,1\n"),
                       Contains("line 1"), ParseError);  // zero width
  CHECK_THROWS_WITH_AS(parse_mot_csv("0,1,10,20,30,40,1,1,1\n"),
                       Contains("line 1"), ParseError);  // frame below 1
  CHECK_THROWS_WITH_AS(
      parse_mot_csv("1,1,10,20,30,40,1,1,1\n1,1,ten,20,30,40,1,1,1\n"),
      Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(parse_mot_csv("1,1,10,20,30,nan,1,1,1\n"),
                       Contains("line 1"), ParseError);

  // duplicate (id, frame) pairs cannot form a trajectory
  std::vector<MotRow> dup =
      parse_mot_csv("1,5,10,20,30,40,1,1,1\n1,5,11,21,30,40,1,1,1\n");
  CHECK_THROWS_AS(rows_to_trajectories(dup), ParseError);
}

TEST_CASE("mot csv writing is canonical and round trips") {
  std::vector<MotRow> rows;
  MotRow r;
  r.frame = 2;
  r.id = 3;
  r.left = 1.005;  // rounds to 2 decimals on write
  r.top = 4.0;
  r.width = 10.0;
  r.height = 12.0;
  r.conf = 0.1234567;  // rounds to 6 decimals
  rows.push_back(r);
  r.frame = 1;
  r.id = 9;
  rows.push_back(r);
  r.id = 2;
  rows.push_back(r);

  std::string text = write_mot_csv(rows);
  std::vector<MotRow> parsed = parse_mot_csv(text);
  REQUIRE(parsed.size() == 3);
  // sorted by frame then id
  CHECK(parsed[0].frame == 1);
  CHECK(parsed[0].id == 2);
  CHECK(parsed[1].id == 9);
  CHECK(parsed[2].frame == 2);
  CHECK(parsed[2].conf == 0.123457);

  // a parse/write cycle is byte-stable
  CHECK(write_mot_csv(parsed) == text);
}

TEST_CASE("trajectory csv round trip preserves geometry") {
  Trajectory t;
  t.id = 4;
  t.class_id = 2;
  t.score = 0.75;
  t.slices.emplace(1, Box(10.25, 5.5, 20.75, 9.5));
  t.slices.emplace(3, Box(11.25, 6.5, 21.75, 10.5));
  Trajectory u;
  u.id = 7;
  u.score = 0.5;
  u.slices.emplace(2, Box(0, 0, 4, 4));

  std::vector<MotRow> rows = trajectories_to_rows({t, u});
  std::vector<Trajectory> back =
      rows_to_trajectories(parse_mot_csv(write_mot_csv(rows)));
  REQUIRE(back.size() == 2);
  const Trajectory& bt = back[0].id == 4 ? back[0] : back[1];
  const Trajectory& bu = back[0].id == 4 ? back[1] : back[0];
  CHECK(bt.slices.size() == 2);
  CHECK(bt.slices.at(1) == t.slices.at(1));
  CHECK(bt.slices.at(3) == t.slices.at(3));
  CHECK(bt.class_id == 2);
  CHECK(bt.score == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(bu.slices.at(2) == u.slices.at(2));
}

TEST_CASE("detection rows carry no identity") {
  DetectionClip clip;
  clip.frames = 3;
  clip.per_frame.resize(3);
  Detection d;
  d.frame = 2;
  d.box = Box(1, 2, 5, 8);
  d.confidence = 0.25;
  d.class_id = 1;
  clip.per_frame[1].push_back(d);

  std::vector<MotRow> rows = detections_to_rows(clip);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].id == -1);
  CHECK(rows[0].frame == 2);

  DetectionClip back = rows_to_detections(rows, 3);
  CHECK(back.frames == 3);
  REQUIRE(back.per_frame[1].size() == 1);
  CHECK(back.per_frame[1][0].box == d.box);
  CHECK(back.per_frame[1][0].confidence == 0.25);
  CHECK(back.per_frame[1][0].source_id == -1);

  // frame count defaults to the highest frame seen
  CHECK(rows_to_detections(rows).frames == 2);
}

TEST_CASE("clip json round trips are bitwise") {
  ScenarioConfig sc;
  sc.num_objects = 3;
  sc.clip_len = 4;
  sc.box_jitter = 0.05;
  sc.dropout = 0.1;
  sc.fp_rate = 0.7;
  sc.feature_noise = 0.1;
  sc.num_classes = 3;
  sc.seed = 97;
  GroundTruthClip gt = generate_scenario(sc);
  DetectionClip dets = render_detections(gt, sc);

  const std::string dpath = "/tmp/gtrack_clip_probe.json";
  save_detections(dpath, dets);
  DetectionClip dback = load_detections(dpath);
  REQUIRE(dback.frames == dets.frames);
  for (int t = 0; t < dets.frames; ++t) {
    REQUIRE(dback.per_frame[t].size() == dets.per_frame[t].size());
    for (std::size_t i = 0; i < dets.per_frame[t].size(); ++i) {
      const Detection& a = dets.per_frame[t][i];
      const Detection& b = dback.per_frame[t][i];
      CHECK(a.box == b.box);
      CHECK(a.confidence == b.confidence);
      CHECK(a.feature == b.feature);
      CHECK(a.class_scores == b.class_scores);
      CHECK(a.class_id == b.class_id);
      CHECK(a.source_id == b.source_id);
      CHECK(a.frame == b.frame);
    }
  }
  std::remove(dpath.c_str());

  const std::string gpath = "/tmp/gtrack_gt_probe.json";
  save_ground_truth(gpath, gt);
  GroundTruthClip gback = load_ground_truth(gpath);
  REQUIRE(gback.trajectories.size() == gt.trajectories.size());
  for (std::size_t k = 0; k < gt.trajectories.size(); ++k) {
    CHECK(gback.trajectories[k].id == gt.trajectories[k].id);
    REQUIRE(gback.trajectories[k].slices.size() ==
            gt.trajectories[k].slices.size());
    for (const auto& [frame, box] : gt.trajectories[k].slices) {
      CHECK(gback.trajectories[k].slices.at(frame) == box);
    }
  }
  CHECK(gback.frames == gt.frames);
  // appearance and per-object class ids are generation-time state and are
  // not part of the stored format
  CHECK(gback.appearance.empty());
  std::remove(gpath.c_str());
}

TEST_CASE("checkpoints restore parameters exactly or fail loudly") {
  GtrConfig cfg;
  cfg.dim = 16;
  cfg.heads = 4;
  cfg.init_seed = 12;
  GtrHead head(cfg);
  const std::string path = "/tmp/gtrack_ckpt_probe.json";
  head.save(path);

  LoadedCheckpoint loaded = load_checkpoint(path);
  CHECK(loaded.config.at("dim") == 16);
  GtrHead restored = GtrHead::load(path);
  for (const auto& [name, t] : head.params().items()) {
    CHECK(restored.params().get(name).value() == t.value());
  }

  SUBCASE("shape mismatches are rejected") {
    ParamStore wrong;
    wrong.add("score.w", Tensor::param(2, 2, {0, 0, 0, 0}));
    CHECK_THROWS_AS(params_from_json(loaded.params, wrong), ParseError);
  }
  SUBCASE("missing and unexpected parameters are rejected") {
    ParamStore tiny;
    tiny.add("score.w", Tensor::param(16, 1, std::vector<double>(16, 0.0)));
    CHECK_THROWS_AS(params_from_json(loaded.params, tiny), ParseError);

    GtrConfig bigger = cfg;
    bigger.encoder_layers = 2;
    GtrHead two(bigger);
    CHECK_THROWS_WITH_AS(params_from_json(loaded.params, two.params()),
                         Contains("enc1"), ParseError);
  }
  SUBCASE("version and container failures") {
    write_text_file(path, "{\"format_version\": 999, \"params\": {}}");
    CHECK_THROWS_WITH_AS(load_checkpoint(path), Contains("version"),
                         ParseError);
    write_text_file(path, "not json at all");
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_checkpoint(path), Error);
  }
  std::remove(path.c_str());
}

TEST_CASE("run manifests record and verify file hashes") {
  const std::string in_path = "/tmp/gtrack_manifest_in.txt";
  const std::string out_path = "/tmp/gtrack_manifest_out.txt";
  write_text_file(in_path, "input bytes");
  write_text_file(out_path, "output bytes");

  RunManifest m;
  m.command = {"gtrack", "simulate", "--seed", "4"};
  m.version = "test";
  m.config = {{"seed", 4}, {"frames", 8}};
  m.inputs[in_path] = sha256_file(in_path);
  m.outputs[out_path] = sha256_file(out_path);

  const std::string mpath = "/tmp/gtrack_manifest_probe.json";
  save_manifest(mpath, m);
  RunManifest back = load_manifest(mpath);
  CHECK(back.command == m.command);
  CHECK(back.version == m.version);
  CHECK(back.config == m.config);
  CHECK(back.inputs == m.inputs);
  CHECK(back.outputs == m.outputs);

  CHECK(verify_hashes(back.inputs).empty());
  CHECK(verify_hashes(back.outputs).empty());

  SUBCASE("tampering is reported per file") {
    write_text_file(out_path, "output bytes, edited");
    std::vector<std::string> bad = verify_hashes(back.outputs);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].find(out_path) != std::string::npos);
  }
  SUBCASE("missing files are reported") {
    std::remove(out_path.c_str());
    std::vector<std::string> bad = verify_hashes(back.outputs);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].find(out_path) != std::string::npos);
  }
  std::remove(in_path.c_str());
  std::remove(out_path.c_str());
  std::remove(mpath.c_str());
}
