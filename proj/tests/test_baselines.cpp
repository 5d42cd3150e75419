#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "gtrack/baselines.hpp"
#include "gtrack/metrics.hpp"
#include "gtrack/sim.hpp"

using namespace gtrack;

namespace {

Detection det_at(int frame, const Box& b, std::vector<double> feature = {},
                 double conf = 1.0) {
  Detection d;
  d.frame = frame;
  d.box = b;
  d.feature = std::move(feature);
  d.confidence = conf;
  return d;
}

DetectionClip clip_of(int frames, std::vector<Detection> dets) {
  DetectionClip c;
  c.frames = frames;
  c.per_frame.resize(frames);
  for (Detection& d : dets) {
    c.per_frame[d.frame - 1].push_back(std::move(d));
  }
  return c;
}

const Trajectory* track_with(const std::vector<Trajectory>& tracks, int frame,
                             const Box& b) {
  for (const Trajectory& t : tracks) {
    auto it = t.slices.find(frame);
    if (it != t.slices.end() && it->second == b) return &t;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("config validation and json round trip") {
  BaselineConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.rebirth = -1;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = BaselineConfig{};
  cfg.iou_gate = 1.5;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = BaselineConfig{};
  cfg.cos_gate = -2.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = BaselineConfig{};
  cfg.feature_momentum = 1.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = BaselineConfig{};
  cfg.min_track_length = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);

  for (BaselineConfig::Mode m :
       {BaselineConfig::Mode::kIou, BaselineConfig::Mode::kReid,
        BaselineConfig::Mode::kCombined}) {
    BaselineConfig out;
    out.mode = m;
    out.rebirth = 7;
    nlohmann::json j = out;
    BaselineConfig back = j.get<BaselineConfig>();
    CHECK(back.mode == m);
    CHECK(back.rebirth == 7);
  }
  nlohmann::json alias = {{"mode", "iou+reid"}};
  CHECK(alias.get<BaselineConfig>().mode == BaselineConfig::Mode::kCombined);
  nlohmann::json bad = {{"mode", "psychic"}};
  CHECK_THROWS_AS(bad.get<BaselineConfig>(), ConfigError);
}

TEST_CASE("static objects produce one track each") {
  const Box a(0, 0, 5, 5), b(20, 0, 25, 5);
  DetectionClip dets = clip_of(4, {det_at(1, a), det_at(2, a), det_at(3, a),
                                   det_at(4, a), det_at(1, b), det_at(2, b),
                                   det_at(3, b), det_at(4, b)});
  BaselineConfig cfg;
  std::vector<Trajectory> tracks = greedy_track(dets, cfg);
  REQUIRE(tracks.size() == 2);
  CHECK(tracks[0].length() == 4);
  CHECK(tracks[1].length() == 4);
  CHECK(track_with(tracks, 1, a) == track_with(tracks, 4, a));
}

TEST_CASE("rebirth window bridges gaps of exactly its length") {
  const Box a(0, 0, 5, 5);
  // present in frames 1,2 then 5,6: a 2-frame hole
  DetectionClip dets =
      clip_of(6, {det_at(1, a), det_at(2, a), det_at(5, a), det_at(6, a)});

  BaselineConfig cfg;
  cfg.rebirth = 30;
  CHECK(greedy_track(dets, cfg).size() == 1);
  cfg.rebirth = 2;
  std::vector<Trajectory> exact = greedy_track(dets, cfg);
  REQUIRE(exact.size() == 1);
  CHECK(exact[0].slices.count(3) == 0);  // the hole stays a hole
  CHECK(exact[0].length() == 4);
  cfg.rebirth = 1;
  CHECK(greedy_track(dets, cfg).size() == 2);
  cfg.rebirth = 0;
  CHECK(greedy_track(dets, cfg).size() == 2);
}

TEST_CASE("overlap gate splits jumping boxes") {
  DetectionClip dets = clip_of(
      2, {det_at(1, Box(0, 0, 5, 5)), det_at(2, Box(50, 0, 55, 5))});
  BaselineConfig cfg;
  CHECK(greedy_track(dets, cfg).size() == 2);

  // a mild drift stays within the gate
  DetectionClip drift = clip_of(
      2, {det_at(1, Box(0, 0, 5, 5)), det_at(2, Box(1, 0, 6, 5))});
  CHECK(greedy_track(drift, cfg).size() == 1);
}

TEST_CASE("appearance matching ignores feature magnitude") {
  // same direction, doubled length, boxes far apart
  DetectionClip dets =
      clip_of(2, {det_at(1, Box(0, 0, 5, 5), {1.0, 2.0, 0.0}),
                  det_at(2, Box(60, 0, 65, 5), {2.0, 4.0, 0.0})});
  BaselineConfig cfg;
  cfg.mode = BaselineConfig::Mode::kReid;
  CHECK(greedy_track(dets, cfg).size() == 1);
  cfg.mode = BaselineConfig::Mode::kIou;
  CHECK(greedy_track(dets, cfg).size() == 2);

  // orthogonal features fail the cosine gate
  DetectionClip ortho =
      clip_of(2, {det_at(1, Box(0, 0, 5, 5), {1.0, 0.0, 0.0}),
                  det_at(2, Box(0, 0, 5, 5), {0.0, 1.0, 0.0})});
  cfg.mode = BaselineConfig::Mode::kReid;
  CHECK(greedy_track(ortho, cfg).size() == 2);
}

TEST_CASE("combined mode links when either cue clears its gate") {
  // overlapping boxes, orthogonal features
  DetectionClip by_box =
      clip_of(2, {det_at(1, Box(0, 0, 5, 5), {1.0, 0.0}),
                  det_at(2, Box(0, 0, 5, 5), {0.0, 1.0})});
  // disjoint boxes, identical features
  DetectionClip by_feat =
      clip_of(2, {det_at(1, Box(0, 0, 5, 5), {1.0, 0.0}),
                  det_at(2, Box(60, 0, 65, 5), {1.0, 0.0})});
  BaselineConfig cfg;
  cfg.mode = BaselineConfig::Mode::kCombined;
  CHECK(greedy_track(by_box, cfg).size() == 1);
  CHECK(greedy_track(by_feat, cfg).size() == 1);
  cfg.mode = BaselineConfig::Mode::kReid;
  CHECK(greedy_track(by_box, cfg).size() == 2);
  cfg.mode = BaselineConfig::Mode::kIou;
  CHECK(greedy_track(by_feat, cfg).size() == 2);
}

TEST_CASE("appearance identities survive a position swap") {
  const Box left(0, 0, 10, 10), right(12, 0, 22, 10);
  std::vector<double> fa = {1.0, 0.0}, fb = {0.0, 1.0};
  DetectionClip dets = clip_of(2, {det_at(1, left, fa), det_at(1, right, fb),
                                   det_at(2, right, fa), det_at(2, left, fb)});
  BaselineConfig cfg;
  cfg.mode = BaselineConfig::Mode::kReid;
  std::vector<Trajectory> tracks = greedy_track(dets, cfg);
  REQUIRE(tracks.size() == 2);
  CHECK(track_with(tracks, 1, left) == track_with(tracks, 2, right));
  CHECK(track_with(tracks, 1, right) == track_with(tracks, 2, left));

  // the box cue prefers whatever sits where the object used to be
  cfg.mode = BaselineConfig::Mode::kIou;
  std::vector<Trajectory> swapped = greedy_track(dets, cfg);
  REQUIRE(swapped.size() == 2);
  CHECK(track_with(swapped, 1, left) == track_with(swapped, 2, left));
}

TEST_CASE("feature running mean controls drift tolerance") {
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<double> e0 = {1.0, 0.0}, mid = {r, r}, e1 = {0.0, 1.0};
  DetectionClip dets =
      clip_of(3, {det_at(1, Box(0, 0, 5, 5), e0),
                  det_at(2, Box(60, 0, 65, 5), mid),
                  det_at(3, Box(30, 30, 35, 35), e1)});
  BaselineConfig cfg;
  cfg.mode = BaselineConfig::Mode::kReid;
  cfg.cos_gate = 0.6;

  // with no memory the reference is always the latest feature
  cfg.feature_momentum = 0.0;
  CHECK(greedy_track(dets, cfg).size() == 1);
  // a sticky mean still sits near the first feature and rejects the turn
  cfg.feature_momentum = 0.9;
  CHECK(greedy_track(dets, cfg).size() == 2);
}

TEST_CASE("score threshold and minimum length filters") {
  const Box a(0, 0, 5, 5);
  DetectionClip dets =
      clip_of(3, {det_at(1, a, {}, 0.9), det_at(2, a, {}, 0.3),
                  det_at(3, a, {}, 0.7),
                  det_at(2, Box(50, 50, 55, 55), {}, 0.95)});
  BaselineConfig cfg;
  cfg.det_score_threshold = 0.5;
  std::vector<Trajectory> tracks = greedy_track(dets, cfg);
  REQUIRE(tracks.size() == 2);
  // the 0.3 detection was dropped before matching
  CHECK(tracks[0].length() == 2);
  CHECK(tracks[0].score == doctest::Approx(0.8).epsilon(1e-12));

  cfg.min_track_length = 2;
  std::vector<Trajectory> kept = greedy_track(dets, cfg);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].length() == 2);
}

TEST_CASE("slow clean scenes track perfectly by overlap alone") {
  ScenarioConfig sc;
  sc.num_objects = 3;
  sc.clip_len = 12;
  sc.max_speed = 1.0;
  sc.seed = 51;
  GroundTruthClip gt = generate_scenario(sc);
  DetectionClip dets = render_detections(gt, sc);

  BaselineConfig cfg;
  std::vector<Trajectory> tracks = greedy_track(dets, cfg);
  EvalPair pair{gt.trajectories, tracks};
  CHECK(clear_mot(pair).mota == 1.0);
  CHECK(idf1_score(pair).idf1 == 1.0);
}
