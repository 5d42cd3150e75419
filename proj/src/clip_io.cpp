#include "gtrack/clip_io.hpp"

#include "gtrack/common.hpp"
#include "gtrack/mot_io.hpp"

namespace gtrack {

namespace {

Box box_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw ParseError("box must be a 4-element array");
  }
  return Box(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
             j[3].get<double>());
}

}  // namespace

void to_json(nlohmann::json& j, const Box& b) {
  j = nlohmann::json::array({b.x1, b.y1, b.x2, b.y2});
}

void from_json(const nlohmann::json& j, Box& b) { b = box_from_json(j); }

void to_json(nlohmann::json& j, const Trajectory& t) {
  nlohmann::json slices = nlohmann::json::array();
  for (const auto& [frame, box] : t.slices) {
    slices.push_back(nlohmann::json::array({frame, nlohmann::json(box)}));
  }
  j = nlohmann::json{{"id", t.id},
                     {"class_id", t.class_id},
                     {"score", t.score},
                     {"class_scores", t.class_scores},
                     {"slices", std::move(slices)}};
}

void from_json(const nlohmann::json& j, Trajectory& t) {
  t = Trajectory{};
  t.id = j.at("id").get<int>();
  t.class_id = j.value("class_id", 0);
  t.score = j.value("score", 1.0);
  t.class_scores = j.value("class_scores", std::vector<double>{});
  for (const auto& entry : j.at("slices")) {
    if (!entry.is_array() || entry.size() != 2) {
      throw ParseError("trajectory slice must be [frame, box]");
    }
    const int frame = entry[0].get<int>();
    if (!t.slices.emplace(frame, box_from_json(entry[1])).second) {
      throw ParseError("duplicate frame " + std::to_string(frame) +
                       " in trajectory " + std::to_string(t.id));
    }
  }
}

void to_json(nlohmann::json& j, const Detection& d) {
  j = nlohmann::json{{"frame", d.frame},
                     {"box", d.box},
                     {"confidence", d.confidence},
                     {"feature", d.feature},
                     {"class_scores", d.class_scores},
                     {"class_id", d.class_id},
                     {"source_id", d.source_id}};
}

void from_json(const nlohmann::json& j, Detection& d) {
  d = Detection{};
  d.frame = j.at("frame").get<int>();
  d.box = box_from_json(j.at("box"));
  d.confidence = j.at("confidence").get<double>();
  d.feature = j.value("feature", std::vector<double>{});
  d.class_scores = j.value("class_scores", std::vector<double>{});
  d.class_id = j.value("class_id", 0);
  d.source_id = j.value("source_id", -1);
}

void to_json(nlohmann::json& j, const DetectionClip& c) {
  j = nlohmann::json{{"frames", c.frames}, {"per_frame", c.per_frame}};
}

void from_json(const nlohmann::json& j, DetectionClip& c) {
  c = DetectionClip{};
  c.frames = j.at("frames").get<int>();
  c.per_frame =
      j.at("per_frame").get<std::vector<std::vector<Detection>>>();
  if (static_cast<int>(c.per_frame.size()) != c.frames) {
    throw ParseError("detection clip: per_frame size does not match frames");
  }
  for (std::size_t t = 0; t < c.per_frame.size(); ++t) {
    for (const Detection& d : c.per_frame[t]) {
      if (d.frame != static_cast<int>(t) + 1) {
        throw ParseError("detection clip: frame field mismatch at frame " +
                         std::to_string(t + 1));
      }
    }
  }
}

void to_json(nlohmann::json& j, const GroundTruthClip& c) {
  j = nlohmann::json{{"frames", c.frames},
                     {"trajectories", c.trajectories}};
}

void from_json(const nlohmann::json& j, GroundTruthClip& c) {
  c = GroundTruthClip{};
  c.frames = j.at("frames").get<int>();
  c.trajectories = j.at("trajectories").get<std::vector<Trajectory>>();
}

namespace {

nlohmann::json load_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid JSON in " + path);
  return j;
}

}  // namespace

void save_detections(const std::string& path, const DetectionClip& clip) {
  write_text_file(path, nlohmann::json(clip).dump(1) + "\n");
}

DetectionClip load_detections(const std::string& path) {
  return load_json_file(path).get<DetectionClip>();
}

void save_ground_truth(const std::string& path, const GroundTruthClip& clip) {
  write_text_file(path, nlohmann::json(clip).dump(1) + "\n");
}

GroundTruthClip load_ground_truth(const std::string& path) {
  return load_json_file(path).get<GroundTruthClip>();
}

}  // namespace gtrack
