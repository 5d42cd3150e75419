#include "gtrack/mot_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "gtrack/common.hpp"

namespace gtrack {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

int parse_int(const std::string& s, int line, const char* name) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    fail(line, std::string("bad integer for ") + name + ": '" + s + "'");
  }
  if (pos != s.size()) {
    fail(line, std::string("trailing characters in ") + name + ": '" + s +
                   "'");
  }
  return v;
}

double parse_real(const std::string& s, int line, const char* name) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail(line, std::string("bad number for ") + name + ": '" + s + "'");
  }
  if (pos != s.size()) {
    fail(line, std::string("trailing characters in ") + name + ": '" + s +
                   "'");
  }
  if (!std::isfinite(v)) {
    fail(line, std::string("non-finite value for ") + name);
  }
  return v;
}

}  // namespace

std::vector<MotRow> parse_mot_csv(const std::string& text) {
  std::vector<MotRow> rows;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != 9) {
      fail(lineno, "expected 9 fields, got " + std::to_string(f.size()));
    }
    MotRow r;
    r.frame = parse_int(f[0], lineno, "frame");
    r.id = parse_int(f[1], lineno, "id");
    r.left = parse_real(f[2], lineno, "bb_left");
    r.top = parse_real(f[3], lineno, "bb_top");
    r.width = parse_real(f[4], lineno, "bb_width");
    r.height = parse_real(f[5], lineno, "bb_height");
    r.conf = parse_real(f[6], lineno, "conf");
    r.class_id = parse_int(f[7], lineno, "class");
    r.visibility = parse_real(f[8], lineno, "visibility");
    if (r.frame < 1) fail(lineno, "frame must be >= 1");
    if (r.width <= 0.0) fail(lineno, "bb_width must be > 0");
    if (r.height <= 0.0) fail(lineno, "bb_height must be > 0");
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MotRow& a, const MotRow& b) {
                     if (a.frame != b.frame) return a.frame < b.frame;
                     return a.id < b.id;
                   });
  return rows;
}

std::string write_mot_csv(std::vector<MotRow> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MotRow& a, const MotRow& b) {
                     if (a.frame != b.frame) return a.frame < b.frame;
                     return a.id < b.id;
                   });
  std::string out;
  char buf[256];
  for (const MotRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.2f,%.2f,%.2f,%.2f,%.6f,%d,%.6f\n",
                  r.frame, r.id, r.left, r.top, r.width, r.height, r.conf,
                  r.class_id, r.visibility);
    out += buf;
  }
  return out;
}

std::vector<Trajectory> rows_to_trajectories(const std::vector<MotRow>& rows) {
  std::map<int, Trajectory> by_id;
  std::map<int, double> conf_sum;
  for (const MotRow& r : rows) {
    if (r.id < 0) continue;
    auto [it, fresh] = by_id.try_emplace(r.id);
    if (fresh) {
      it->second.id = r.id;
      it->second.class_id = r.class_id;
    }
    const Box box(r.left, r.top, r.left + r.width, r.top + r.height);
    if (!it->second.slices.emplace(r.frame, box).second) {
      throw ParseError("duplicate frame " + std::to_string(r.frame) +
                       " for id " + std::to_string(r.id));
    }
    conf_sum[r.id] += r.conf;
  }
  std::vector<Trajectory> out;
  out.reserve(by_id.size());
  for (auto& [id, traj] : by_id) {
    traj.score = conf_sum[id] / static_cast<double>(traj.slices.size());
    out.push_back(std::move(traj));
  }
  return out;
}

DetectionClip rows_to_detections(const std::vector<MotRow>& rows,
                                 int frames) {
  int max_frame = frames;
  for (const MotRow& r : rows) max_frame = std::max(max_frame, r.frame);
  DetectionClip clip;
  clip.frames = max_frame;
  clip.per_frame.assign(static_cast<std::size_t>(max_frame), {});
  for (const MotRow& r : rows) {
    Detection d;
    d.frame = r.frame;
    d.box = Box(r.left, r.top, r.left + r.width, r.top + r.height);
    d.confidence = r.conf;
    d.class_id = r.class_id;
    clip.per_frame[static_cast<std::size_t>(r.frame - 1)].push_back(
        std::move(d));
  }
  return clip;
}

std::vector<MotRow> trajectories_to_rows(
    const std::vector<Trajectory>& trajs) {
  std::vector<MotRow> rows;
  for (const Trajectory& t : trajs) {
    for (const auto& [frame, box] : t.slices) {
      MotRow r;
      r.frame = frame;
      r.id = t.id;
      r.left = box.x1;
      r.top = box.y1;
      r.width = box.width();
      r.height = box.height();
      r.conf = t.score;
      r.class_id = t.class_id;
      r.visibility = 1.0;
      rows.push_back(r);
    }
  }
  return rows;
}

std::vector<MotRow> detections_to_rows(const DetectionClip& clip) {
  std::vector<MotRow> rows;
  for (const auto& frame : clip.per_frame) {
    for (const Detection& d : frame) {
      MotRow r;
      r.frame = d.frame;
      r.id = -1;
      r.left = d.box.x1;
      r.top = d.box.y1;
      r.width = d.box.width();
      r.height = d.box.height();
      r.conf = d.confidence;
      r.class_id = d.class_id;
      r.visibility = 1.0;
      rows.push_back(r);
    }
  }
  return rows;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << text;
  if (!out) throw Error("failed writing file: " + path);
}

}  // namespace gtrack
