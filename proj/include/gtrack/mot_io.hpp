#pragma once

#include <string>
#include <vector>

#include "gtrack/detection.hpp"
#include "gtrack/geometry.hpp"

namespace gtrack {

// One CSV row: frame,id,bb_left,bb_top,bb_width,bb_height,conf,class,visibility
// id is -1 for detections that carry no identity.
struct MotRow {
  int frame = 1;
  int id = -1;
  double left = 0.0;
  double top = 0.0;
  double width = 1.0;
  double height = 1.0;
  double conf = 1.0;
  int class_id = 0;
  double visibility = 1.0;

  bool operator==(const MotRow&) const = default;
};

// Strict parse: every non-empty line must have exactly 9 fields, frame >= 1,
// width/height > 0. Throws ParseError naming the 1-based line number.
std::vector<MotRow> parse_mot_csv(const std::string& text);

// Canonical form: rows sorted by (frame, id), boxes at 2 decimals, scores at
// 6. parse(write(rows)) == canonicalized rows, byte-exact on re-write.
std::string write_mot_csv(std::vector<MotRow> rows);

// Rows with id >= 0 grouped into trajectories (score = mean conf, class from
// the first row). Duplicate (id, frame) pairs are rejected.
std::vector<Trajectory> rows_to_trajectories(const std::vector<MotRow>& rows);

// Every row becomes an identity-free detection; frame count is the max frame
// seen (or `frames` if larger). Features are left empty.
DetectionClip rows_to_detections(const std::vector<MotRow>& rows,
                                 int frames = 0);

std::vector<MotRow> trajectories_to_rows(
    const std::vector<Trajectory>& trajs);
std::vector<MotRow> detections_to_rows(const DetectionClip& clip);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace gtrack
