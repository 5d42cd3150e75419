#pragma once

#include <map>
#include <vector>

#include "gtrack/common.hpp"

namespace gtrack {

/// Axis-aligned rectangle in scene units, corner form. Degenerate boxes are
/// rejected at construction; all I/O converts other forms at the boundary.
struct Box {
  double x1, y1, x2, y2;

  Box(double x1_, double y1_, double x2_, double y2_);

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  bool operator==(const Box& o) const {
    return x1 == o.x1 && y1 == o.y1 && x2 == o.x2 && y2 == o.y2;
  }
};

/// Intersection-over-union in [0, 1]; symmetric.
double iou(const Box& a, const Box& b);

/// Per-coordinate linear blend; t must lie in [0, 1].
Box interpolate_box(const Box& b0, const Box& b1, double t);

/// Identity-labelled tube of boxes; a missing frame key is an empty slice.
struct Trajectory {
  int id = 0;
  std::map<int, Box> slices;
  int class_id = -1;
  std::vector<double> class_scores;  // empty when unknown
  double score = 1.0;                // ranking confidence for evaluation

  std::size_t length() const { return slices.size(); }
  int first_frame() const { return slices.empty() ? 0 : slices.begin()->first; }
  int last_frame() const { return slices.empty() ? 0 : slices.rbegin()->first; }
};

/// Spatio-temporal IoU: sum of per-frame intersection areas over sum of
/// per-frame union areas. A frame where only one side has a box contributes
/// that box's area to the union and nothing to the intersection.
double trajectory_iou_3d(const Trajectory& a, const Trajectory& b);

}  // namespace gtrack
