#include "gtrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace gtrack {

Box::Box(double x1_, double y1_, double x2_, double y2_)
    : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
  if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
        std::isfinite(y2))) {
    throw ContractError("Box: non-finite coordinate");
  }
  if (!(x2 > x1 && y2 > y1)) {
    throw ContractError("Box: requires x2 > x1 and y2 > y1, got [" +
                        std::to_string(x1) + ", " + std::to_string(y1) + ", " +
                        std::to_string(x2) + ", " + std::to_string(y2) + "]");
  }
}

namespace {

double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

}  // namespace

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return inter / uni;  // uni > 0 since boxes are non-degenerate
}

Box interpolate_box(const Box& b0, const Box& b1, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ContractError("interpolate_box: t must be in [0, 1], got " +
                        std::to_string(t));
  }
  const double s = 1.0 - t;
  return Box(s * b0.x1 + t * b1.x1, s * b0.y1 + t * b1.y1,
             s * b0.x2 + t * b1.x2, s * b0.y2 + t * b1.y2);
}

double trajectory_iou_3d(const Trajectory& a, const Trajectory& b) {
  double inter_sum = 0.0;
  double union_sum = 0.0;
  std::set<int> frames;
  for (const auto& [t, box] : a.slices) frames.insert(t);
  for (const auto& [t, box] : b.slices) frames.insert(t);
  for (int t : frames) {
    auto ia = a.slices.find(t);
    auto ib = b.slices.find(t);
    if (ia != a.slices.end() && ib != b.slices.end()) {
      const double inter = intersection_area(ia->second, ib->second);
      inter_sum += inter;
      union_sum += ia->second.area() + ib->second.area() - inter;
    } else if (ia != a.slices.end()) {
      union_sum += ia->second.area();
    } else {
      union_sum += ib->second.area();
    }
  }
  if (union_sum <= 0.0) return 0.0;  // both empty
  return inter_sum / union_sum;
}

}  // namespace gtrack
