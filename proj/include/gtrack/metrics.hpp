#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "gtrack/geometry.hpp"
#include "nlohmann/json.hpp"

namespace gtrack {

// One evaluation unit: ground-truth trajectories vs predicted trajectories
// over a shared frame range.
struct EvalPair {
  std::vector<Trajectory> gt;
  std::vector<Trajectory> pred;
};

struct ClearMotResult {
  double mota = std::numeric_limits<double>::quiet_NaN();
  int fp = 0;
  int fn = 0;
  int idsw = 0;
  int matches = 0;
  int gt_total = 0;
  bool valid = false;  // false when there are no ground-truth boxes
};

// Frame-by-frame matching with carry-over: a pair matched at t-1 stays
// matched at t while its overlap clears the threshold; leftovers go through
// a minimum-cost assignment on 1-IoU. An identity switch is counted when a
// ground-truth object re-associates to a different track than its last
// known partner, including across gaps.
ClearMotResult clear_mot(const EvalPair& pair, double iou_threshold = 0.5);

struct IdfResult {
  double idf1 = 0.0;
  double idp = 0.0;
  double idr = 0.0;
  int idtp = 0;
  int gt_total = 0;
  int pred_total = 0;
};

// Identity metrics via one global bipartite matching between trajectories,
// maximizing the number of frames where the paired boxes overlap at or
// above the threshold.
IdfResult idf1_score(const EvalPair& pair, double iou_threshold = 0.5);

struct HotaResult {
  double hota = 0.0;
  double deta = 0.0;
  double assa = 0.0;
  std::vector<double> alphas;
  std::vector<double> hota_alpha;
  std::vector<double> deta_alpha;
  std::vector<double> assa_alpha;
};

// Higher-order tracking accuracy averaged over 19 localization thresholds
// (0.05 to 0.95). Per-frame matching maximizes global track alignment times
// box overlap, shared across thresholds; each threshold then keeps the
// matches whose overlap clears it.
HotaResult hota(const EvalPair& pair);

struct TrackMapResult {
  double map = std::numeric_limits<double>::quiet_NaN();
  std::map<int, double> per_class;
  bool valid = false;  // false when no class has ground truth
};

// Class-aware track-level average precision: predictions ranked by score,
// greedily matched to unclaimed ground truth by spatio-temporal IoU, and
// the precision/recall curve integrated at 101 recall points.
TrackMapResult track_map(const EvalPair& pair, double iou3d_threshold = 0.5);

struct MetricsReport {
  double mota = std::numeric_limits<double>::quiet_NaN();
  double idf1 = 0.0;
  double hota = 0.0;
  double deta = 0.0;
  double assa = 0.0;
  double track_map = std::numeric_limits<double>::quiet_NaN();
  int fp = 0;
  int fn = 0;
  int idsw = 0;
  int gt_total = 0;
  bool valid = false;
};

MetricsReport evaluate(const EvalPair& pair);
std::string report_table(const MetricsReport& r);
void to_json(nlohmann::json& j, const MetricsReport& r);

// Concatenates several sequences into one disjoint pair: frames are shifted
// so sequences never touch (5 empty frames between them) and ids are
// renumbered so no track crosses a boundary. Evaluating the merged pair
// equals pooling the per-sequence error counts.
EvalPair merge_pairs(const std::vector<EvalPair>& pairs);

}  // namespace gtrack
