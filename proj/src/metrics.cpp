#include "gtrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "gtrack/hungarian.hpp"

namespace gtrack {

namespace {

constexpr double kBlocked = 1e6;
constexpr double kEps = 2.220446049250313e-16;

// frame -> list of (trajectory index, box)
using FrameIndex = std::map<int, std::vector<std::pair<int, Box>>>;

FrameIndex index_frames(const std::vector<Trajectory>& trajs) {
  FrameIndex idx;
  for (int i = 0; i < static_cast<int>(trajs.size()); ++i) {
    for (const auto& [frame, box] : trajs[i].slices) {
      idx[frame].emplace_back(i, box);
    }
  }
  return idx;
}

std::set<int> all_frames(const FrameIndex& a, const FrameIndex& b) {
  std::set<int> frames;
  for (const auto& [f, _] : a) frames.insert(f);
  for (const auto& [f, _] : b) frames.insert(f);
  return frames;
}

int count_dets(const std::vector<Trajectory>& trajs) {
  int n = 0;
  for (const auto& t : trajs) n += static_cast<int>(t.slices.size());
  return n;
}

}  // namespace

ClearMotResult clear_mot(const EvalPair& pair, double iou_threshold) {
  ClearMotResult res;
  const FrameIndex gt_idx = index_frames(pair.gt);
  const FrameIndex pr_idx = index_frames(pair.pred);

  std::map<int, int> prev_match;  // gt traj -> pred traj matched at t-1
  std::map<int, int> last_known;  // gt traj -> most recent pred partner

  for (int frame : all_frames(gt_idx, pr_idx)) {
    static const std::vector<std::pair<int, Box>> kEmpty;
    const auto& gts = gt_idx.count(frame) ? gt_idx.at(frame) : kEmpty;
    const auto& prs = pr_idx.count(frame) ? pr_idx.at(frame) : kEmpty;
    res.gt_total += static_cast<int>(gts.size());

    std::map<int, int> cur_match;
    std::vector<char> gt_used(gts.size(), 0), pr_used(prs.size(), 0);

    // Keep yesterday's pairs alive while they still overlap.
    for (std::size_t g = 0; g < gts.size(); ++g) {
      auto it = prev_match.find(gts[g].first);
      if (it == prev_match.end()) continue;
      for (std::size_t p = 0; p < prs.size(); ++p) {
        if (pr_used[p] || prs[p].first != it->second) continue;
        if (iou(gts[g].second, prs[p].second) >= iou_threshold) {
          cur_match[gts[g].first] = prs[p].first;
          gt_used[g] = 1;
          pr_used[p] = 1;
          ++res.matches;
        }
        break;
      }
    }

    std::vector<int> free_gt, free_pr;
    for (std::size_t g = 0; g < gts.size(); ++g)
      if (!gt_used[g]) free_gt.push_back(static_cast<int>(g));
    for (std::size_t p = 0; p < prs.size(); ++p)
      if (!pr_used[p]) free_pr.push_back(static_cast<int>(p));

    if (!free_gt.empty() && !free_pr.empty()) {
      const int rows = static_cast<int>(free_gt.size());
      const int cols = static_cast<int>(free_pr.size());
      std::vector<double> cost(static_cast<std::size_t>(rows) * cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          const double v =
              iou(gts[free_gt[r]].second, prs[free_pr[c]].second);
          cost[static_cast<std::size_t>(r) * cols + c] =
              v >= iou_threshold ? 1.0 - v : kBlocked;
        }
      }
      AssignmentResult ar = solve_assignment(cost, rows, cols);
      for (int r = 0; r < rows; ++r) {
        const int c = ar.row_to_col[r];
        if (c < 0) continue;
        if (cost[static_cast<std::size_t>(r) * cols + c] >= kBlocked / 2)
          continue;
        cur_match[gts[free_gt[r]].first] = prs[free_pr[c]].first;
        gt_used[free_gt[r]] = 1;
        pr_used[free_pr[c]] = 1;
        ++res.matches;
      }
    }

    for (const auto& [g, p] : cur_match) {
      auto it = last_known.find(g);
      if (it != last_known.end() && it->second != p) ++res.idsw;
      last_known[g] = p;
    }
    for (std::size_t g = 0; g < gts.size(); ++g)
      if (!gt_used[g]) ++res.fn;
    for (std::size_t p = 0; p < prs.size(); ++p)
      if (!pr_used[p]) ++res.fp;
    prev_match = std::move(cur_match);
  }

  if (res.gt_total > 0) {
    res.valid = true;
    res.mota = 1.0 - static_cast<double>(res.fp + res.fn + res.idsw) /
                         static_cast<double>(res.gt_total);
  }
  return res;
}

IdfResult idf1_score(const EvalPair& pair, double iou_threshold) {
  IdfResult res;
  res.gt_total = count_dets(pair.gt);
  res.pred_total = count_dets(pair.pred);
  if (res.gt_total + res.pred_total == 0) return res;

  const int n_gt = static_cast<int>(pair.gt.size());
  const int n_pr = static_cast<int>(pair.pred.size());
  int max_overlap = 0;
  std::vector<int> overlap;
  if (n_gt > 0 && n_pr > 0) {
    overlap.assign(static_cast<std::size_t>(n_gt) * n_pr, 0);
    for (int i = 0; i < n_gt; ++i) {
      for (int j = 0; j < n_pr; ++j) {
        int count = 0;
        for (const auto& [frame, gbox] : pair.gt[i].slices) {
          auto it = pair.pred[j].slices.find(frame);
          if (it != pair.pred[j].slices.end() &&
              iou(gbox, it->second) >= iou_threshold) {
            ++count;
          }
        }
        overlap[static_cast<std::size_t>(i) * n_pr + j] = count;
        max_overlap = std::max(max_overlap, count);
      }
    }
    // Maximize total overlap; shifting every entry keeps the argmin since
    // all complete assignments have the same size.
    std::vector<double> cost(overlap.size());
    for (std::size_t k = 0; k < overlap.size(); ++k) {
      cost[k] = static_cast<double>(max_overlap - overlap[k]);
    }
    AssignmentResult ar = solve_assignment(cost, n_gt, n_pr);
    for (int i = 0; i < n_gt; ++i) {
      const int j = ar.row_to_col[i];
      if (j >= 0) res.idtp += overlap[static_cast<std::size_t>(i) * n_pr + j];
    }
  }
  res.idp = res.pred_total > 0
                ? static_cast<double>(res.idtp) / res.pred_total
                : 0.0;
  res.idr =
      res.gt_total > 0 ? static_cast<double>(res.idtp) / res.gt_total : 0.0;
  res.idf1 = 2.0 * static_cast<double>(res.idtp) /
             static_cast<double>(res.gt_total + res.pred_total);
  return res;
}

HotaResult hota(const EvalPair& pair) {
  HotaResult res;
  for (int a = 1; a <= 19; ++a) res.alphas.push_back(0.05 * a);
  const int n_alpha = static_cast<int>(res.alphas.size());
  res.hota_alpha.assign(n_alpha, 0.0);
  res.deta_alpha.assign(n_alpha, 0.0);
  res.assa_alpha.assign(n_alpha, 0.0);

  const int n_gt = static_cast<int>(pair.gt.size());
  const int n_pr = static_cast<int>(pair.pred.size());
  const FrameIndex gt_idx = index_frames(pair.gt);
  const FrameIndex pr_idx = index_frames(pair.pred);

  std::vector<double> gt_count(n_gt, 0.0), pr_count(n_pr, 0.0);
  for (int i = 0; i < n_gt; ++i)
    gt_count[i] = static_cast<double>(pair.gt[i].slices.size());
  for (int j = 0; j < n_pr; ++j)
    pr_count[j] = static_cast<double>(pair.pred[j].slices.size());

  // Pass 1: accumulate soft per-pair match evidence.
  std::vector<double> potential(static_cast<std::size_t>(n_gt) * n_pr, 0.0);
  for (int frame : all_frames(gt_idx, pr_idx)) {
    if (!gt_idx.count(frame) || !pr_idx.count(frame)) continue;
    const auto& gts = gt_idx.at(frame);
    const auto& prs = pr_idx.at(frame);
    const std::size_t rows = gts.size(), cols = prs.size();
    std::vector<double> sim(rows * cols);
    std::vector<double> rowsum(rows, 0.0), colsum(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double s = iou(gts[r].second, prs[c].second);
        sim[r * cols + c] = s;
        rowsum[r] += s;
        colsum[c] += s;
      }
    }
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double s = sim[r * cols + c];
        const double denom = rowsum[r] + colsum[c] - s;
        if (denom > kEps) {
          potential[static_cast<std::size_t>(gts[r].first) * n_pr +
                    prs[c].first] += s / denom;
        }
      }
    }
  }

  std::vector<double> global_align(static_cast<std::size_t>(n_gt) * n_pr,
                                   0.0);
  for (int i = 0; i < n_gt; ++i) {
    for (int j = 0; j < n_pr; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * n_pr + j;
      const double denom = gt_count[i] + pr_count[j] - potential[k];
      global_align[k] = denom > kEps ? potential[k] / denom : 0.0;
    }
  }

  // Pass 2: per-frame matching shared across thresholds.
  std::vector<double> tp(n_alpha, 0.0), fp(n_alpha, 0.0), fn(n_alpha, 0.0);
  std::vector<std::vector<double>> match_count(
      n_alpha,
      std::vector<double>(static_cast<std::size_t>(n_gt) * n_pr, 0.0));
  for (int frame : all_frames(gt_idx, pr_idx)) {
    const bool has_gt = gt_idx.count(frame) > 0;
    const bool has_pr = pr_idx.count(frame) > 0;
    if (!has_gt) {
      const double nfp = static_cast<double>(pr_idx.at(frame).size());
      for (int a = 0; a < n_alpha; ++a) fp[a] += nfp;
      continue;
    }
    if (!has_pr) {
      const double nfn = static_cast<double>(gt_idx.at(frame).size());
      for (int a = 0; a < n_alpha; ++a) fn[a] += nfn;
      continue;
    }
    const auto& gts = gt_idx.at(frame);
    const auto& prs = pr_idx.at(frame);
    const int rows = static_cast<int>(gts.size());
    const int cols = static_cast<int>(prs.size());
    std::vector<double> sim(static_cast<std::size_t>(rows) * cols);
    std::vector<double> cost(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const std::size_t k = static_cast<std::size_t>(r) * cols + c;
        sim[k] = iou(gts[r].second, prs[c].second);
        cost[k] =
            1.0 - global_align[static_cast<std::size_t>(gts[r].first) * n_pr +
                               prs[c].first] *
                      sim[k];
      }
    }
    AssignmentResult ar = solve_assignment(cost, rows, cols);
    for (int a = 0; a < n_alpha; ++a) {
      int num = 0;
      for (int r = 0; r < rows; ++r) {
        const int c = ar.row_to_col[r];
        if (c < 0) continue;
        if (sim[static_cast<std::size_t>(r) * cols + c] >=
            res.alphas[a] - kEps) {
          ++num;
          match_count[a][static_cast<std::size_t>(gts[r].first) * n_pr +
                         prs[c].first] += 1.0;
        }
      }
      tp[a] += num;
      fn[a] += rows - num;
      fp[a] += cols - num;
    }
  }

  for (int a = 0; a < n_alpha; ++a) {
    double ass_sum = 0.0;
    for (int i = 0; i < n_gt; ++i) {
      for (int j = 0; j < n_pr; ++j) {
        const std::size_t k = static_cast<std::size_t>(i) * n_pr + j;
        const double mc = match_count[a][k];
        if (mc <= 0.0) continue;
        ass_sum += mc * (mc / std::max(1.0, gt_count[i] + pr_count[j] - mc));
      }
    }
    res.assa_alpha[a] = ass_sum / std::max(1.0, tp[a]);
    res.deta_alpha[a] = tp[a] / std::max(1.0, tp[a] + fn[a] + fp[a]);
    res.hota_alpha[a] = std::sqrt(res.deta_alpha[a] * res.assa_alpha[a]);
  }
  for (int a = 0; a < n_alpha; ++a) {
    res.hota += res.hota_alpha[a];
    res.deta += res.deta_alpha[a];
    res.assa += res.assa_alpha[a];
  }
  res.hota /= n_alpha;
  res.deta /= n_alpha;
  res.assa /= n_alpha;
  return res;
}

TrackMapResult track_map(const EvalPair& pair, double iou3d_threshold) {
  TrackMapResult res;
  std::set<int> classes;
  for (const auto& t : pair.gt) classes.insert(t.class_id);
  if (classes.empty()) return res;

  for (int cls : classes) {
    std::vector<const Trajectory*> gts, prs;
    for (const auto& t : pair.gt)
      if (t.class_id == cls) gts.push_back(&t);
    for (const auto& t : pair.pred)
      if (t.class_id == cls) prs.push_back(&t);
    std::sort(prs.begin(), prs.end(),
              [](const Trajectory* a, const Trajectory* b) {
                if (a->score != b->score) return a->score > b->score;
                return a->id < b->id;
              });

    std::vector<char> gt_taken(gts.size(), 0);
    std::vector<char> is_tp;
    for (const Trajectory* p : prs) {
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (gt_taken[g]) continue;
        const double v = trajectory_iou_3d(*gts[g], *p);
        if (v > best_iou) {
          best_iou = v;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0 && best_iou >= iou3d_threshold) {
        gt_taken[best] = 1;
        is_tp.push_back(1);
      } else {
        is_tp.push_back(0);
      }
    }

    const double n_gt = static_cast<double>(gts.size());
    std::vector<double> recall, precision;
    int tp = 0;
    for (std::size_t k = 0; k < is_tp.size(); ++k) {
      if (is_tp[k]) ++tp;
      recall.push_back(static_cast<double>(tp) / n_gt);
      precision.push_back(static_cast<double>(tp) /
                          static_cast<double>(k + 1));
    }
    double ap = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double r = static_cast<double>(i) / 100.0;
      double best = 0.0;
      for (std::size_t k = 0; k < recall.size(); ++k) {
        if (recall[k] >= r - 1e-12) best = std::max(best, precision[k]);
      }
      ap += best;
    }
    ap /= 101.0;
    res.per_class[cls] = ap;
  }

  double sum = 0.0;
  for (const auto& [_, ap] : res.per_class) sum += ap;
  res.map = sum / static_cast<double>(res.per_class.size());
  res.valid = true;
  return res;
}

MetricsReport evaluate(const EvalPair& pair) {
  MetricsReport r;
  const ClearMotResult cm = clear_mot(pair);
  const IdfResult idf = idf1_score(pair);
  const HotaResult h = hota(pair);
  const TrackMapResult tm = track_map(pair);
  r.mota = cm.mota;
  r.fp = cm.fp;
  r.fn = cm.fn;
  r.idsw = cm.idsw;
  r.gt_total = cm.gt_total;
  r.valid = cm.valid;
  r.idf1 = idf.idf1;
  r.hota = h.hota;
  r.deta = h.deta;
  r.assa = h.assa;
  r.track_map = tm.map;
  return r;
}

std::string report_table(const MetricsReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%-10s %8s %8s %8s %8s %8s %6s %6s %6s\n"
                "%-10s %8.4f %8.4f %8.4f %8.4f %8.4f %6d %6d %6d\n",
                "metric", "MOTA", "IDF1", "HOTA", "DetA", "AssA", "FP", "FN",
                "IDSW", "value", r.mota, r.idf1, r.hota, r.deta, r.assa, r.fp,
                r.fn, r.idsw);
  std::string out(buf);
  if (!std::isnan(r.track_map)) {
    std::snprintf(buf, sizeof(buf), "track mAP  %8.4f\n", r.track_map);
    out += buf;
  }
  return out;
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json{{"mota", r.mota},     {"idf1", r.idf1},
                     {"hota", r.hota},     {"deta", r.deta},
                     {"assa", r.assa},     {"track_map", r.track_map},
                     {"fp", r.fp},         {"fn", r.fn},
                     {"idsw", r.idsw},     {"gt_total", r.gt_total},
                     {"valid", r.valid}};
  if (std::isnan(r.mota)) j["mota"] = nullptr;
  if (std::isnan(r.track_map)) j["track_map"] = nullptr;
}

EvalPair merge_pairs(const std::vector<EvalPair>& pairs) {
  EvalPair out;
  int frame_base = 0;  // highest frame already used in the merged timeline
  int next_gt_id = 1, next_pred_id = 1;
  for (const EvalPair& p : pairs) {
    int lo = 0, hi = 0;
    bool any = false;
    for (const auto* side : {&p.gt, &p.pred}) {
      for (const auto& t : *side) {
        if (t.slices.empty()) continue;
        const int f0 = t.slices.begin()->first;
        const int f1 = t.slices.rbegin()->first;
        if (!any) {
          lo = f0;
          hi = f1;
          any = true;
        } else {
          lo = std::min(lo, f0);
          hi = std::max(hi, f1);
        }
      }
    }
    if (!any) continue;
    const int shift = frame_base + 6 - lo;  // 5 empty frames between runs
    for (const auto& t : p.gt) {
      Trajectory nt = t;
      nt.id = next_gt_id++;
      nt.slices.clear();
      for (const auto& [f, b] : t.slices) nt.slices.emplace(f + shift, b);
      out.gt.push_back(std::move(nt));
    }
    for (const auto& t : p.pred) {
      Trajectory nt = t;
      nt.id = next_pred_id++;
      nt.slices.clear();
      for (const auto& [f, b] : t.slices) nt.slices.emplace(f + shift, b);
      out.pred.push_back(std::move(nt));
    }
    frame_base = hi + shift;
  }
  return out;
}

}  // namespace gtrack
