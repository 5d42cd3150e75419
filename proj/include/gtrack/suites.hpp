#pragma once

#include <cstdint>
#include <vector>

#include "gtrack/baselines.hpp"
#include "gtrack/gradcheck.hpp"
#include "gtrack/metrics.hpp"
#include "gtrack/tracker.hpp"
#include "gtrack/training.hpp"

namespace gtrack {

// Fixed scenario families used by the ablation command and the acceptance
// harness. All three are pure functions of (count, seed).

// Occlusion-heavy clips: every object disappears at least once for 3 to 8
// frames and reappears on its old identity.
std::vector<ScenarioConfig> occlusion_suite(int count, std::uint64_t seed);

// Heavy appearance noise, light occlusion: separates learned feature
// comparison from raw dot products.
std::vector<ScenarioConfig> feature_noise_suite(int count,
                                                std::uint64_t seed);

// Clean scenarios (no noise, no misses, no false positives) for exactness
// checks such as oracle tracking.
std::vector<ScenarioConfig> clean_suite(int count, std::uint64_t seed,
                                        int max_gap);

// Small-model training setups whose scenario distribution matches the
// corresponding evaluation suite.
TrainConfig occlusion_train_config(std::uint64_t seed);
TrainConfig feature_noise_train_config(std::uint64_t seed);

// Inference defaults matched to the synthetic detector's confidence model.
InferenceConfig suite_inference_config(int window);

// Tracks every scenario with the backend and evaluates the pooled result.
MetricsReport evaluate_suite(const std::vector<ScenarioConfig>& suite,
                             AssociationBackend& backend,
                             const InferenceConfig& icfg);
MetricsReport evaluate_suite(const std::vector<ScenarioConfig>& suite,
                             const GtrHead& head,
                             const InferenceConfig& icfg);

// Greedy baseline on the identical rendered detections (thresholds and the
// length filter copied from icfg for a like-for-like comparison).
MetricsReport evaluate_suite_baseline(const std::vector<ScenarioConfig>& suite,
                                      BaselineConfig bcfg,
                                      const InferenceConfig& icfg);

struct WindowSweepRow {
  int window = 0;
  MetricsReport report;
};

std::vector<WindowSweepRow> window_sweep(
    const GtrHead& head, const std::vector<ScenarioConfig>& suite,
    const std::vector<int>& windows, const InferenceConfig& base);

std::string sweep_table(const std::vector<WindowSweepRow>& rows);

struct GradcheckCase {
  std::string name;
  GradCheckReport report;
};

// Central-difference validation of the whole trained path (head forward +
// association loss) on a fixed 3-frame clip with at most 12 detections and a
// 16-dim model, across the head's architectural variants.
std::vector<GradcheckCase> run_gradcheck_suite(double eps = 1e-5);

}  // namespace gtrack
