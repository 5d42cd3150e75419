#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtrack/optim.hpp"
#include "gtrack/tensor.hpp"

namespace gtrack {

struct GtrConfig {
  int dim = 256;    // feature/model width D
  int heads = 8;
  int ffn_mult = 2; // feed-forward inner dim = ffn_mult * dim
  // Ablations. The default head is: encoder (self-attention + FFN, residual),
  // decoder (cross-attention + FFN, residual), one score projection on the
  // queries scored against the encoded features — 10 linear layers.
  bool dot_product_only = false;      // score = q·f/sqrt(D), no layers at all
  bool decoder_self_attention = false;
  bool positional_embedding = false;  // learned per-frame embedding on input
  int encoder_layers = 1;
  int decoder_layers = 1;
  int max_frames = 64;  // positional table size; window length must fit
  unsigned long long init_seed = 1;
};

void validate(const GtrConfig& cfg);
void to_json(nlohmann::json& j, const GtrConfig& cfg);
void from_json(const nlohmann::json& j, GtrConfig& cfg);

/// Column layout of a window's detections: frame t (0-based within the
/// window) owns columns [offset(t), offset(t) + count(t)).
class FramePartition {
 public:
  FramePartition() = default;
  static FramePartition from_counts(std::vector<int> counts);

  int frames() const { return static_cast<int>(counts_.size()); }
  int total() const { return offsets_.empty() ? 0 : offsets_.back(); }
  int count(int t) const;
  int offset(int t) const;
  int column(int t, int i) const;  // flat column of detection i in frame t
  const std::vector<int>& counts() const { return counts_; }
  std::vector<int> frame_of_each() const;  // per-column frame index

  bool operator==(const FramePartition& o) const {
    return counts_ == o.counts_;
  }

 private:
  std::vector<int> counts_;
  std::vector<int> offsets_;  // size frames()+1, prefix sums
};

/// Raw association scores G (queries x window detections) plus the frame
/// partition of the columns. The empty-association logit is not a column;
/// it is fixed at 0 inside the per-frame softmax.
struct AssociationScores {
  Tensor g;
  FramePartition part;
  int queries() const { return g.defined() ? g.rows() : 0; }
};

/// Per-query, per-frame probabilities over {none, detections of the frame}.
/// p[q][t] has size count(t) + 1; entry 0 is the no-association probability.
struct AssociationDistribution {
  FramePartition part;
  std::vector<std::vector<std::vector<double>>> p;
  int queries() const { return static_cast<int>(p.size()); }
};

/// Per-frame softmax over [0 (empty), g of the frame's columns].
AssociationDistribution association_distribution(const AssociationScores& s);
AssociationDistribution association_distribution_raw(
    const std::vector<double>& g, int queries, const FramePartition& part);

/// Sum over frames of log P(alpha_t | query k); alpha_t is a detection index
/// within frame t or -1 for empty.
double trajectory_loglik(const AssociationDistribution& dist,
                         const std::vector<int>& alpha, int k);

/// Encoder/decoder association head. Queries and window features share the
/// model width; features go in raw, queries are raw feature rows.
class GtrHead {
 public:
  explicit GtrHead(GtrConfig cfg);

  const GtrConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  int linear_layer_count() const;

  // Self-attention + feed-forward with residuals over all window rows; no
  // positional information unless the ablation flag enables it.
  Tensor encode(const Tensor& f, const FramePartition& part) const;
  // Queries cross-attend the encoded window, feed-forward, then one score
  // projection against the encoded rows, scaled by 1/sqrt(D).
  AssociationScores decode(const Tensor& q, const Tensor& f_enc,
                           const FramePartition& part) const;
  // encode + decode with queries taken from the given rows of f.
  AssociationScores forward(const Tensor& f, const FramePartition& part,
                            const std::vector<int>& query_rows) const;

  void save(const std::string& path) const;
  static GtrHead load(const std::string& path);

 private:
  struct FfnParams {
    Tensor w1, b1, w2, b2;
  };
  struct EncoderLayer {
    AttentionParams att;
    FfnParams ffn;
  };
  struct DecoderLayer {
    AttentionParams self_att;   // only when decoder_self_attention
    AttentionParams cross_att;  // value projection shared with key
    FfnParams ffn;
  };

  Tensor apply_ffn(const Tensor& x, const FfnParams& p) const;

  GtrConfig cfg_;
  ParamStore params_;
  std::vector<EncoderLayer> enc_;
  std::vector<DecoderLayer> dec_;
  Tensor score_w_, score_b_;  // zero-initialized: untrained G is all zeros
  Tensor pos_table_;
};

}  // namespace gtrack
