#include "gtrack/gtr_head.hpp"

#include <cmath>

#include "gtrack/checkpoint.hpp"
#include "gtrack/rng.hpp"

namespace gtrack {

void validate(const GtrConfig& cfg) {
  if (cfg.dim < 1) throw ConfigError("gtr: dim must be >= 1");
  if (cfg.heads < 1) throw ConfigError("gtr: heads must be >= 1");
  if (cfg.dim % cfg.heads != 0) {
    throw ConfigError("gtr: dim " + std::to_string(cfg.dim) +
                      " not divisible by heads " + std::to_string(cfg.heads));
  }
  if (cfg.ffn_mult < 1) throw ConfigError("gtr: ffn_mult must be >= 1");
  if (cfg.encoder_layers < 0 || cfg.decoder_layers < 0) {
    throw ConfigError("gtr: layer counts must be >= 0");
  }
  if (cfg.positional_embedding && cfg.max_frames < 1) {
    throw ConfigError("gtr: positional embedding needs max_frames >= 1");
  }
}

void to_json(nlohmann::json& j, const GtrConfig& cfg) {
  j = nlohmann::json{{"dim", cfg.dim},
                     {"heads", cfg.heads},
                     {"ffn_mult", cfg.ffn_mult},
                     {"dot_product_only", cfg.dot_product_only},
                     {"decoder_self_attention", cfg.decoder_self_attention},
                     {"positional_embedding", cfg.positional_embedding},
                     {"encoder_layers", cfg.encoder_layers},
                     {"decoder_layers", cfg.decoder_layers},
                     {"max_frames", cfg.max_frames},
                     {"init_seed", cfg.init_seed}};
}

void from_json(const nlohmann::json& j, GtrConfig& cfg) {
  GtrConfig def;
  cfg.dim = j.value("dim", def.dim);
  cfg.heads = j.value("heads", def.heads);
  cfg.ffn_mult = j.value("ffn_mult", def.ffn_mult);
  cfg.dot_product_only = j.value("dot_product_only", def.dot_product_only);
  cfg.decoder_self_attention =
      j.value("decoder_self_attention", def.decoder_self_attention);
  cfg.positional_embedding =
      j.value("positional_embedding", def.positional_embedding);
  cfg.encoder_layers = j.value("encoder_layers", def.encoder_layers);
  cfg.decoder_layers = j.value("decoder_layers", def.decoder_layers);
  cfg.max_frames = j.value("max_frames", def.max_frames);
  cfg.init_seed = j.value("init_seed", def.init_seed);
}

FramePartition FramePartition::from_counts(std::vector<int> counts) {
  FramePartition part;
  part.offsets_.resize(counts.size() + 1);
  part.offsets_[0] = 0;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] < 0) throw ShapeError("partition: negative frame count");
    part.offsets_[t + 1] = part.offsets_[t] + counts[t];
  }
  part.counts_ = std::move(counts);
  return part;
}

int FramePartition::count(int t) const {
  if (t < 0 || t >= frames()) throw ContractError("partition: frame out of range");
  return counts_[t];
}

int FramePartition::offset(int t) const {
  if (t < 0 || t >= frames()) throw ContractError("partition: frame out of range");
  return offsets_[t];
}

int FramePartition::column(int t, int i) const {
  if (i < 0 || i >= count(t)) {
    throw ContractError("partition: detection index out of range");
  }
  return offsets_[t] + i;
}

std::vector<int> FramePartition::frame_of_each() const {
  std::vector<int> out;
  out.reserve(total());
  for (int t = 0; t < frames(); ++t) {
    out.insert(out.end(), counts_[t], t);
  }
  return out;
}

AssociationDistribution association_distribution_raw(
    const std::vector<double>& g, int queries, const FramePartition& part) {
  if (g.size() != static_cast<std::size_t>(queries) * part.total()) {
    throw ShapeError("association_distribution: score matrix is " +
                     std::to_string(g.size()) + " values, expected " +
                     std::to_string(queries) + "x" +
                     std::to_string(part.total()));
  }
  AssociationDistribution dist;
  dist.part = part;
  dist.p.resize(queries);
  const int n = part.total();
  for (int q = 0; q < queries; ++q) {
    dist.p[q].resize(part.frames());
    for (int t = 0; t < part.frames(); ++t) {
      const int nt = part.count(t);
      const int off = part.offset(t);
      std::vector<double>& row = dist.p[q][t];
      row.resize(nt + 1);
      double m = 0.0;  // the empty logit
      for (int i = 0; i < nt; ++i) {
        m = std::max(m, g[static_cast<std::size_t>(q) * n + off + i]);
      }
      // The empty slot's probability is defined as 1/(1 + sum exp g); keep
      // that identity bit-exact whenever exp cannot overflow, and fall back
      // to max-shifted logits only for extreme scores.
      if (m >= 650.0) {
        double z = std::exp(0.0 - m);
        row[0] = z;
        for (int i = 0; i < nt; ++i) {
          const double e =
              std::exp(g[static_cast<std::size_t>(q) * n + off + i] - m);
          row[i + 1] = e;
          z += e;
        }
        for (double& v : row) v /= z;
      } else {
        double z = 1.0;
        row[0] = 1.0;
        for (int i = 0; i < nt; ++i) {
          const double e =
              std::exp(g[static_cast<std::size_t>(q) * n + off + i]);
          row[i + 1] = e;
          z += e;
        }
        for (double& v : row) v /= z;
      }
    }
  }
  return dist;
}

AssociationDistribution association_distribution(const AssociationScores& s) {
  if (!s.g.defined()) {
    return association_distribution_raw({}, 0, s.part);
  }
  return association_distribution_raw(s.g.value(), s.g.rows(), s.part);
}

double trajectory_loglik(const AssociationDistribution& dist,
                         const std::vector<int>& alpha, int k) {
  if (k < 0 || k >= dist.queries()) {
    throw ContractError("trajectory_loglik: query index out of range");
  }
  if (alpha.size() != static_cast<std::size_t>(dist.part.frames())) {
    throw ContractError("trajectory_loglik: assignment covers " +
                        std::to_string(alpha.size()) + " frames, window has " +
                        std::to_string(dist.part.frames()));
  }
  double ll = 0.0;
  for (int t = 0; t < dist.part.frames(); ++t) {
    const int a = alpha[t];
    if (a < -1 || a >= dist.part.count(t)) {
      throw ContractError("trajectory_loglik: index " + std::to_string(a) +
                          " invalid for frame with " +
                          std::to_string(dist.part.count(t)) + " detections");
    }
    ll += std::log(dist.p[k][t][a + 1]);
  }
  return ll;
}

namespace {

Tensor xavier_param(ParamStore& ps, const std::string& name, int in, int out,
                    Rng& rng) {
  const double s = std::sqrt(6.0 / (in + out));
  std::vector<double> v(static_cast<std::size_t>(in) * out);
  for (double& e : v) e = rng.uniform(-s, s);
  return ps.add(name, Tensor::param(in, out, std::move(v)));
}

Tensor zero_param(ParamStore& ps, const std::string& name, int rows,
                  int cols) {
  return ps.add(name, Tensor::param(
                          rows, cols,
                          std::vector<double>(
                              static_cast<std::size_t>(rows) * cols, 0.0)));
}

}  // namespace

GtrHead::GtrHead(GtrConfig cfg) : cfg_(cfg) {
  validate(cfg_);
  if (cfg_.dot_product_only) return;  // score is a fixed reduction, no params

  Rng rng(mix_seed(cfg_.init_seed, 0x68656164));  // "head"
  const int d = cfg_.dim;
  const int inner = cfg_.ffn_mult * d;

  auto make_attention = [&](const std::string& prefix, bool with_value) {
    AttentionParams p;
    p.wq = xavier_param(params_, prefix + ".wq", d, d, rng);
    p.bq = zero_param(params_, prefix + ".bq", 1, d);
    p.wk = xavier_param(params_, prefix + ".wk", d, d, rng);
    p.bk = zero_param(params_, prefix + ".bk", 1, d);
    if (with_value) {
      p.wv = xavier_param(params_, prefix + ".wv", d, d, rng);
      p.bv = zero_param(params_, prefix + ".bv", 1, d);
    }
    return p;
  };
  auto make_ffn = [&](const std::string& prefix) {
    FfnParams p;
    p.w1 = xavier_param(params_, prefix + ".w1", d, inner, rng);
    p.b1 = zero_param(params_, prefix + ".b1", 1, inner);
    p.w2 = xavier_param(params_, prefix + ".w2", inner, d, rng);
    p.b2 = zero_param(params_, prefix + ".b2", 1, d);
    return p;
  };

  for (int l = 0; l < cfg_.encoder_layers; ++l) {
    const std::string prefix = "enc" + std::to_string(l);
    EncoderLayer layer;
    layer.att = make_attention(prefix + ".att", /*with_value=*/true);
    layer.ffn = make_ffn(prefix + ".ffn");
    enc_.push_back(std::move(layer));
  }
  for (int l = 0; l < cfg_.decoder_layers; ++l) {
    const std::string prefix = "dec" + std::to_string(l);
    DecoderLayer layer;
    if (cfg_.decoder_self_attention) {
      layer.self_att = make_attention(prefix + ".self", /*with_value=*/false);
    }
    layer.cross_att = make_attention(prefix + ".cross", /*with_value=*/false);
    layer.ffn = make_ffn(prefix + ".ffn");
    dec_.push_back(std::move(layer));
  }
  score_w_ = zero_param(params_, "score.w", d, d);
  score_b_ = zero_param(params_, "score.b", 1, d);
  if (cfg_.positional_embedding) {
    pos_table_ = xavier_param(params_, "pos.table", cfg_.max_frames, d, rng);
  }
}

int GtrHead::linear_layer_count() const {
  if (cfg_.dot_product_only) return 0;
  const int enc = cfg_.encoder_layers * (3 + 2);
  const int dec =
      cfg_.decoder_layers * ((cfg_.decoder_self_attention ? 2 : 0) + 2 + 2);
  return enc + dec + 1;
}

Tensor GtrHead::apply_ffn(const Tensor& x, const FfnParams& p) const {
  return linear(relu(linear(x, p.w1, p.b1)), p.w2, p.b2);
}

Tensor GtrHead::encode(const Tensor& f, const FramePartition& part) const {
  if (!f.defined() || f.rows() == 0) return Tensor::zeros(0, cfg_.dim);
  if (f.cols() != cfg_.dim) {
    throw ShapeError("encode: features have width " +
                     std::to_string(f.cols()) + ", model dim is " +
                     std::to_string(cfg_.dim));
  }
  if (f.rows() != part.total()) {
    throw ShapeError("encode: " + std::to_string(f.rows()) +
                     " rows vs partition total " +
                     std::to_string(part.total()));
  }
  if (cfg_.dot_product_only) return f;

  Tensor x = f;
  if (cfg_.positional_embedding) {
    if (part.frames() > cfg_.max_frames) {
      throw ConfigError("encode: window of " + std::to_string(part.frames()) +
                        " frames exceeds positional table of " +
                        std::to_string(cfg_.max_frames));
    }
    x = add(x, take_rows(pos_table_, part.frame_of_each()));
  }
  for (const EncoderLayer& layer : enc_) {
    x = add(x, multi_head_attention(x, x, layer.att, cfg_.heads));
    x = add(x, apply_ffn(x, layer.ffn));
  }
  return x;
}

AssociationScores GtrHead::decode(const Tensor& q, const Tensor& f_enc,
                                  const FramePartition& part) const {
  if (f_enc.defined() && f_enc.rows() != part.total()) {
    throw ShapeError("decode: encoded rows vs partition mismatch");
  }
  const int m = q.defined() ? q.rows() : 0;
  if (m == 0 || part.total() == 0) {
    return {Tensor::zeros(m, part.total()), part};
  }
  const double score_scale = 1.0 / std::sqrt(static_cast<double>(cfg_.dim));
  if (cfg_.dot_product_only) {
    return {scale(matmul_nt(q, f_enc), score_scale), part};
  }
  Tensor x = q;
  for (const DecoderLayer& layer : dec_) {
    if (cfg_.decoder_self_attention) {
      x = add(x, multi_head_attention(x, x, layer.self_att, cfg_.heads));
    }
    x = add(x, multi_head_attention(x, f_enc, layer.cross_att, cfg_.heads));
    x = add(x, apply_ffn(x, layer.ffn));
  }
  Tensor scored = linear(x, score_w_, score_b_);
  return {scale(matmul_nt(scored, f_enc), score_scale), part};
}

AssociationScores GtrHead::forward(const Tensor& f, const FramePartition& part,
                                   const std::vector<int>& query_rows) const {
  Tensor f_enc = encode(f, part);
  if (query_rows.empty()) {
    return {Tensor::zeros(0, part.total()), part};
  }
  Tensor q = take_rows(f, query_rows);
  return decode(q, f_enc, part);
}

void GtrHead::save(const std::string& path) const {
  save_checkpoint(path, nlohmann::json(cfg_), params_);
}

GtrHead GtrHead::load(const std::string& path) {
  LoadedCheckpoint lc = load_checkpoint(path);
  GtrConfig cfg = lc.config.get<GtrConfig>();
  GtrHead head(cfg);
  params_from_json(lc.params, head.params());
  return head;
}

}  // namespace gtrack
