#pragma once

#include <map>
#include <string>
#include <vector>

#include "gtrack/tensor.hpp"

namespace gtrack {

/// Named parameter leaves. Map-backed so iteration order (and therefore
/// optimizer arithmetic and serialization) is deterministic by name.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) > 0; }

  std::map<std::string, Tensor>& items() { return params_; }
  const std::map<std::string, Tensor>& items() const { return params_; }

  std::size_t count() const { return params_.size(); }
  std::size_t total_elements() const;
  void zero_grad();

 private:
  std::map<std::string, Tensor> params_;
};

struct AdamWOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  double grad_clip = 0.1;  // max global gradient norm; <= 0 disables clipping
};

/// AdamW with decoupled weight decay and global-norm gradient clipping
/// applied before the moment updates.
class AdamW {
 public:
  explicit AdamW(AdamWOptions opt = {}) : opt_(opt) {
    if (opt_.lr < 0.0) throw ConfigError("AdamW: negative learning rate");
  }

  const AdamWOptions& options() const { return opt_; }

  // Reads each parameter's .grad and applies one update. Gradients are left
  // untouched; callers zero them per iteration.
  void step(ParamStore& params);

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamWOptions opt_;
  std::map<std::string, Moments> state_;
  long long step_count_ = 0;
};

}  // namespace gtrack
