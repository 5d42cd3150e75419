#include "gtrack/optim.hpp"

#include <cmath>

namespace gtrack {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  if (name.empty()) throw ConfigError("ParamStore: empty parameter name");
  if (!t.defined() || !t.requires_grad()) {
    throw ContractError("ParamStore: '" + name +
                        "' must be a grad-requiring leaf");
  }
  auto [it, inserted] = params_.emplace(name, std::move(t));
  if (!inserted) {
    throw ConfigError("ParamStore: duplicate parameter '" + name + "'");
  }
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw ConfigError("ParamStore: unknown parameter '" + name + "'");
  }
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw ConfigError("ParamStore: unknown parameter '" + name + "'");
  }
  return it->second;
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

void AdamW::step(ParamStore& params) {
  double sq_norm = 0.0;
  for (const auto& [name, t] : params.items()) {
    for (double g : t.grad()) {
      if (!std::isfinite(g)) {
        throw Error("adamw_step: non-finite gradient in parameter '" + name +
                    "'");
      }
      sq_norm += g * g;
    }
  }
  const double norm = std::sqrt(sq_norm);
  double clip_scale = 1.0;
  if (opt_.grad_clip > 0.0 && norm > opt_.grad_clip) {
    clip_scale = opt_.grad_clip / norm;
  }

  ++step_count_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, step_count_);
  const double bc2 = 1.0 - std::pow(opt_.beta2, step_count_);
  for (auto& [name, t] : params.items()) {
    Moments& st = state_[name];
    if (st.m.size() != t.size()) {
      st.m.assign(t.size(), 0.0);
      st.v.assign(t.size(), 0.0);
    }
    const std::vector<double>& grad = t.grad();
    std::vector<double>& value = t.value_mut();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i] * clip_scale;
      st.m[i] = opt_.beta1 * st.m[i] + (1.0 - opt_.beta1) * g;
      st.v[i] = opt_.beta2 * st.v[i] + (1.0 - opt_.beta2) * g * g;
      const double mhat = st.m[i] / bc1;
      const double vhat = st.v[i] / bc2;
      value[i] -= opt_.lr * (mhat / (std::sqrt(vhat) + opt_.eps) +
                             opt_.weight_decay * value[i]);
    }
  }
}

}  // namespace gtrack
