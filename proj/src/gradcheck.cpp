#include "gtrack/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gtrack {

GradCheckReport finite_diff_check(
    const std::function<Tensor(ParamStore&)>& loss_fn, ParamStore& params,
    double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) {
    throw ContractError("finite_diff_check: eps must be in (0, 1e-2]");
  }

  const double f0 = loss_fn(params).scalar();
  const double f0_again = loss_fn(params).scalar();
  if (f0 != f0_again) {
    throw Error("finite_diff_check: loss_fn is not deterministic (" +
                std::to_string(f0) + " vs " + std::to_string(f0_again) + ")");
  }

  params.zero_grad();
  backward(loss_fn(params));
  std::map<std::string, std::vector<double>> analytic;
  for (const auto& [name, t] : params.items()) analytic[name] = t.grad();

  GradCheckReport report;
  for (auto& [name, t] : params.items()) {
    std::vector<double>& value = t.value_mut();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + eps;
      const double fp = loss_fn(params).scalar();
      value[i] = saved - eps;
      const double fm = loss_fn(params).scalar();
      value[i] = saved;

      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[name][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_index = static_cast<int>(i);
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace gtrack
