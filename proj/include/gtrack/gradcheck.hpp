#pragma once

#include <functional>
#include <string>

#include "gtrack/optim.hpp"

namespace gtrack {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central-difference validation of reverse-mode gradients. loss_fn must be
/// a deterministic pure function of the parameter values; this is enforced
/// by evaluating it twice at the base point and requiring bitwise equality.
/// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
GradCheckReport finite_diff_check(
    const std::function<Tensor(ParamStore&)>& loss_fn, ParamStore& params,
    double eps);

}  // namespace gtrack
