#pragma once

#include <functional>
#include <map>
#include <string>

#include "pfvae/graph.hpp"

namespace pfvae {

struct FdReport {
  double max_rel_err = 0.0;
  // Worst relative error per parameter name.
  std::map<std::string, double> per_param;
};

// Central-difference verification of reverse-mode gradients. loss_fn must
// rebuild the scalar loss from the parameters' current values on every call;
// probes run under NoGradGuard so they only pay for the forward pass.
// Error metric per entry: |analytic - central| / max(1, |analytic|).
FdReport finite_diff_report(const std::function<Var()>& loss_fn, ParameterSet& params,
                            double step);

// Max relative error over all parameter entries.
double finite_diff_check(const std::function<Var()>& loss_fn, ParameterSet& params,
                         double step = 1e-5);

}  // namespace pfvae
