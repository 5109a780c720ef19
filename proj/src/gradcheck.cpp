#include "pfvae/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace pfvae {

namespace {

double eval_loss(const std::function<Var()>& loss_fn) {
  NoGradGuard ng;
  return loss_fn().value().item();
}

}  // namespace

FdReport finite_diff_report(const std::function<Var()>& loss_fn, ParameterSet& params,
                            double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff: step must be positive");

  params.zero_grad();
  Var loss = loss_fn();
  backward(loss);
  auto grads = params.gradients();

  FdReport report;
  for (auto& p : params) {
    Tensor& value = p.var.node()->value;
    const Tensor& analytic = grads.at(p.name);
    double worst = 0.0;
    for (std::size_t i = 0; i < value.size(); ++i) {
      double orig = value[i];
      value[i] = orig + step;
      double f_plus = eval_loss(loss_fn);
      value[i] = orig - step;
      double f_minus = eval_loss(loss_fn);
      value[i] = orig;
      double central = (f_plus - f_minus) / (2.0 * step);
      double err = std::abs(analytic[i] - central) / std::max(1.0, std::abs(analytic[i]));
      worst = std::max(worst, err);
    }
    report.per_param[p.name] = worst;
    report.max_rel_err = std::max(report.max_rel_err, worst);
  }
  return report;
}

double finite_diff_check(const std::function<Var()>& loss_fn, ParameterSet& params, double step) {
  return finite_diff_report(loss_fn, params, step).max_rel_err;
}

}  // namespace pfvae
