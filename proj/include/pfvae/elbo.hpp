#pragma once

#include <functional>

#include "pfvae/flows.hpp"
#include "pfvae/nets.hpp"

namespace pfvae {

struct ElboBreakdown {
  double recon = 0.0;
  double kl = 0.0;
  double flow_correction = 0.0;
  double total = 0.0;
};

// Graph-level loss terms for one example. total = recon + kl + flow_correction
// with flow_correction = -sum of flow log-determinants; the loss is minimized.
struct ElboVars {
  Var recon;
  Var kl;
  Var flow_correction;
  Var total;
  ElboBreakdown values() const;
};

// Sum of squared errors sum_i (x_i - xhat_i)^2.
Var reconstruction_loss(const Var& x, const Var& xhat);
double reconstruction_loss(const Tensor& x, const Tensor& xhat);

// KL(N(mu, diag exp(logvar)) || N(0, I)) in closed form:
// 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar). Non-negative.
Var gaussian_kl(const Var& mu, const Var& logvar);
double gaussian_kl(const GaussianLatent& latent);

// Single-sample estimator: encode, reparameterize with the given eps, run the
// flow chain, decode, and assemble the three loss terms.
ElboVars flow_elbo(const VaeModel& model, const Tensor& x, const Tensor& eps);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Monte-Carlo estimate of E_{q_K}[g]: draws z0 from sample_base, pushes it
// through the stack and averages g(z_K). Identical in expectation to sampling
// q_K directly.
McEstimate mc_expectation(const std::function<double(const Tensor&)>& g,
                          const std::function<Tensor()>& sample_base, const FlowStack& stack,
                          std::size_t n);

}  // namespace pfvae
