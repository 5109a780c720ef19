#include "pfvae/elbo.hpp"

#include <cmath>
#include <stdexcept>

namespace pfvae {

ElboBreakdown ElboVars::values() const {
  return ElboBreakdown{recon.value().item(), kl.value().item(), flow_correction.value().item(),
                       total.value().item()};
}

Var reconstruction_loss(const Var& x, const Var& xhat) {
  return sum(square(x - xhat));
}

double reconstruction_loss(const Tensor& x, const Tensor& xhat) {
  if (!x.same_shape(xhat)) {
    throw std::invalid_argument("reconstruction: shape mismatch " + x.shape_str() + " vs " +
                                xhat.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - xhat[i];
    acc += d * d;
  }
  return acc;
}

Var gaussian_kl(const Var& mu, const Var& logvar) {
  return 0.5 * sum(square(mu) + exp(logvar) - 1.0 - logvar);
}

double gaussian_kl(const GaussianLatent& latent) {
  if (!latent.mu.same_shape(latent.logvar)) {
    throw std::invalid_argument("gaussian_kl: shape mismatch " + latent.mu.shape_str() + " vs " +
                                latent.logvar.shape_str());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < latent.mu.size(); ++i) {
    double m = latent.mu[i];
    double l = latent.logvar[i];
    acc += m * m + std::exp(l) - 1.0 - l;
  }
  return 0.5 * acc;
}

ElboVars flow_elbo(const VaeModel& model, const Tensor& x, const Tensor& eps) {
  Var xv = Var::constant(x);
  auto [mu, logvar] = model.encode(xv);
  Var z0 = VaeModel::reparameterize(mu, logvar, eps);
  VaeModel::FlowPass flow = model.apply_flows(z0);
  Var xhat = model.decode(flow.z);

  ElboVars out;
  out.recon = reconstruction_loss(xv, xhat);
  out.kl = gaussian_kl(mu, logvar);
  out.flow_correction = Var::scalar(0.0) - flow.sum_log_det;
  out.total = (out.recon + out.kl) + out.flow_correction;
  return out;
}

McEstimate mc_expectation(const std::function<double(const Tensor&)>& g,
                          const std::function<Tensor()>& sample_base, const FlowStack& stack,
                          std::size_t n) {
  if (n < 2) throw std::invalid_argument("mc_expectation: need at least 2 samples");
  double sum_g = 0.0;
  double sum_g2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor z0 = sample_base();
    double v = g(stack.forward(z0).z);
    sum_g += v;
    sum_g2 += v * v;
  }
  double nd = static_cast<double>(n);
  double mean = sum_g / nd;
  double var = (sum_g2 - nd * mean * mean) / (nd - 1.0);
  if (var < 0.0) var = 0.0;  // rounding guard for constant g
  return McEstimate{mean, std::sqrt(var / nd)};
}

}  // namespace pfvae
