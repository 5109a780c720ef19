#pragma once

#include <vector>

#include "pfvae/tensor.hpp"

namespace pfvae {

// Reparameterizes u so that w.u_hat = -1 + softplus(w.u) > -1, which keeps
// z + u_hat * tanh(w.z + b) invertible for any raw u.
Tensor constrain_u(const Tensor& u, const Tensor& w);

// Single planar transformation f(z) = z + u_hat * tanh(w.z + b). Value-level
// twin of the graph ops used in training; tests pin the two together.
struct PlanarFlow {
  Tensor u;     // rank-1 [d], unconstrained
  Tensor w;     // rank-1 [d]
  double b = 0.0;

  Tensor effective_u() const { return constrain_u(u, w); }
  // psi(z) = (1 - tanh^2(w.z + b)) * w
  Tensor psi(const Tensor& z) const;
  Tensor forward(const Tensor& z) const;
  // log(1 + u_hat . psi(z)); the determinant stays positive under the
  // constraint, and the argument is floored at 1e-7 before the log.
  double log_det(const Tensor& z) const;
};

struct FlowResult {
  Tensor z;                        // z_K
  double sum_log_det = 0.0;        // sum over flows of log|det J|
  std::vector<Tensor> trajectory;  // z_0 .. z_K when recorded
};

// Composition f_K(...f_2(f_1(z))...). Empty stack is the identity.
class FlowStack {
 public:
  FlowStack() = default;
  explicit FlowStack(std::vector<PlanarFlow> flows) : flows(std::move(flows)) {}

  std::size_t size() const { return flows.size(); }
  FlowResult forward(const Tensor& z0, bool record_trajectory = false) const;
  // log q_K at f(z0) given log q_0(z0): change of variables subtracts the
  // accumulated log-determinants.
  double log_density_after_flows(double log_q0, const Tensor& z0) const;

  std::vector<PlanarFlow> flows;
};

double std_normal_log_pdf(const Tensor& z);

}  // namespace pfvae
