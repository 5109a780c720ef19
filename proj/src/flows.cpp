#include "pfvae/flows.hpp"

#include <cmath>
#include <stdexcept>

#include "pfvae/scalarops.hpp"

namespace pfvae {

namespace {

void check_vector_pair(const Tensor& u, const Tensor& w, const char* where) {
  if (u.rank() != 1 || w.rank() != 1 || u.size() != w.size()) {
    throw std::invalid_argument(std::string(where) + ": shape mismatch " + u.shape_str() +
                                " vs " + w.shape_str());
  }
}

double dot_values(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

Tensor constrain_u(const Tensor& u, const Tensor& w) {
  check_vector_pair(u, w, "constrain_u");
  double wnorm2 = dot_values(w, w);
  if (wnorm2 < 1e-24) {
    throw std::invalid_argument("constrain_u: ||w|| < 1e-12, invertibility not guaranteed");
  }
  double a = dot_values(w, u);
  double m = stable_softplus(a) - 1.0;
  double coef = (m - a) / wnorm2;
  Tensor u_hat(u.shape());
  for (std::size_t i = 0; i < u.size(); ++i) u_hat[i] = u[i] + coef * w[i];
  return u_hat;
}

Tensor PlanarFlow::psi(const Tensor& z) const {
  check_vector_pair(z, w, "planar_flow");
  double a = dot_values(w, z) + b;
  double t = std::tanh(a);
  double h_prime = 1.0 - t * t;
  Tensor out(w.shape());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = h_prime * w[i];
  return out;
}

Tensor PlanarFlow::forward(const Tensor& z) const {
  check_vector_pair(z, w, "planar_flow");
  Tensor u_hat = effective_u();
  double a = dot_values(w, z) + b;
  double t = std::tanh(a);
  Tensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] + t * u_hat[i];
  return out;
}

double PlanarFlow::log_det(const Tensor& z) const {
  check_vector_pair(z, w, "planar_flow");
  Tensor u_hat = effective_u();
  double a = dot_values(w, z) + b;
  double t = std::tanh(a);
  double h_prime = 1.0 - t * t;
  double inner = 1.0 + h_prime * dot_values(u_hat, w);
  return std::log(std::max(inner, 1e-7));
}

FlowResult FlowStack::forward(const Tensor& z0, bool record_trajectory) const {
  FlowResult result;
  result.z = z0;
  if (record_trajectory) result.trajectory.push_back(z0);
  for (const PlanarFlow& f : flows) {
    result.sum_log_det += f.log_det(result.z);
    result.z = f.forward(result.z);
    if (record_trajectory) result.trajectory.push_back(result.z);
  }
  return result;
}

double FlowStack::log_density_after_flows(double log_q0, const Tensor& z0) const {
  return log_q0 - forward(z0).sum_log_det;
}

double std_normal_log_pdf(const Tensor& z) {
  double norm2 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) norm2 += z[i] * z[i];
  return -0.5 * (norm2 + static_cast<double>(z.size()) * std::log(2.0 * M_PI));
}

}  // namespace pfvae
