#include "pfvae/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace pfvae {

Adam::Adam(AdamConfig cfg) : cfg_(cfg) {
  if (!(cfg_.lr > 0.0)) throw std::invalid_argument("adam: lr must be positive");
  if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0) || !(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0)) {
    throw std::invalid_argument("adam: betas must lie in [0, 1)");
  }
}

void Adam::step(ParameterSet& params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.var.value().shape());
      v_.emplace_back(p.var.value().shape());
    }
  }
  if (m_.size() != params.size()) {
    throw std::invalid_argument("adam: parameter count changed after first step");
  }

  // Collect gradients up front so clipping sees the full global norm.
  std::vector<const Tensor*> grads;
  grads.reserve(params.size());
  std::size_t i = 0;
  for (const auto& p : params) {
    const Tensor& g = p.var.grad();
    if (!g.all_finite()) {
      throw NonFiniteError("non-finite gradient for parameter '" + p.name + "'");
    }
    if (!p.var.value().same_shape(m_[i])) {
      throw std::invalid_argument("adam: shape of '" + p.name + "' changed after first step");
    }
    grads.push_back(&g);
    ++i;
  }

  double scale = 1.0;
  if (cfg_.grad_clip > 0.0) {
    double norm2 = 0.0;
    for (const Tensor* g : grads) {
      for (std::size_t j = 0; j < g->size(); ++j) norm2 += (*g)[j] * (*g)[j];
    }
    double norm = std::sqrt(norm2);
    if (norm > cfg_.grad_clip) scale = cfg_.grad_clip / norm;
  }

  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  i = 0;
  for (auto& p : params) {
    Tensor& value = p.var.node()->value;
    const Tensor& g = *grads[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      double gj = g[j] * scale;
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      double m_hat = m[j] / bc1;
      double v_hat = v[j] / bc2;
      value[j] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
    ++i;
  }
}

void Adam::restore(std::uint64_t t, std::vector<Tensor> m, std::vector<Tensor> v) {
  if (m.size() != v.size()) throw std::invalid_argument("adam: moment list size mismatch");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace pfvae
