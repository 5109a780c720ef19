#include "pfvae/nets.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pfvae {

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

VaeModel::Linear VaeModel::make_linear(const std::string& name, std::size_t out, std::size_t in,
                                       Rng& rng) {
  Tensor w(Shape{out, in});
  double bound = glorot_bound(in, out);
  rng.fill_uniform(w, -bound, bound);
  Tensor b(Shape{out});  // zeros
  return Linear{params_.add(name + ".w", std::move(w)), params_.add(name + ".b", std::move(b))};
}

VaeModel::VaeModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.input_dim == 0 || cfg_.latent_dim == 0) {
    throw std::invalid_argument("model: input_dim and latent_dim must be positive");
  }
  for (std::size_t h : cfg_.hidden_dims) {
    if (h == 0) throw std::invalid_argument("model: zero hidden layer width");
  }

  Rng rng(seed);

  std::size_t prev = cfg_.input_dim;
  for (std::size_t i = 0; i < cfg_.hidden_dims.size(); ++i) {
    encoder_.push_back(make_linear("encoder." + std::to_string(i), cfg_.hidden_dims[i], prev, rng));
    prev = cfg_.hidden_dims[i];
  }
  mu_head_ = make_linear("mu_head", cfg_.latent_dim, prev, rng);
  logvar_head_ = make_linear("logvar_head", cfg_.latent_dim, prev, rng);

  for (std::size_t k = 0; k < cfg_.flow_length; ++k) {
    std::string base = "flow." + std::to_string(k);
    Tensor u(Shape{cfg_.latent_dim});
    Tensor w(Shape{cfg_.latent_dim});
    rng.fill_uniform(u, -0.01, 0.01);
    rng.fill_uniform(w, -0.01, 0.01);
    flows_.push_back(FlowParams{params_.add(base + ".u", std::move(u)),
                                params_.add(base + ".w", std::move(w)),
                                params_.add(base + ".b", Tensor::scalar(0.0))});
  }

  prev = cfg_.latent_dim;
  // Decoder mirrors the encoder stack.
  for (std::size_t i = 0; i < cfg_.hidden_dims.size(); ++i) {
    std::size_t width = cfg_.hidden_dims[cfg_.hidden_dims.size() - 1 - i];
    decoder_.push_back(make_linear("decoder." + std::to_string(i), width, prev, rng));
    prev = width;
  }
  decoder_out_ = make_linear("decoder.out", cfg_.input_dim, prev, rng);
}

Var VaeModel::run_hidden(const std::vector<Linear>& layers, const Var& x) const {
  Var h = x;
  for (const Linear& layer : layers) {
    h = tanh(matmul(layer.w, h) + layer.b);
  }
  return h;
}

std::pair<Var, Var> VaeModel::encode(const Var& x) const {
  if (x.value().rank() != 1 || x.value().size() != cfg_.input_dim) {
    throw std::invalid_argument("encode: expected input " + shape_str({cfg_.input_dim}) +
                                ", got " + x.value().shape_str());
  }
  Var h = run_hidden(encoder_, x);
  Var mu = matmul(mu_head_.w, h) + mu_head_.b;
  Var logvar = clamp(matmul(logvar_head_.w, h) + logvar_head_.b, -10.0, 10.0);
  return {mu, logvar};
}

Var VaeModel::reparameterize(const Var& mu, const Var& logvar, const Tensor& eps) {
  if (!eps.same_shape(mu.value())) {
    throw std::invalid_argument("reparameterize: eps shape " + eps.shape_str() +
                                " does not match mu " + mu.value().shape_str());
  }
  return mu + Var::constant(eps) * exp(0.5 * logvar);
}

VaeModel::FlowPass VaeModel::apply_flows(const Var& z0) const {
  Var z = z0;
  Var sum_log_det = Var::scalar(0.0);
  for (const FlowParams& f : flows_) {
    Var wnorm2 = dot(f.w, f.w);
    if (wnorm2.value().item() < 1e-24) {
      throw std::invalid_argument("constrain_u: ||w|| < 1e-12, invertibility not guaranteed");
    }
    Var a_wu = dot(f.w, f.u);
    Var m = softplus(a_wu) - 1.0;
    Var u_hat = f.u + ((m - a_wu) / wnorm2) * f.w;

    Var a = dot(f.w, z) + f.b;
    Var t = tanh(a);
    Var h_prime = 1.0 - square(t);
    Var inner = 1.0 + h_prime * dot(u_hat, f.w);
    sum_log_det = sum_log_det + log(clamp(inner, 1e-7, std::numeric_limits<double>::infinity()));
    z = z + t * u_hat;
  }
  return FlowPass{z, sum_log_det};
}

Var VaeModel::decode(const Var& z) const {
  if (z.value().rank() != 1 || z.value().size() != cfg_.latent_dim) {
    throw std::invalid_argument("decode: expected latent " + shape_str({cfg_.latent_dim}) +
                                ", got " + z.value().shape_str());
  }
  Var h = run_hidden(decoder_, z);
  return sigmoid(matmul(decoder_out_.w, h) + decoder_out_.b);
}

GaussianLatent VaeModel::encode_values(const Tensor& x) const {
  NoGradGuard ng;
  auto [mu, logvar] = encode(Var::constant(x));
  return GaussianLatent{mu.value(), logvar.value()};
}

Tensor VaeModel::decode_values(const Tensor& z) const {
  NoGradGuard ng;
  return decode(Var::constant(z)).value();
}

Tensor VaeModel::reparameterize_values(const Tensor& mu, const Tensor& logvar, const Tensor& eps) {
  NoGradGuard ng;
  return reparameterize(Var::constant(mu), Var::constant(logvar), eps).value();
}

FlowStack VaeModel::flow_snapshot() const {
  std::vector<PlanarFlow> flows;
  for (const FlowParams& f : flows_) {
    flows.push_back(PlanarFlow{f.u.value(), f.w.value(), f.b.value().item()});
  }
  return FlowStack(std::move(flows));
}

}  // namespace pfvae
