#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pfvae/flows.hpp"
#include "pfvae/graph.hpp"
#include "pfvae/rng.hpp"

namespace pfvae {

struct ModelConfig {
  std::size_t input_dim = 784;
  std::vector<std::size_t> hidden_dims{10, 10, 10, 10};
  std::size_t latent_dim = 2;
  std::size_t flow_length = 4;
};

struct GaussianLatent {
  Tensor mu;
  Tensor logvar;
};

// Uniform Glorot bound sqrt(6 / (fan_in + fan_out)).
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

// Encoder MLP with Gaussian heads, a chain of planar flows, and a decoder MLP
// with sigmoid output. Hidden activations are tanh. All trainable tensors are
// registered in a ParameterSet under stable names, which is the canonical
// ordering for the optimizer and the checkpoint format.
class VaeModel {
 public:
  VaeModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Graph-building passes used by training. logvar is clamped to [-10, 10].
  std::pair<Var, Var> encode(const Var& x) const;
  // z0 = mu + eps * exp(0.5 * logvar)
  static Var reparameterize(const Var& mu, const Var& logvar, const Tensor& eps);

  struct FlowPass {
    Var z;            // z_K
    Var sum_log_det;  // scalar, 0 for an empty chain
  };
  FlowPass apply_flows(const Var& z0) const;

  Var decode(const Var& z) const;

  // Value-only passes: same ops run under NoGradGuard, no graph recorded.
  GaussianLatent encode_values(const Tensor& x) const;
  Tensor decode_values(const Tensor& z) const;
  static Tensor reparameterize_values(const Tensor& mu, const Tensor& logvar, const Tensor& eps);

  // Copies the current flow parameters into a value-level stack.
  FlowStack flow_snapshot() const;

 private:
  struct Linear {
    Var w;  // [out, in]
    Var b;  // [out]
  };
  struct FlowParams {
    Var u, w, b;  // [d], [d], scalar
  };

  Linear make_linear(const std::string& name, std::size_t out, std::size_t in, Rng& rng);
  Var run_hidden(const std::vector<Linear>& layers, const Var& x) const;

  ModelConfig cfg_;
  ParameterSet params_;
  std::vector<Linear> encoder_;
  Linear mu_head_;
  Linear logvar_head_;
  std::vector<FlowParams> flows_;
  std::vector<Linear> decoder_;
  Linear decoder_out_;
};

}  // namespace pfvae
