#pragma once

#include <cstdint>
#include <vector>

#include "pfvae/graph.hpp"

namespace pfvae {

struct AdamConfig {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip = 0.0;  // global-norm threshold, 0 disables clipping
};

// Adam with bias correction. Moment buffers follow the parameter set's
// insertion order; the step counter t advances once per step() call.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {});

  const AdamConfig& config() const { return cfg_; }
  std::uint64_t step_count() const { return t_; }

  // One update from the gradients currently stored on params. Parameters the
  // last backward sweep never reached contribute zero gradient.
  void step(ParameterSet& params);

  // Checkpoint plumbing.
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void restore(std::uint64_t t, std::vector<Tensor> m, std::vector<Tensor> v);

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace pfvae
