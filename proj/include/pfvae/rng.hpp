#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pfvae/tensor.hpp"

namespace pfvae {

// Deterministic random source. mt19937_64 supplies raw bits; uniform, normal
// and bounded-int draws are defined here instead of with std distributions so
// sequences are identical across standard library implementations and the
// serialized engine state fully captures the generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller. Draws two uniforms per call and keeps no
  // cached spare, so the engine state alone determines future output.
  double normal();

  // Uniform integer in [0, n) by rejection (no modulo bias).
  std::size_t below(std::size_t n);

  void fill_uniform(Tensor& t, double lo, double hi);
  void fill_normal(Tensor& t);
  Tensor normal_tensor(Shape shape);

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  // Engine state as text (std::mt19937_64 stream format is standardized).
  std::string state() const;
  void restore(const std::string& state);

  // Derives an independent stream seed from a base seed and a stream tag
  // (splitmix64 finalizer over the pair).
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

}  // namespace pfvae
