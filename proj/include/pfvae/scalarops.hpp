#pragma once

#include <cmath>

namespace pfvae {

// Numerically stable scalar activations shared by the graph ops and the
// value-level flow math, so both paths compute bit-identical results.
inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double stable_softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace pfvae
