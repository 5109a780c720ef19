#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace pfvae {

struct GmmComponent {
  double weight = 0.0;
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 4> cov{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
};

struct GmmFit {
  std::vector<GmmComponent> components;
  double log_likelihood = 0.0;
  std::size_t em_iterations = 0;
  bool converged = false;
};

// EM for a full-covariance 2-D Gaussian mixture. Runs `restarts` seeded
// initializations and keeps the best final log-likelihood. Covariances get a
// small data-scaled ridge each M-step for numerical safety.
GmmFit fit_gmm(const std::vector<std::array<double, 2>>& pts, std::size_t k, std::size_t restarts,
               std::size_t max_iterations, std::uint64_t seed);

// BIC = p ln(n) - 2 ll with p = 6k - 1 free parameters (k-1 weights, 2k
// means, 3k covariance entries). Lower is better.
double gmm_bic(const GmmFit& fit, std::size_t n);

struct ModalityReport {
  double bic1 = 0.0;
  double bic10 = 0.0;
  double score = 0.0;  // bic1 - bic10
};

// Fits k=1 and k=10 mixtures, each with 50 restarts capped at 200 EM
// iterations, and reports both BIC values.
ModalityReport modality_report(const std::vector<std::array<double, 2>>& pts, std::uint64_t seed);

// BIC(k=1) - BIC(k=10). Large positive values mean the cloud is far better
// explained by many modes than by one Gaussian.
double multimodality_score(const std::vector<std::array<double, 2>>& pts, std::uint64_t seed);

}  // namespace pfvae
