#include "pfvae/gmm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pfvae/rng.hpp"

namespace pfvae {

namespace {

struct CovCache {
  double inv00, inv01, inv11;
  double log_det;
};

CovCache prepare(const std::array<double, 4>& cov) {
  double det = cov[0] * cov[3] - cov[1] * cov[2];
  if (!(det > 0.0)) throw std::runtime_error("gmm: non positive definite covariance");
  return CovCache{cov[3] / det, -cov[1] / det, cov[0] / det, std::log(det)};
}

double log_gauss(const std::array<double, 2>& x, const std::array<double, 2>& mean,
                 const CovCache& c) {
  double dx = x[0] - mean[0];
  double dy = x[1] - mean[1];
  double quad = dx * (c.inv00 * dx + c.inv01 * dy) + dy * (c.inv01 * dx + c.inv11 * dy);
  return -std::log(2.0 * M_PI) - 0.5 * c.log_det - 0.5 * quad;
}

struct DataStats {
  std::array<double, 2> mean;
  std::array<double, 4> cov;
  double ridge;
};

DataStats data_stats(const std::vector<std::array<double, 2>>& pts) {
  double n = static_cast<double>(pts.size());
  DataStats s{{0, 0}, {0, 0, 0, 0}, 0};
  for (const auto& p : pts) {
    s.mean[0] += p[0];
    s.mean[1] += p[1];
  }
  s.mean[0] /= n;
  s.mean[1] /= n;
  for (const auto& p : pts) {
    double dx = p[0] - s.mean[0];
    double dy = p[1] - s.mean[1];
    s.cov[0] += dx * dx;
    s.cov[1] += dx * dy;
    s.cov[3] += dy * dy;
  }
  s.cov[0] /= n;
  s.cov[1] /= n;
  s.cov[2] = s.cov[1];
  s.cov[3] /= n;
  s.ridge = std::max(1e-6 * 0.5 * (s.cov[0] + s.cov[3]), 1e-12);
  return s;
}

GmmFit em_once(const std::vector<std::array<double, 2>>& pts, std::size_t k,
               std::size_t max_iterations, Rng& rng, const DataStats& stats) {
  std::size_t n = pts.size();

  GmmFit fit;
  fit.components.resize(k);
  std::array<double, 4> init_cov = stats.cov;
  init_cov[0] += stats.ridge;
  init_cov[3] += stats.ridge;
  // Means start at k distinct sample points.
  std::vector<std::size_t> order = rng.permutation(n);
  for (std::size_t j = 0; j < k; ++j) {
    fit.components[j].weight = 1.0 / static_cast<double>(k);
    fit.components[j].mean = pts[order[j]];
    fit.components[j].cov = init_cov;
  }

  std::vector<double> resp(n * k);
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    fit.em_iterations = iter + 1;

    // E-step with log-sum-exp responsibilities.
    std::vector<CovCache> caches(k);
    std::vector<double> log_w(k);
    for (std::size_t j = 0; j < k; ++j) {
      caches[j] = prepare(fit.components[j].cov);
      log_w[j] = std::log(std::max(fit.components[j].weight, 1e-300));
    }
    double ll = 0.0;
    std::vector<double> lp(k);
    for (std::size_t i = 0; i < n; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        lp[j] = log_w[j] + log_gauss(pts[i], fit.components[j].mean, caches[j]);
        m = std::max(m, lp[j]);
      }
      double denom = 0.0;
      for (std::size_t j = 0; j < k; ++j) denom += std::exp(lp[j] - m);
      double lse = m + std::log(denom);
      ll += lse;
      for (std::size_t j = 0; j < k; ++j) resp[i * k + j] = std::exp(lp[j] - lse);
    }
    fit.log_likelihood = ll;

    if (std::abs(ll - prev_ll) < 1e-7 * (1.0 + std::abs(ll))) {
      fit.converged = true;
      break;
    }
    prev_ll = ll;

    // M-step.
    for (std::size_t j = 0; j < k; ++j) {
      double nk = 0.0;
      for (std::size_t i = 0; i < n; ++i) nk += resp[i * k + j];
      if (nk < 1e-8) {
        // Collapsed component: restart it on a random point.
        fit.components[j].weight = 1.0 / static_cast<double>(n);
        fit.components[j].mean = pts[rng.below(n)];
        fit.components[j].cov = init_cov;
        continue;
      }
      GmmComponent& comp = fit.components[j];
      comp.weight = nk / static_cast<double>(n);
      comp.mean = {0.0, 0.0};
      for (std::size_t i = 0; i < n; ++i) {
        comp.mean[0] += resp[i * k + j] * pts[i][0];
        comp.mean[1] += resp[i * k + j] * pts[i][1];
      }
      comp.mean[0] /= nk;
      comp.mean[1] /= nk;
      double c00 = 0.0, c01 = 0.0, c11 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double r = resp[i * k + j];
        double dx = pts[i][0] - comp.mean[0];
        double dy = pts[i][1] - comp.mean[1];
        c00 += r * dx * dx;
        c01 += r * dx * dy;
        c11 += r * dy * dy;
      }
      comp.cov = {c00 / nk + stats.ridge, c01 / nk, c01 / nk, c11 / nk + stats.ridge};
    }
  }
  return fit;
}

}  // namespace

GmmFit fit_gmm(const std::vector<std::array<double, 2>>& pts, std::size_t k, std::size_t restarts,
               std::size_t max_iterations, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("gmm: k must be positive");
  if (restarts == 0) throw std::invalid_argument("gmm: restarts must be positive");
  if (pts.size() < k || pts.size() < 2) {
    throw std::invalid_argument("gmm: need at least max(k, 2) points, got " +
                                std::to_string(pts.size()));
  }
  DataStats stats = data_stats(pts);
  GmmFit best;
  best.log_likelihood = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(Rng::mix(seed, 0xE300 + r));
    GmmFit fit = em_once(pts, k, max_iterations, rng, stats);
    if (fit.log_likelihood > best.log_likelihood) best = fit;
  }
  return best;
}

double gmm_bic(const GmmFit& fit, std::size_t n) {
  double p = 6.0 * static_cast<double>(fit.components.size()) - 1.0;
  return p * std::log(static_cast<double>(n)) - 2.0 * fit.log_likelihood;
}

ModalityReport modality_report(const std::vector<std::array<double, 2>>& pts, std::uint64_t seed) {
  GmmFit one = fit_gmm(pts, 1, 50, 200, Rng::mix(seed, 0x6101));
  GmmFit ten = fit_gmm(pts, 10, 50, 200, Rng::mix(seed, 0x6110));
  ModalityReport rep;
  rep.bic1 = gmm_bic(one, pts.size());
  rep.bic10 = gmm_bic(ten, pts.size());
  rep.score = rep.bic1 - rep.bic10;
  return rep;
}

double multimodality_score(const std::vector<std::array<double, 2>>& pts, std::uint64_t seed) {
  return modality_report(pts, seed).score;
}

}  // namespace pfvae
