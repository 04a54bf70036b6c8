#pragma once

// Acquisition functions over a GP posterior, for maximisation problems.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "gp.hpp"
#include "random.hpp"

namespace phca {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// E[(f - best) 1(f > best)] for f ~ N(mean, sd^2).
inline double expected_improvement(double mean, double sd, double best) {
  const double gap = mean - best;
  if (!(sd > 0.0)) return std::max(gap, 0.0);
  const double z = gap / sd;
  return std::max(0.0, gap * normal_cdf(z) + sd * normal_pdf(z));
}

/// P(f > best) for f ~ N(mean, sd^2).
inline double probability_of_improvement(double mean, double sd, double best) {
  if (!(sd > 0.0)) return mean > best ? 1.0 : 0.0;
  return normal_cdf((mean - best) / sd);
}

inline double expected_improvement(const GpState& gp, std::span<const double> x, double best) {
  const auto post = gp.posterior(x);
  return expected_improvement(post.mean, std::sqrt(post.variance), best);
}

inline double probability_of_improvement(const GpState& gp, std::span<const double> x, double best) {
  const auto post = gp.posterior(x);
  return probability_of_improvement(post.mean, std::sqrt(post.variance), best);
}

enum class AcquisitionKind { ExpectedImprovement, ProbabilityOfImprovement };

struct AcquisitionConfig {
  AcquisitionKind kind = AcquisitionKind::ExpectedImprovement;
  int n_starts = 64;
  int refine_iters = 3;            // coordinate sweeps per start
  double tolerance_fraction = 1e-4;  // golden-section stop, fraction of box width
  std::uint64_t seed = 0;
};

inline double acquisition_value(const GpState& gp, std::span<const double> x, double best, AcquisitionKind kind) {
  return kind == AcquisitionKind::ExpectedImprovement ? expected_improvement(gp, x, best)
                                                      : probability_of_improvement(gp, x, best);
}

struct AcquisitionCandidate {
  std::vector<double> point;
  double value = 0.0;
  int start = 0;
};

struct AcquisitionResult {
  std::vector<double> point;
  double value = 0.0;
  std::vector<AcquisitionCandidate> candidates;  // best first; ties keep start order
};

/// Multi-start maximisation: seeded uniform starts in [lower, upper], each
/// refined by coordinate-wise golden-section search that only accepts gains.
inline AcquisitionResult maximize_acquisition(const GpState& gp, std::span<const double> lower,
                                              std::span<const double> upper, const AcquisitionConfig& cfg,
                                              double best) {
  const std::size_t dim = lower.size();
  if (upper.size() != dim || dim != gp.dim()) throw std::invalid_argument("maximize_acquisition: box dimension mismatch");
  constexpr double inv_phi = 0.6180339887498949;
  Rng rng(cfg.seed);
  auto f = [&](const std::vector<double>& x) { return acquisition_value(gp, x, best, cfg.kind); };

  AcquisitionResult res;
  const int starts = std::max(1, cfg.n_starts);
  for (int s = 0; s < starts; ++s) {
    std::vector<double> x(dim);
    for (std::size_t d = 0; d < dim; ++d) x[d] = rng.uniform(lower[d], upper[d]);
    double fx = f(x);
    for (int it = 0; it < cfg.refine_iters; ++it) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double tol = cfg.tolerance_fraction * (upper[d] - lower[d]);
        auto along = [&](double t) {
          auto y = x;
          y[d] = t;
          return f(y);
        };
        double a = lower[d], b = upper[d];
        double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
        double f1 = along(x1), f2 = along(x2);
        while (b - a > tol) {
          if (f1 >= f2) {
            b = x2, x2 = x1, f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = along(x1);
          } else {
            a = x1, x1 = x2, f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = along(x2);
          }
        }
        if (std::max(f1, f2) > fx) {
          x[d] = f1 >= f2 ? x1 : x2;
          fx = std::max(f1, f2);
        }
      }
    }
    res.candidates.push_back({std::move(x), fx, s});
  }
  std::stable_sort(res.candidates.begin(), res.candidates.end(),
                   [](const auto& a, const auto& b) { return a.value > b.value; });
  res.point = res.candidates.front().point;
  res.value = res.candidates.front().value;
  return res;
}

}  // namespace phca
