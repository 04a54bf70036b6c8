#pragma once

// Gaussian-process regression surrogate with a constant mean and an ARD
// stationary kernel.
//
// Inputs are mapped from the caller's box onto [0,1]^dim and targets are
// standardised before fitting; posterior() answers in the caller's units.
// Hyperparameters (signal variance, lengthscales, noise) are chosen by
// multi-start coordinate ascent on the log marginal likelihood in log space;
// the constant mean is profiled out in closed form for each candidate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "random.hpp"

namespace phca {

class GpError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class KernelKind { Matern52, SquaredExponential };

struct Kernel {
  KernelKind kind = KernelKind::Matern52;
  double signal_variance = 1.0;
  std::vector<double> lengthscales;

  double operator()(std::span<const double> a, std::span<const double> b) const {
    double r2 = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
      const double z = (a[d] - b[d]) / lengthscales[d];
      r2 += z * z;
    }
    return from_r2(r2);
  }

  double from_r2(double r2) const {
    if (kind == KernelKind::SquaredExponential) return signal_variance * std::exp(-0.5 * r2);
    const double s5r = std::sqrt(5.0 * r2);
    return signal_variance * (1.0 + s5r + 5.0 * r2 / 3.0) * std::exp(-s5r);
  }
};

inline double kernel_eval(const Kernel& k, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() != k.lengthscales.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  return k(a, b);
}

struct Hyperparameters {
  double signal_variance = 1.0;
  std::vector<double> lengthscales;
  double noise_variance = 1e-6;
};

struct GpConfig {
  std::vector<double> lower, upper;  // input box; empty means the unit box
  KernelKind kind = KernelKind::Matern52;
  int n_starts = 8;
  int max_sweeps = 4;
  double line_tolerance = 1e-3;  // golden-section bracket width, log space
  double lengthscale_min = 1e-2, lengthscale_max = 1e2;
  double signal_min = 1e-4, signal_max = 1e4;
  double noise_min = 1e-6, noise_max = 1.0;  // noise_min is the floor
  std::uint64_t seed = 0;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

class GpState {
public:
  // Training data in model space: inputs on the unit box, targets standardised.
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double y_offset = 0.0, y_scale = 1.0;
  double mean_const = 0.0;  // standardised units
  Kernel kernel;
  double noise_variance = 1e-6;
  double jitter = 0.0;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  std::vector<double> start_log_likelihoods;  // at each multi-start initial point
  std::vector<double> lower, upper;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }

  /// Map a point from the caller's box onto the unit box (clamped).
  std::vector<double> normalize(std::span<const double> x) const {
    std::vector<double> u(x.size());
    for (std::size_t d = 0; d < x.size(); ++d)
      u[d] = std::clamp((x[d] - lower[d]) / (upper[d] - lower[d]), 0.0, 1.0);
    return u;
  }

  /// Mean and variance in the caller's units.
  Posterior posterior(std::span<const double> x) const {
    if (x.size() != dim()) throw std::invalid_argument("posterior: dimension mismatch");
    const auto u = normalize(x);
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks(i) = kernel(u, row(i));
    Posterior post;
    post.mean = y_offset + y_scale * (mean_const + ks.dot(alpha_));
    const Eigen::VectorXd v = chol_.matrixL().solve(ks);
    post.variance = std::max(0.0, kernel.signal_variance - v.squaredNorm()) * y_scale * y_scale;
    return post;
  }

  double prior_variance() const { return kernel.signal_variance * y_scale * y_scale; }
  double prior_mean() const { return y_offset + y_scale * mean_const; }

  /// K + (noise + jitter) I, the matrix the cached factorisation represents.
  Eigen::MatrixXd gram() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) K(i, j) = K(j, i) = kernel(row(i), row(j));
    K.diagonal().array() += noise_variance + jitter;
    return K;
  }

  std::span<const double> row(Eigen::Index i) const {
    return {rows_.data() + static_cast<std::size_t>(i) * dim(), dim()};
  }

private:
  friend GpState condition(const std::vector<std::vector<double>>&, std::span<const double>, const Hyperparameters&,
                           const GpConfig&);
  friend GpState fit(const std::vector<std::vector<double>>&, std::span<const double>, const GpConfig&);

  std::vector<double> rows_;  // row-major copy of X for span access
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;  // (K + noise I)^{-1} (y - mean_const)
};

namespace detail {

struct Conditioned {
  Eigen::LLT<Eigen::MatrixXd> chol;
  double jitter = 0.0;
  double mean_const = 0.0;
  Eigen::VectorXd alpha;
  double log_likelihood = -std::numeric_limits<double>::infinity();
};

// Factorise K + noise I with jitter escalation 1e-10 .. 1e-4, then profile the
// constant mean and evaluate the log marginal likelihood.
inline bool condition_on(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double noise, Conditioned& out) {
  const auto n = K.rows();
  Eigen::MatrixXd A = K;
  A.diagonal().array() += noise;
  double jitter = 0.0;
  for (;;) {
    out.chol.compute(A);
    bool ok = out.chol.info() == Eigen::Success;
    if (ok) {
      const auto& L = out.chol.matrixLLT();
      for (Eigen::Index i = 0; i < n && ok; ++i) ok = L(i, i) > 0.0 && std::isfinite(L(i, i));
    }
    if (ok) break;
    const double next = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    if (next > 1e-4 * (1.0 + 1e-9)) return false;
    A.diagonal().array() += next - jitter;
    jitter = next;
  }
  out.jitter = jitter;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd kinv_one = out.chol.solve(ones);
  const Eigen::VectorXd kinv_y = out.chol.solve(y);
  out.mean_const = ones.dot(kinv_y) / ones.dot(kinv_one);
  out.alpha = kinv_y - out.mean_const * kinv_one;
  const Eigen::VectorXd resid = y.array() - out.mean_const;
  const double log_det = 2.0 * out.chol.matrixLLT().diagonal().array().log().sum();
  out.log_likelihood = -0.5 * resid.dot(out.alpha) - 0.5 * log_det -
                       0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  return std::isfinite(out.log_likelihood);
}

inline Eigen::MatrixXd kernel_matrix(const Kernel& k, const std::vector<double>& rows, std::size_t n, std::size_t dim) {
  Eigen::MatrixXd K(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = k({rows.data() + i * dim, dim}, {rows.data() + j * dim, dim});
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      K(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  return K;
}

struct Prepared {
  std::size_t n = 0, dim = 0;
  std::vector<double> rows;  // normalised, canonically sorted
  Eigen::VectorXd y;         // standardised
  double offset = 0.0, scale = 1.0;
  std::vector<double> lower, upper;
  bool flat = false;
};

inline Prepared prepare(const std::vector<std::vector<double>>& X, std::span<const double> y, const GpConfig& cfg) {
  if (X.empty()) throw GpError("fit: need at least one training point");
  if (X.size() != y.size()) throw GpError("fit: X and y sizes differ");
  Prepared p;
  p.n = X.size();
  p.dim = X.front().size();
  if (p.dim == 0) throw GpError("fit: zero-dimensional inputs");
  for (const auto& x : X)
    if (x.size() != p.dim) throw GpError("fit: ragged input rows");
  for (double v : y)
    if (!std::isfinite(v)) throw GpError("fit: non-finite target");
  p.lower = cfg.lower.empty() ? std::vector<double>(p.dim, 0.0) : cfg.lower;
  p.upper = cfg.upper.empty() ? std::vector<double>(p.dim, 1.0) : cfg.upper;
  if (p.lower.size() != p.dim || p.upper.size() != p.dim) throw GpError("fit: box dimension mismatch");
  for (std::size_t d = 0; d < p.dim; ++d)
    if (!(p.upper[d] > p.lower[d])) throw GpError("fit: empty box");

  // Canonical order makes the result independent of how the data was supplied.
  std::vector<std::size_t> idx(p.n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (X[a] != X[b]) return X[a] < X[b];
    return y[a] < y[b];
  });

  p.rows.resize(p.n * p.dim);
  p.y.resize(static_cast<Eigen::Index>(p.n));
  for (std::size_t i = 0; i < p.n; ++i) {
    const auto& x = X[idx[i]];
    for (std::size_t d = 0; d < p.dim; ++d)
      p.rows[i * p.dim + d] = std::clamp((x[d] - p.lower[d]) / (p.upper[d] - p.lower[d]), 0.0, 1.0);
    p.y(static_cast<Eigen::Index>(i)) = y[idx[i]];
  }
  p.offset = p.y.mean();
  const double var = (p.y.array() - p.offset).square().mean();
  const double sd = std::sqrt(var);
  p.flat = !(sd > 1e-12 * std::max(1.0, std::abs(p.offset)));
  p.scale = p.flat ? 1.0 : sd;
  p.y = p.flat ? Eigen::VectorXd::Zero(p.y.size()) : Eigen::VectorXd((p.y.array() - p.offset) / p.scale);
  return p;
}

inline GpState assemble(const Prepared& p, const Hyperparameters& h, KernelKind kind) {
  GpState st;
  st.lower = p.lower;
  st.upper = p.upper;
  st.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      p.rows.data(), static_cast<Eigen::Index>(p.n), static_cast<Eigen::Index>(p.dim));
  st.y = p.y;
  st.y_offset = p.offset;
  st.y_scale = p.scale;
  st.kernel = Kernel{kind, h.signal_variance, h.lengthscales};
  st.noise_variance = h.noise_variance;
  return st;
}

}  // namespace detail

/// Condition a GP on data with fixed hyperparameters (model-space units).
inline GpState condition(const std::vector<std::vector<double>>& X, std::span<const double> y,
                         const Hyperparameters& h, const GpConfig& cfg = {}) {
  const auto p = detail::prepare(X, y, cfg);
  if (h.lengthscales.size() != p.dim) throw GpError("condition: lengthscale count mismatch");
  GpState st = detail::assemble(p, h, cfg.kind);
  detail::Conditioned c;
  if (!detail::condition_on(detail::kernel_matrix(st.kernel, p.rows, p.n, p.dim), p.y, h.noise_variance, c))
    throw GpError("condition: Gram matrix not positive definite after jitter 1e-4");
  st.rows_ = p.rows;
  st.chol_ = std::move(c.chol);
  st.alpha_ = std::move(c.alpha);
  st.jitter = c.jitter;
  st.mean_const = c.mean_const;
  st.log_likelihood = c.log_likelihood;
  return st;
}

/// Fit hyperparameters by maximising the log marginal likelihood, then condition.
inline GpState fit(const std::vector<std::vector<double>>& X, std::span<const double> y, const GpConfig& cfg = {}) {
  const auto p = detail::prepare(X, y, cfg);
  const std::size_t dim = p.dim;

  if (p.flat) {
    Hyperparameters h{1.0, std::vector<double>(dim, 0.5), cfg.noise_min};
    GpState st = condition(X, y, h, cfg);
    st.start_log_likelihoods = {st.log_likelihood};
    return st;
  }

  // theta = [log signal, log lengthscale_1..dim, log noise]
  const std::size_t np = dim + 2;
  std::vector<double> lo(np), hi(np);
  lo[0] = std::log(cfg.signal_min), hi[0] = std::log(cfg.signal_max);
  for (std::size_t d = 0; d < dim; ++d)
    lo[1 + d] = std::log(cfg.lengthscale_min), hi[1 + d] = std::log(cfg.lengthscale_max);
  lo[np - 1] = std::log(cfg.noise_min), hi[np - 1] = std::log(cfg.noise_max);

  auto to_hyper = [&](const std::vector<double>& th) {
    Hyperparameters h;
    h.signal_variance = std::exp(th[0]);
    h.lengthscales.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) h.lengthscales[d] = std::exp(th[1 + d]);
    h.noise_variance = std::exp(th[np - 1]);
    return h;
  };
  detail::Conditioned scratch;
  auto objective = [&](const std::vector<double>& th) {
    const auto h = to_hyper(th);
    const Kernel k{cfg.kind, h.signal_variance, h.lengthscales};
    if (!detail::condition_on(detail::kernel_matrix(k, p.rows, p.n, dim), p.y, h.noise_variance, scratch))
      return -std::numeric_limits<double>::infinity();
    return scratch.log_likelihood;
  };

  Rng rng(cfg.seed);
  std::vector<std::vector<double>> starts;
  {
    std::vector<double> th(np);
    th[0] = 0.0;
    for (std::size_t d = 0; d < dim; ++d) th[1 + d] = std::log(0.3);
    th[np - 1] = std::log(std::max(cfg.noise_min, std::min(cfg.noise_max, 1e-4)));
    starts.push_back(th);
  }
  for (int s = 1; s < cfg.n_starts; ++s) {
    std::vector<double> th(np);
    th[0] = rng.uniform(std::log(0.1), std::log(10.0));
    for (std::size_t d = 0; d < dim; ++d) th[1 + d] = rng.uniform(std::log(0.05), std::log(2.0));
    th[np - 1] = rng.uniform(std::log(cfg.noise_min), std::log(std::max(cfg.noise_min, std::min(cfg.noise_max, 1e-2))));
    starts.push_back(th);
  }
  for (auto& th : starts)
    for (std::size_t c = 0; c < np; ++c) th[c] = std::clamp(th[c], lo[c], hi[c]);

  constexpr double inv_phi = 0.6180339887498949;
  std::vector<double> best_theta;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<double> start_values;

  for (auto theta : starts) {
    double value = objective(theta);
    start_values.push_back(value);
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      const double before = value;
      for (std::size_t c = 0; c < np; ++c) {
        if (hi[c] - lo[c] <= 0.0) continue;
        auto along = [&](double t) {
          auto th = theta;
          th[c] = t;
          return objective(th);
        };
        double a = lo[c], b = hi[c];
        double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
        double f1 = along(x1), f2 = along(x2);
        while (b - a > cfg.line_tolerance) {
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
        const double cand = f1 >= f2 ? x1 : x2, fc = std::max(f1, f2);
        if (fc > value) theta[c] = cand, value = fc;
      }
      if (!(value > before + 1e-9)) break;
    }
    if (value > best_value || best_theta.empty()) best_value = value, best_theta = theta;
  }
  if (!std::isfinite(best_value)) throw GpError("fit: no hyperparameter setting gave a positive definite Gram matrix");

  GpState st = condition(X, y, to_hyper(best_theta), cfg);
  st.start_log_likelihoods = std::move(start_values);
  return st;
}

}  // namespace phca
