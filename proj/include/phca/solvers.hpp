#pragma once

// Box-constrained maximisers for the penalized hosting-capacity objective:
// Bayesian optimisation, a coordinate pattern search, and an exhaustive lattice.
//
// The generic forms take any objective over a box; the solve_* overloads wire
// in a RiskEvaluator over [0, psi_max].

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "acquisition.hpp"
#include "gp.hpp"
#include "network.hpp"
#include "random.hpp"
#include "risk.hpp"
#include "scenario.hpp"

namespace phca {

struct Evaluation {
  double eps_hat = 0.0;
  double objective = 0.0;
};

using Objective = std::function<Evaluation(std::span<const double>)>;

struct Box {
  std::vector<double> lower, upper;
  std::size_t dim() const { return lower.size(); }
  bool contains(std::span<const double> x) const {
    for (std::size_t d = 0; d < x.size(); ++d)
      if (!(x[d] >= lower[d] && x[d] <= upper[d])) return false;
    return x.size() == dim();
  }
};

inline Box hosting_box(const Network& net) { return {std::vector<double>(net.num_candidates(), 0.0), net.psi_max}; }

enum class Method { BayesOpt, Pattern, Grid };

/// Monotone map applied to objective values before the GP sees them. The
/// penalty plateau sits thousands of units below the feasible values, so after
/// plain standardization the slope of 1'psi inside the feasible set is lost.
/// Rank replaces each value by its (tie-averaged) rank; SignedLog uses
/// sign(c) log(1 + |c|). Both keep the ordering, so the incumbent is unchanged.
enum class OutputWarp { None, SignedLog, Rank };

inline std::vector<double> warp_targets(OutputWarp w, const std::vector<double>& c) {
  std::vector<double> out(c.size());
  switch (w) {
    case OutputWarp::None: return c;
    case OutputWarp::SignedLog:
      for (std::size_t i = 0; i < c.size(); ++i) out[i] = std::copysign(std::log1p(std::abs(c[i])), c[i]);
      return out;
    case OutputWarp::Rank: {
      std::vector<std::size_t> idx(c.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return c[a] < c[b]; });
      for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && c[idx[j + 1]] == c[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) out[idx[k]] = 0.5 * static_cast<double>(i + j);
        i = j + 1;
      }
      return out;
    }
  }
  return c;
}

inline std::string to_string(Method m) {
  switch (m) {
    case Method::BayesOpt: return "bayesopt";
    case Method::Pattern: return "pattern";
    case Method::Grid: return "grid";
  }
  return "unknown";
}

inline Method method_from_string(const std::string& s) {
  if (s == "bayesopt") return Method::BayesOpt;
  if (s == "pattern") return Method::Pattern;
  if (s == "grid") return Method::Grid;
  throw std::invalid_argument("unknown method '" + s + "' (expected bayesopt, pattern or grid)");
}

struct SolveConfig {
  Method method = Method::BayesOpt;
  std::size_t budget = 150;
  std::size_t n_initial = 0;  // 0 selects max(4, 2 |L|)
  double eps_bar = 0.05;
  std::uint64_t seed = 7;
  AcquisitionConfig acquisition;
  GpConfig gp;
  std::optional<std::vector<double>> start;  // pattern search starting point
  std::size_t points_per_dim = 11;           // grid
  unsigned threads = 1;
  OutputWarp warp = OutputWarp::Rank;  // bayesopt surrogate only
};

struct Query {
  std::size_t iter = 0;  // 1-based
  std::vector<double> psi;
  double eps_hat = 0.0;
  double objective = 0.0;
  double elapsed_ms = 0.0;
};

struct SolveTrace {
  std::string method;
  std::vector<Query> queries;
  double best_obj = -std::numeric_limits<double>::infinity();
  std::vector<double> best_psi;
  double best_eps_hat = 0.0;
  std::size_t nfuncall = 0;

  /// Running maximum of the objective after each query.
  std::vector<double> best_history() const {
    std::vector<double> out;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& q : queries) out.push_back(best = std::max(best, q.objective));
    return out;
  }
};

namespace detail {

class Recorder {
public:
  Recorder(std::string method, const Objective& f) : f_(f), t0_(std::chrono::steady_clock::now()) {
    trace_.method = std::move(method);
  }

  Evaluation operator()(std::span<const double> x) {
    const auto ev = f_(x);
    const auto now = std::chrono::steady_clock::now();
    Query q{trace_.queries.size() + 1, {x.begin(), x.end()}, ev.eps_hat, ev.objective,
            std::chrono::duration<double, std::milli>(now - t0_).count()};
    if (trace_.queries.empty() || q.objective > trace_.best_obj) {
      trace_.best_obj = q.objective;
      trace_.best_psi = q.psi;
      trace_.best_eps_hat = q.eps_hat;
    }
    trace_.queries.push_back(std::move(q));
    trace_.nfuncall = trace_.queries.size();
    return ev;
  }

  std::size_t count() const { return trace_.queries.size(); }
  const SolveTrace& trace() const { return trace_; }
  SolveTrace take() { return std::move(trace_); }

private:
  const Objective& f_;
  std::chrono::steady_clock::time_point t0_;
  SolveTrace trace_;
};

inline void check_box(const Box& box) {
  if (box.dim() == 0 || box.upper.size() != box.dim()) throw std::invalid_argument("solver: malformed box");
  for (std::size_t d = 0; d < box.dim(); ++d)
    if (!(box.upper[d] > box.lower[d])) throw std::invalid_argument("solver: box has empty extent");
}

}  // namespace detail

inline std::size_t default_initial_design(std::size_t dim) { return std::max<std::size_t>(4, 2 * dim); }

/// Called with every GP fitted by bayesopt, before the acquisition step.
using GpObserver = std::function<void(const GpState&)>;

/// Latin-hypercube initial design, then fit GP / maximise acquisition /
/// evaluate / augment until the budget is spent.
inline SolveTrace bayesopt(const Objective& f, const Box& box, const SolveConfig& cfg,
                           const GpObserver& observer = {}) {
  detail::check_box(box);
  const std::size_t dim = box.dim();
  const std::size_t n0 = cfg.n_initial ? cfg.n_initial : default_initial_design(dim);
  if (n0 < 2 || cfg.budget <= n0)
    throw std::invalid_argument("bayesopt: need budget > n_initial >= 2 (budget " + std::to_string(cfg.budget) +
                                ", n_initial " + std::to_string(n0) + ")");

  Rng rng(cfg.seed);
  detail::Recorder record("bayesopt", f);
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  auto query = [&](std::vector<double> x) {
    const auto ev = record(x);
    X.push_back(std::move(x));
    y.push_back(ev.objective);
  };

  for (auto& u : latin_hypercube(n0, dim, rng)) {
    for (std::size_t d = 0; d < dim; ++d) u[d] = box.lower[d] + u[d] * (box.upper[d] - box.lower[d]);
    query(std::move(u));
  }

  auto is_duplicate = [&](const std::vector<double>& x) {
    for (const auto& seen : X) {
      bool same = true;
      for (std::size_t d = 0; d < dim && same; ++d)
        same = std::abs(x[d] - seen[d]) / (box.upper[d] - box.lower[d]) <= 1e-9;
      if (same) return true;
    }
    return false;
  };

  while (record.count() < cfg.budget) {
    GpConfig gcfg = cfg.gp;
    gcfg.lower = box.lower;
    gcfg.upper = box.upper;
    gcfg.seed = rng.split();
    const auto targets = warp_targets(cfg.warp, y);
    const GpState gp = fit(X, targets, gcfg);
    if (observer) observer(gp);

    AcquisitionConfig acfg = cfg.acquisition;
    acfg.seed = rng.split();
    const double incumbent = *std::max_element(targets.begin(), targets.end());
    const auto acq = maximize_acquisition(gp, box.lower, box.upper, acfg, incumbent);

    std::optional<std::vector<double>> next;
    for (const auto& cand : acq.candidates)
      if (!is_duplicate(cand.point)) {
        next = cand.point;
        break;
      }
    if (!next) {
      std::vector<double> x(dim);
      for (std::size_t d = 0; d < dim; ++d) x[d] = rng.uniform(box.lower[d], box.upper[d]);
      next = std::move(x);
    }
    query(std::move(*next));
  }
  return record.take();
}

/// Coordinate pattern search: +/- step per coordinate, first improvement wins,
/// halve every step after an unsuccessful sweep.
inline SolveTrace pattern_search(const Objective& f, const Box& box, const SolveConfig& cfg) {
  detail::check_box(box);
  if (cfg.budget < 1) throw std::invalid_argument("pattern: budget must be >= 1");
  const std::size_t dim = box.dim();
  Rng rng(cfg.seed);
  std::vector<double> x(dim);
  if (cfg.start) {
    if (cfg.start->size() != dim) throw std::invalid_argument("pattern: start has wrong dimension");
    for (std::size_t d = 0; d < dim; ++d) x[d] = std::clamp((*cfg.start)[d], box.lower[d], box.upper[d]);
  } else {
    for (std::size_t d = 0; d < dim; ++d) x[d] = rng.uniform(box.lower[d], box.upper[d]);
  }

  detail::Recorder record("pattern", f);
  double fx = record(x).objective;
  std::vector<double> step(dim);
  for (std::size_t d = 0; d < dim; ++d) step[d] = (box.upper[d] - box.lower[d]) / 4.0;
  auto small = [&] {
    for (std::size_t d = 0; d < dim; ++d)
      if (step[d] >= 1e-3 * (box.upper[d] - box.lower[d])) return false;
    return true;
  };

  while (record.count() < cfg.budget && !small()) {
    bool improved = false;
    for (std::size_t d = 0; d < dim && record.count() < cfg.budget; ++d) {
      for (double sign : {1.0, -1.0}) {
        auto trial = x;
        trial[d] = std::clamp(x[d] + sign * step[d], box.lower[d], box.upper[d]);
        if (trial[d] == x[d]) continue;
        if (record.count() >= cfg.budget) break;
        const double ft = record(trial).objective;
        if (ft > fx) {
          x = std::move(trial), fx = ft, improved = true;
          break;
        }
      }
    }
    if (!improved)
      for (auto& s : step) s /= 2.0;
  }
  return record.take();
}

/// Exhaustive lattice with points_per_dim points per axis, endpoints included.
inline SolveTrace grid_search(const Objective& f, const Box& box, std::size_t points_per_dim) {
  detail::check_box(box);
  const std::size_t dim = box.dim();
  if (dim > 3) throw std::invalid_argument("grid: at most 3 dimensions (got " + std::to_string(dim) + ")");
  if (points_per_dim < 2) throw std::invalid_argument("grid: points_per_dim must be >= 2");

  auto coord = [&](std::size_t d, std::size_t i) {
    if (i + 1 == points_per_dim) return box.upper[d];
    return box.lower[d] + (box.upper[d] - box.lower[d]) * static_cast<double>(i) /
                              static_cast<double>(points_per_dim - 1);
  };
  detail::Recorder record("grid", f);
  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> x(dim);
  for (;;) {
    for (std::size_t d = 0; d < dim; ++d) x[d] = coord(d, idx[d]);
    record(x);
    std::size_t d = dim;
    while (d > 0 && ++idx[d - 1] == points_per_dim) idx[--d] = 0;
    if (d == 0) break;
  }
  return record.take();
}

inline Objective hosting_objective(const RiskEvaluator& eval, double eps_bar) {
  check_eps_bar(eps_bar);
  return [&eval, eps_bar](std::span<const double> psi) {
    const auto res = eval.penalized_objective(psi, eps_bar);
    return Evaluation{res.eps_hat, res.objective};
  };
}

inline SolveTrace solve_bayesopt(const Network& net, const ScenarioSet& scenarios, const SolveConfig& cfg,
                                 const GpObserver& observer = {}) {
  RiskEvaluator eval(net, scenarios, cfg.threads);
  return bayesopt(hosting_objective(eval, cfg.eps_bar), hosting_box(net), cfg, observer);
}

inline SolveTrace solve_pattern(const Network& net, const ScenarioSet& scenarios, const SolveConfig& cfg) {
  RiskEvaluator eval(net, scenarios, cfg.threads);
  return pattern_search(hosting_objective(eval, cfg.eps_bar), hosting_box(net), cfg);
}

inline SolveTrace solve_grid(const Network& net, const ScenarioSet& scenarios, const SolveConfig& cfg) {
  if (net.num_candidates() > 3) throw std::invalid_argument("grid: at most 3 candidate locations");
  RiskEvaluator eval(net, scenarios, cfg.threads);
  return grid_search(hosting_objective(eval, cfg.eps_bar), hosting_box(net), cfg.points_per_dim);
}

inline SolveTrace solve(const Network& net, const ScenarioSet& scenarios, const SolveConfig& cfg,
                        const GpObserver& observer = {}) {
  switch (cfg.method) {
    case Method::BayesOpt: return solve_bayesopt(net, scenarios, cfg, observer);
    case Method::Pattern: return solve_pattern(net, scenarios, cfg);
    case Method::Grid: return solve_grid(net, scenarios, cfg);
  }
  throw std::invalid_argument("unknown method");
}

// --- trace files ------------------------------------------------------------

/// Wall-clock times are only written when asked for; without them the file is
/// a pure function of the inputs and seed.
inline nlohmann::json to_json(const SolveTrace& tr, bool include_timing = false) {
  nlohmann::json j;
  j["method"] = tr.method;
  j["queries"] = nlohmann::json::array();
  for (const auto& q : tr.queries) {
    nlohmann::json e{{"iter", q.iter}, {"psi", q.psi}, {"eps_hat", q.eps_hat}, {"objective", q.objective}};
    if (include_timing) e["elapsed_ms"] = q.elapsed_ms;
    j["queries"].push_back(std::move(e));
  }
  double raw = 0.0;
  for (double v : tr.best_psi) raw += v;
  j["summary"] = {{"best_obj", tr.best_obj},
                  {"best_psi", tr.best_psi},
                  {"best_eps_hat", tr.best_eps_hat},
                  {"best_raw_capacity", raw},
                  {"nfuncall", tr.nfuncall}};
  return j;
}

inline SolveTrace trace_from_json(const nlohmann::json& j) {
  try {
    SolveTrace tr;
    tr.method = j.value("method", std::string("unknown"));
    for (const auto& e : j.at("queries")) {
      Query q;
      q.iter = e.at("iter").get<std::size_t>();
      q.psi = e.at("psi").get<std::vector<double>>();
      q.eps_hat = e.at("eps_hat").get<double>();
      q.objective = e.at("objective").get<double>();
      q.elapsed_ms = e.value("elapsed_ms", 0.0);
      tr.queries.push_back(std::move(q));
    }
    const auto& s = j.at("summary");
    tr.best_obj = s.at("best_obj").get<double>();
    tr.best_psi = s.at("best_psi").get<std::vector<double>>();
    tr.best_eps_hat = s.value("best_eps_hat", 0.0);
    tr.nfuncall = s.at("nfuncall").get<std::size_t>();
    if (tr.nfuncall != tr.queries.size()) throw std::runtime_error("nfuncall does not match query count");
    return tr;
  } catch (const nlohmann::json::exception& ex) {
    throw std::runtime_error(std::string("malformed trace: ") + ex.what());
  }
}

}  // namespace phca
