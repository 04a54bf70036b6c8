#pragma once

// Empirical violation probability over day scenarios and the penalized
// hosting-capacity objective.
//
// A day counts as violated when any of its snapshots has an unsolvable power
// flow or breaks a voltage or line limit. eps_hat is the fraction of violated
// days.

#include <atomic>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "distflow.hpp"
#include "network.hpp"
#include "scenario.hpp"

namespace phca {

struct RiskResult {
  double eps_hat = 0.0;
  std::vector<int> violated_days;   // day ids, ascending by scenario order
  std::vector<char> day_flags;      // one per day in scenario order, 1 = violated
  std::size_t n_days = 0;
  std::size_t n_snapshots_checked = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();  // set by penalized evaluation
  double raw_capacity = 0.0;        // 1^T psi
};

/// rho(excess) with excess = max(eps_hat - eps_bar, 0) > 0.
using Penalty = std::function<double(double excess, double eps_bar, std::size_t num_candidates)>;

/// |L| * (100 * excess / eps_bar)^2
inline double scaled_quadratic_penalty(double excess, double eps_bar, std::size_t num_candidates) {
  const double z = 100.0 * excess / eps_bar;
  return static_cast<double>(num_candidates) * z * z;
}

inline void check_eps_bar(double eps_bar) {
  if (!(eps_bar > 0.0 && eps_bar < 1.0))
    throw std::invalid_argument("eps_bar must lie in (0, 1), got " + std::to_string(eps_bar));
}

/// c(psi) = 1^T psi - rho(max{eps_hat - eps_bar, 0}) with eps_hat = violated / n_days.
///
/// The exceedance is formed on the count scale, (violated - eps_bar N) / N,
/// which avoids cancellation between two nearby doubles. Feasibility itself is
/// decided by eps_hat <= eps_bar, so feasible points return raw_capacity exactly.
inline double penalized_value(double raw_capacity, std::size_t violated, std::size_t n_days, double eps_bar,
                              std::size_t num_candidates, const Penalty& penalty = scaled_quadratic_penalty) {
  check_eps_bar(eps_bar);
  if (n_days == 0) throw std::invalid_argument("penalized_value: no scenarios");
  const double n = static_cast<double>(n_days);
  const double eps_hat = static_cast<double>(violated) / n;
  if (eps_hat <= eps_bar) return raw_capacity;
  double excess = (static_cast<double>(violated) - eps_bar * n) / n;
  if (!(excess > 0.0)) excess = eps_hat - eps_bar;
  return raw_capacity - penalty(excess, eps_bar, num_candidates);
}

/// Indicator vector z of the big-M formulation: z_i = 1 iff day i is violated.
inline std::vector<int> violation_indicators(const RiskResult& res) {
  return {res.day_flags.begin(), res.day_flags.end()};
}

/// (1/N) sum z_i <= eps_bar
inline bool within_violation_budget(std::span<const int> z, double eps_bar) {
  const auto total = std::accumulate(z.begin(), z.end(), 0L);
  return static_cast<double>(total) / static_cast<double>(z.size()) <= eps_bar;
}

/// Worker count from an explicit request, falling back to PHCA_THREADS, then 1.
inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PHCA_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return 1;
}

/// Evaluates eps_hat and c(psi). Holds references to the network and scenarios,
/// which must outlive it. Not itself thread-safe; it fans out internally.
class RiskEvaluator {
public:
  RiskEvaluator(const Network& net, const ScenarioSet& scenarios, unsigned threads = 1)
      : net_(net), scenarios_(scenarios), threads_(resolve_threads(threads)) {
    if (auto errs = check_scenarios(scenarios, net); !errs.empty()) throw DimensionError(errs.front());
    DistFlowSolver probe(net);  // validates the network once
    (void)probe;
  }

  std::size_t num_candidates() const { return net_.num_candidates(); }
  std::size_t num_days() const { return scenarios_.size(); }
  unsigned threads() const { return threads_; }
  void set_threads(unsigned n) { threads_ = n > 0 ? n : 1; }

  RiskResult violation_probability(std::span<const double> psi) const {
    detail::check_size(psi.size(), net_.num_candidates(), "psi");
    for (double v : psi)
      if (!(v >= 0.0)) throw std::invalid_argument("psi must be non-negative and finite");

    const std::size_t n = scenarios_.size();
    RiskResult res;
    res.n_days = n;
    res.day_flags.assign(n, 0);
    std::vector<std::size_t> checked(n, 0);
    res.raw_capacity = std::accumulate(psi.begin(), psi.end(), 0.0);

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads_, n));
    if (workers <= 1) {
      Workspace ws(net_);
      for (std::size_t i = 0; i < n; ++i) res.day_flags[i] = day_violated(i, psi, ws, checked[i]);
    } else {
      std::atomic<std::size_t> next{0};
      auto work = [&] {
        Workspace ws(net_);
        for (std::size_t i; (i = next.fetch_add(1)) < n;) res.day_flags[i] = day_violated(i, psi, ws, checked[i]);
      };
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    std::size_t violated = 0;
    for (std::size_t i = 0; i < n; ++i) {
      res.n_snapshots_checked += checked[i];
      if (res.day_flags[i]) {
        ++violated;
        res.violated_days.push_back(scenarios_.days[i].day_id);
      }
    }
    res.eps_hat = static_cast<double>(violated) / static_cast<double>(n);
    return res;
  }

  RiskResult penalized_objective(std::span<const double> psi, double eps_bar,
                                 const Penalty& penalty = scaled_quadratic_penalty) const {
    check_eps_bar(eps_bar);
    auto res = violation_probability(psi);
    res.objective = penalized_value(res.raw_capacity, res.violated_days.size(), res.n_days, eps_bar,
                                    net_.num_candidates(), penalty);
    return res;
  }

private:
  struct Workspace {
    explicit Workspace(const Network& net) : solver(net), p(net.num_buses()), q(net.num_buses()) {}
    DistFlowSolver solver;
    std::vector<double> p, q;
  };

  // Stops at the first failing snapshot; membership does not depend on it.
  bool day_violated(std::size_t i, std::span<const double> psi, Workspace& ws, std::size_t& checked) const {
    const auto& day = scenarios_.days[i];
    for (std::size_t t = 0; t < day.snapshots(); ++t) {
      injection_vectors_into(net_, psi, day.alpha.row(t), day.d.row(t), day.e.row(t), ws.p, ws.q);
      ++checked;
      if (!ws.solver.feasible(ws.p, ws.q)) return true;
    }
    return false;
  }

  const Network& net_;
  const ScenarioSet& scenarios_;
  unsigned threads_;
};

}  // namespace phca
