#pragma once

// DistFlow branch-flow equations on a radial feeder, solved by a
// backward-forward sweep. For every line (i, j), with i the parent of j:
//
//   p_j + P_ij = r_ij l_ij + sum_k P_jk
//   q_j + Q_ij = x_ij l_ij + sum_k Q_jk
//   v_i - v_j  = 2 (r_ij P_ij + x_ij Q_ij) + (r_ij^2 + x_ij^2) l_ij
//   l_ij       = (P_ij^2 + Q_ij^2) / v_i
//
// v is the squared voltage magnitude throughout. The loss term in the voltage
// equation follows the form above by default; the textbook Baran-Wu form
// (v_i - v_j = 2(rP + xQ) - (r^2 + x^2) l) is available through
// DistFlowOptions::baran_wu_loss_sign. The two differ only at second order.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "network.hpp"

namespace phca {

struct FlowSolution {
  std::vector<double> P, Q, l;  // per line, oriented parent -> child
  std::vector<double> v;        // per node id, v[0] = substation
  bool converged = false;
  bool voltage_collapse = false;  // sweep produced v <= 0 somewhere
  int iterations = 0;
  double residual = 0.0;  // max |equation residual| at the returned point

  bool operator==(const FlowSolution&) const = default;
};

struct VoltageViolation {
  int node;
  double v;
  double bound;
};

struct LineViolation {
  int line;
  double apparent_power;
  double s_max;
};

struct LimitReport {
  std::vector<VoltageViolation> voltage_violations;
  std::vector<LineViolation> line_violations;
  bool feasible = false;
};

struct DistFlowOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
  bool baran_wu_loss_sign = false;
};

class DistFlowSolver {
public:
  explicit DistFlowSolver(const Network& net, DistFlowOptions opts = {})
      : net_(&net), topo_(net), opts_(opts), v0_(net.substation_v0), loss_sign_(opts.baran_wu_loss_sign ? -1.0 : 1.0) {
    const auto n = topo_.num_nodes;
    P_.resize(n), Q_.resize(n), l_.resize(n), v_.resize(n), accP_.resize(n), accQ_.resize(n);
  }

  const RadialTopology& topology() const { return topo_; }

  /// Solve for injections p, q indexed by node id - 1.
  FlowSolution solve(std::span<const double> p, std::span<const double> q) {
    const bool ok = sweep(p, q);
    FlowSolution sol;
    const auto nl = net_->lines.size();
    sol.P.resize(nl), sol.Q.resize(nl), sol.l.resize(nl);
    for (std::size_t k = 0; k < nl; ++k) {
      const int j = topo_.line_child[k];
      sol.P[k] = P_[j], sol.Q[k] = Q_[j], sol.l[k] = l_[j];
    }
    sol.v = v_;
    sol.converged = ok;
    sol.voltage_collapse = collapse_;
    sol.iterations = iterations_;
    sol.residual = residual_;
    return sol;
  }

  /// Solve and test voltage/line limits without materialising a FlowSolution.
  /// Non-convergence counts as infeasible.
  bool feasible(std::span<const double> p, std::span<const double> q) {
    if (!sweep(p, q)) return false;
    for (std::size_t j = 1; j < topo_.num_nodes; ++j) {
      if (v_[j] < topo_.v_min[j] || v_[j] > topo_.v_max[j]) return false;
      const double s2 = P_[j] * P_[j] + Q_[j] * Q_[j];
      const double smax = net_->lines[topo_.parent_line[j]].s_max;
      if (s2 > smax * smax) return false;
    }
    return true;
  }

private:
  bool sweep(std::span<const double> p, std::span<const double> q) {
    const auto n = topo_.num_nodes;
    detail::check_size(p.size(), n - 1, "p");
    detail::check_size(q.size(), n - 1, "q");
    std::fill(l_.begin(), l_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), v0_);
    P_[0] = Q_[0] = 0.0;
    collapse_ = false;
    residual_ = 0.0;
    const auto& order = topo_.order;

    for (iterations_ = 1; iterations_ <= opts_.max_iterations; ++iterations_) {
      // backward: flows leaf to root
      std::fill(accP_.begin(), accP_.end(), 0.0);
      std::fill(accQ_.begin(), accQ_.end(), 0.0);
      for (std::size_t idx = n - 1; idx >= 1; --idx) {
        const int j = order[idx];
        P_[j] = topo_.r[j] * l_[j] + accP_[j] - p[j - 1];
        Q_[j] = topo_.x[j] * l_[j] + accQ_[j] - q[j - 1];
        accP_[topo_.parent[j]] += P_[j];
        accQ_[topo_.parent[j]] += Q_[j];
      }
      // forward: voltages root to leaf
      for (std::size_t idx = 1; idx < n; ++idx) {
        const int j = order[idx];
        const double r = topo_.r[j], x = topo_.x[j];
        v_[j] = v_[topo_.parent[j]] - 2.0 * (r * P_[j] + x * Q_[j]) - loss_sign_ * (r * r + x * x) * l_[j];
        if (!(v_[j] > 0.0)) {
          collapse_ = true;
          residual_ = compute_residual(p, q);
          return false;
        }
      }
      for (std::size_t j = 1; j < n; ++j)
        l_[j] = (P_[j] * P_[j] + Q_[j] * Q_[j]) / v_[topo_.parent[j]];

      residual_ = compute_residual(p, q);
      if (!std::isfinite(residual_)) return false;
      if (residual_ <= opts_.tolerance) return true;
    }
    iterations_ = opts_.max_iterations;
    return false;
  }

  double compute_residual(std::span<const double> p, std::span<const double> q) {
    const auto n = topo_.num_nodes;
    std::fill(accP_.begin(), accP_.end(), 0.0);
    std::fill(accQ_.begin(), accQ_.end(), 0.0);
    for (std::size_t j = 1; j < n; ++j) {
      accP_[topo_.parent[j]] += P_[j];
      accQ_[topo_.parent[j]] += Q_[j];
    }
    double worst = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
      const double r = topo_.r[j], x = topo_.x[j];
      const double vi = v_[topo_.parent[j]];
      const double ra = p[j - 1] + P_[j] - r * l_[j] - accP_[j];
      const double rb = q[j - 1] + Q_[j] - x * l_[j] - accQ_[j];
      const double rc = vi - v_[j] - 2.0 * (r * P_[j] + x * Q_[j]) - loss_sign_ * (r * r + x * x) * l_[j];
      const double rd = l_[j] - (P_[j] * P_[j] + Q_[j] * Q_[j]) / vi;
      worst = std::max({worst, std::abs(ra), std::abs(rb), std::abs(rc), std::abs(rd)});
      if (!std::isfinite(ra + rb + rc + rd)) return std::numeric_limits<double>::infinity();
    }
    return worst;
  }

  const Network* net_;
  RadialTopology topo_;
  DistFlowOptions opts_;
  double v0_;
  double loss_sign_;
  std::vector<double> P_, Q_, l_, v_, accP_, accQ_;  // indexed by child node id
  bool collapse_ = false;
  int iterations_ = 0;
  double residual_ = 0.0;
};

inline FlowSolution solve_distflow(const Network& net, std::span<const double> p, std::span<const double> q,
                                   DistFlowOptions opts = {}) {
  DistFlowSolver solver(net, opts);
  return solver.solve(p, q);
}

/// Voltage bounds on non-substation nodes and apparent-power limits on lines
/// (non-strict: P^2 + Q^2 == s_max^2 is allowed).
inline LimitReport check_limits(const Network& net, const FlowSolution& sol) {
  LimitReport rep;
  for (const auto& nd : net.nodes) {
    if (nd.id == 0 || static_cast<std::size_t>(nd.id) >= sol.v.size()) continue;
    const double v = sol.v[nd.id];
    if (v < nd.v_min) rep.voltage_violations.push_back({nd.id, v, nd.v_min});
    else if (v > nd.v_max) rep.voltage_violations.push_back({nd.id, v, nd.v_max});
  }
  for (std::size_t k = 0; k < net.lines.size() && k < sol.P.size(); ++k) {
    const double s2 = sol.P[k] * sol.P[k] + sol.Q[k] * sol.Q[k];
    const double smax = net.lines[k].s_max;
    if (s2 > smax * smax) rep.line_violations.push_back({static_cast<int>(k), std::sqrt(s2), smax});
  }
  rep.feasible = sol.converged && rep.voltage_violations.empty() && rep.line_violations.empty();
  return rep;
}

}  // namespace phca
