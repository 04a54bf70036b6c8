#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <queue>
#include <string>
#include <vector>

#include <unistd.h>

#include <phca/phca.hpp>

namespace fixtures {

inline std::filesystem::path data_dir() { return PHCA_DATA_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("phca_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

struct Instance {
  phca::Network net;
  phca::ScenarioSet scenarios;
};

inline Instance load(const std::string& name) {
  auto net = phca::read_network((data_dir() / name / "network.json").string());
  auto sc = phca::load_scenarios(data_dir() / name / "scenarios", net);
  return {std::move(net), std::move(sc)};
}

// Bundled 6-node feeder: |L| = 2, 30 days, generated with seed 1, T = 24.
inline Instance feeder6() { return load("feeder6"); }
constexpr double kFeederEpsBar = 0.05;

// Two feasible lobes split by a band where 4-5 of 30 days fail. The pattern
// search start sits in the lower lobe.
inline Instance multimodal() { return load("multimodal"); }
constexpr double kMultimodalEpsBar = 0.1;
inline const std::vector<double> kMultimodalStart{0.15, 0.15};

inline phca::Network two_node(double r, double x, double v0 = 1.0) {
  phca::Network net;
  net.nodes = {{0, 0.81, 1.21}, {1, 0.81, 1.21}};
  net.lines = {{0, 1, r, x, 10.0}};
  net.substation_v0 = v0;
  net.candidates = {1};
  net.psi_max = {1.0};
  net.eta = {0.0};
  return net;
}

/// Random tree: each node attaches to a uniformly chosen earlier node, with
/// node ids shuffled so that parents do not always have smaller ids.
inline phca::Network random_radial(phca::Rng& rng, std::size_t n_nodes) {
  std::vector<int> label(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) label[i] = static_cast<int>(i);
  for (std::size_t i = n_nodes - 1; i > 1; --i) std::swap(label[i], label[1 + rng.index(i)]);

  phca::Network net;
  for (std::size_t i = 0; i < n_nodes; ++i) net.nodes.push_back({static_cast<int>(i), 0.81, 1.21});
  for (std::size_t i = 1; i < n_nodes; ++i) {
    const int parent = label[rng.index(i)], child = label[i];
    const bool flip = rng.uniform() < 0.5;  // line orientation in the file is arbitrary
    net.lines.push_back({flip ? child : parent, flip ? parent : child, rng.uniform(0.001, 0.01),
                         rng.uniform(0.001, 0.01), 10.0});
  }
  net.candidates = {label[n_nodes - 1]};
  net.psi_max = {1.0};
  net.eta = {0.0};
  return net;
}

/// Moderate loading: total load about 1 p.u. spread over the buses, with some
/// generation mixed in.
inline phca::Injections random_injections(phca::Rng& rng, std::size_t n_buses) {
  phca::Injections inj{std::vector<double>(n_buses), std::vector<double>(n_buses)};
  const double scale = 1.0 / static_cast<double>(n_buses);
  for (std::size_t j = 0; j < n_buses; ++j) {
    inj.p[j] = scale * rng.uniform(-2.0, 1.0);
    inj.q[j] = scale * rng.uniform(-0.8, 0.4);
  }
  return inj;
}

/// Max absolute residual of the four branch-flow equations, computed from the
/// line list alone (no solver internals).
inline double distflow_residual(const phca::Network& net, const phca::FlowSolution& sol, std::span<const double> p,
                                std::span<const double> q, double loss_sign = 1.0) {
  const std::size_t n = net.nodes.size();
  std::vector<std::vector<std::pair<int, std::size_t>>> adj(n);
  for (std::size_t k = 0; k < net.lines.size(); ++k) {
    adj[net.lines[k].from].push_back({net.lines[k].to, k});
    adj[net.lines[k].to].push_back({net.lines[k].from, k});
  }
  std::vector<int> parent(n, -1), parent_line(n, -1);
  std::vector<char> seen(n, 0);
  std::queue<int> bfs;
  bfs.push(0);
  seen[0] = 1;
  while (!bfs.empty()) {
    const int i = bfs.front();
    bfs.pop();
    for (auto [j, k] : adj[i])
      if (!seen[j]) seen[j] = 1, parent[j] = i, parent_line[j] = static_cast<int>(k), bfs.push(j);
  }
  double worst = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const auto k = static_cast<std::size_t>(parent_line[j]);
    const auto& ln = net.lines[k];
    double outP = 0.0, outQ = 0.0;
    for (auto [c, kc] : adj[j])
      if (c != parent[j]) outP += sol.P[kc], outQ += sol.Q[kc];
    const double vi = sol.v[parent[j]];
    const double r1 = p[j - 1] + sol.P[k] - ln.r * sol.l[k] - outP;
    const double r2 = q[j - 1] + sol.Q[k] - ln.x * sol.l[k] - outQ;
    const double r3 = vi - sol.v[j] - 2.0 * (ln.r * sol.P[k] + ln.x * sol.Q[k]) -
                      loss_sign * (ln.r * ln.r + ln.x * ln.x) * sol.l[k];
    const double r4 = sol.l[k] * vi - (sol.P[k] * sol.P[k] + sol.Q[k] * sol.Q[k]);
    worst = std::max({worst, std::abs(r1), std::abs(r2), std::abs(r3), std::abs(r4) / vi});
  }
  return worst;
}

/// Single line: l v0 = (r l - p)^2 + (x l - q)^2, smaller root by bisection.
/// Returns NaN when the quadratic has no non-negative real root.
inline double two_node_current(double r, double x, double p, double q, double v0) {
  const double a = r * r + x * x, b = -(2.0 * r * p + 2.0 * x * q + v0), c = p * p + q * q;
  if (b * b - 4.0 * a * c < 0.0 || b > 0.0) return std::nan("");
  auto f = [&](double l) { return (a * l + b) * l + c; };
  double lo = 0.0, hi = -b / (2.0 * a);  // f(lo) >= 0 >= f(hi)
  for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Exhaustive per-snapshot recheck of one day: any non-converged or
/// limit-violating snapshot marks the day. No early exit.
inline bool day_violated_exhaustive(const phca::Network& net, const phca::DayScenario& day,
                                    std::span<const double> psi) {
  bool bad = false;
  for (std::size_t t = 0; t < day.snapshots(); ++t) {
    const auto inj = phca::injection_vectors(net, psi, day.alpha.row(t), day.d.row(t), day.e.row(t));
    const auto sol = phca::solve_distflow(net, inj.p, inj.q);
    if (!phca::check_limits(net, sol).feasible) bad = true;
  }
  return bad;
}

}  // namespace fixtures
