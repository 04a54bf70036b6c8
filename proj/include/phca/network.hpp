#pragma once

// Radial distribution feeder: topology, bounds, DER candidate sites.
//
// Node 0 is the substation. Non-substation nodes are 1..|V|; all per-node
// vectors (injections, loads) are indexed by node id - 1.

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace phca {

class NetworkError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Node {
  int id = 0;
  double v_min = 0.81;  // squared magnitude, p.u.^2
  double v_max = 1.21;
  bool operator==(const Node&) const = default;
};

struct Line {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double s_max = 1.0;
  bool operator==(const Line&) const = default;
};

struct Network {
  std::vector<Node> nodes;  // substation + |V| nodes
  std::vector<Line> lines;
  double substation_v0 = 1.0;
  std::vector<int> candidates;  // DER k sits at node candidates[k]
  std::vector<double> psi_max;  // per candidate
  std::vector<double> eta;      // reactive per unit real output, per candidate

  std::size_t num_buses() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  std::size_t num_candidates() const { return candidates.size(); }

  bool operator==(const Network&) const = default;
};

/// Every invariant breach found; empty means the network is usable.
inline std::vector<std::string> validate(const Network& net) {
  std::vector<std::string> out;
  auto report = [&](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    out.push_back(os.str());
  };

  const std::size_t n = net.nodes.size();
  if (n < 2) report("network needs a substation and at least one node (got ", n, " nodes)");

  std::vector<int> seen(n, 0);
  for (const auto& nd : net.nodes) {
    if (nd.id < 0 || static_cast<std::size_t>(nd.id) >= n) {
      report("node id ", nd.id, " out of range [0, ", n, ")");
      continue;
    }
    if (seen[nd.id]++) report("duplicate node id ", nd.id);
    if (!(nd.v_min > 0.0 && nd.v_min < nd.v_max))
      report("node ", nd.id, ": voltage bounds must satisfy 0 < v_min < v_max (got ", nd.v_min, ", ",
             nd.v_max, ")");
  }
  if (!(net.substation_v0 > 0.0)) report("substation_v0 must be positive (got ", net.substation_v0, ")");

  auto valid_id = [&](int id) { return id >= 0 && static_cast<std::size_t>(id) < n; };

  // union-find for cycle detection
  std::vector<std::size_t> root(n);
  std::iota(root.begin(), root.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (root[a] != a) a = root[a] = root[root[a]];
    return a;
  };
  bool cycle = false;
  std::vector<std::vector<int>> adj(n);
  for (std::size_t k = 0; k < net.lines.size(); ++k) {
    const auto& ln = net.lines[k];
    if (!valid_id(ln.from) || !valid_id(ln.to)) {
      report("line ", k, ": endpoint out of range (", ln.from, " -> ", ln.to, ")");
      continue;
    }
    if (ln.from == ln.to) report("line ", k, ": self loop at node ", ln.from);
    if (ln.r < 0.0 || ln.x < 0.0 || !(ln.r + ln.x > 0.0))
      report("line ", k, ": impedance must satisfy r >= 0, x >= 0, r + x > 0 (got r=", ln.r, ", x=", ln.x, ")");
    if (!(ln.s_max > 0.0)) report("line ", k, ": s_max must be positive (got ", ln.s_max, ")");
    adj[ln.from].push_back(ln.to);
    adj[ln.to].push_back(ln.from);
    const auto a = find(ln.from), b = find(ln.to);
    if (a == b) {
      if (!cycle) report("cycle detected at line ", k, " (", ln.from, " - ", ln.to, ")");
      cycle = true;
    } else {
      root[a] = b;
    }
  }
  if (n >= 1 && net.lines.size() != n - 1)
    report("not a tree: |E| = ", net.lines.size(), " but |V| = ", n - 1);

  if (n >= 1) {
    std::vector<char> reached(n, 0);
    std::queue<int> bfs;
    bfs.push(0);
    reached[0] = 1;
    while (!bfs.empty()) {
      const int u = bfs.front();
      bfs.pop();
      for (int w : adj[u])
        if (!reached[w]) reached[w] = 1, bfs.push(w);
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!reached[i]) report("node ", i, " is not connected to the substation");
  }

  if (net.candidates.empty()) report("at least one DER candidate location is required");
  std::vector<int> sorted = net.candidates;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) report("duplicate candidate location");
  for (int c : net.candidates)
    if (c < 1 || static_cast<std::size_t>(c) >= n) report("candidate ", c, " is not a non-substation node");
  if (net.psi_max.size() != net.candidates.size())
    report("psi_max has ", net.psi_max.size(), " entries, expected ", net.candidates.size());
  for (std::size_t k = 0; k < net.psi_max.size(); ++k)
    if (!(net.psi_max[k] > 0.0)) report("psi_max[", k, "] must be positive");
  if (net.eta.size() != net.candidates.size())
    report("eta has ", net.eta.size(), " entries, expected ", net.candidates.size());
  return out;
}

/// Tree view of a valid network, oriented away from the substation.
struct RadialTopology {
  std::size_t num_nodes = 0;          // |V| + 1
  std::vector<int> parent;            // parent[0] = -1
  std::vector<int> parent_line;       // index into Network::lines, -1 for root
  std::vector<int> order;             // BFS order from the root, root first
  std::vector<std::vector<int>> children;
  std::vector<double> r, x;           // impedance of the line feeding node j
  std::vector<int> line_child;        // line k feeds node line_child[k]
  std::vector<double> v_min, v_max;   // by node id

  explicit RadialTopology(const Network& net) {
    if (auto errs = validate(net); !errs.empty()) throw NetworkError("invalid network: " + errs.front());
    num_nodes = net.nodes.size();
    parent.assign(num_nodes, -1);
    parent_line.assign(num_nodes, -1);
    children.assign(num_nodes, {});
    r.assign(num_nodes, 0.0);
    x.assign(num_nodes, 0.0);
    v_min.assign(num_nodes, 0.0);
    v_max.assign(num_nodes, 0.0);
    line_child.assign(net.lines.size(), -1);
    for (const auto& nd : net.nodes) v_min[nd.id] = nd.v_min, v_max[nd.id] = nd.v_max;

    std::vector<std::vector<int>> incident(num_nodes);
    for (std::size_t k = 0; k < net.lines.size(); ++k) {
      incident[net.lines[k].from].push_back(static_cast<int>(k));
      incident[net.lines[k].to].push_back(static_cast<int>(k));
    }
    std::vector<char> seen(num_nodes, 0);
    order.reserve(num_nodes);
    order.push_back(0);
    seen[0] = 1;
    for (std::size_t head = 0; head < order.size(); ++head) {
      const int u = order[head];
      for (int k : incident[u]) {
        const auto& ln = net.lines[k];
        const int w = ln.from == u ? ln.to : ln.from;
        if (seen[w]) continue;
        seen[w] = 1;
        parent[w] = u;
        parent_line[w] = k;
        line_child[k] = w;
        r[w] = ln.r;
        x[w] = ln.x;
        children[u].push_back(w);
        order.push_back(w);
      }
    }
  }
};

namespace detail {
inline void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                         std::to_string(got));
}
}  // namespace detail

/// Nodal injections p = A diag(alpha) psi - d, q = A diag(eta) diag(alpha) psi - e,
/// written into caller-owned buffers of length |V|.
inline void injection_vectors_into(const Network& net, std::span<const double> psi, std::span<const double> alpha,
                                   std::span<const double> d, std::span<const double> e, std::span<double> p,
                                   std::span<double> q) {
  const std::size_t nv = net.num_buses(), nl = net.num_candidates();
  detail::check_size(psi.size(), nl, "psi");
  detail::check_size(alpha.size(), nl, "alpha");
  detail::check_size(d.size(), nv, "d");
  detail::check_size(e.size(), nv, "e");
  detail::check_size(p.size(), nv, "p");
  detail::check_size(q.size(), nv, "q");
  for (std::size_t j = 0; j < nv; ++j) p[j] = -d[j], q[j] = -e[j];
  for (std::size_t k = 0; k < nl; ++k) {
    const double out = alpha[k] * psi[k];
    const auto j = static_cast<std::size_t>(net.candidates[k] - 1);
    p[j] += out;
    q[j] += net.eta[k] * out;
  }
}

struct Injections {
  std::vector<double> p, q;
};

inline Injections injection_vectors(const Network& net, std::span<const double> psi, std::span<const double> alpha,
                                    std::span<const double> d, std::span<const double> e) {
  Injections inj{std::vector<double>(net.num_buses()), std::vector<double>(net.num_buses())};
  injection_vectors_into(net, psi, alpha, d, e, inj.p, inj.q);
  return inj;
}

// --- serialization ----------------------------------------------------------

inline nlohmann::json to_json(const Network& net) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& nd : net.nodes) j["nodes"].push_back({{"id", nd.id}, {"v_min", nd.v_min}, {"v_max", nd.v_max}});
  j["lines"] = nlohmann::json::array();
  for (const auto& ln : net.lines)
    j["lines"].push_back({{"from", ln.from}, {"to", ln.to}, {"r", ln.r}, {"x", ln.x}, {"s_max", ln.s_max}});
  j["substation_v0"] = net.substation_v0;
  j["candidates"] = net.candidates;
  j["psi_max"] = net.psi_max;
  j["eta"] = net.eta;
  return j;
}

inline Network network_from_json(const nlohmann::json& j) {
  try {
    Network net;
    for (const auto& nd : j.at("nodes"))
      net.nodes.push_back({nd.at("id").get<int>(), nd.at("v_min").get<double>(), nd.at("v_max").get<double>()});
    for (const auto& ln : j.at("lines"))
      net.lines.push_back({ln.at("from").get<int>(), ln.at("to").get<int>(), ln.at("r").get<double>(),
                           ln.at("x").get<double>(), ln.at("s_max").get<double>()});
    net.substation_v0 = j.value("substation_v0", 1.0);
    net.candidates = j.at("candidates").get<std::vector<int>>();
    net.psi_max = j.at("psi_max").get<std::vector<double>>();
    net.eta = j.at("eta").get<std::vector<double>>();
    return net;
  } catch (const nlohmann::json::exception& ex) {
    throw NetworkError(std::string("malformed network json: ") + ex.what());
  }
}

inline Network read_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open network file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw NetworkError(path + ": " + ex.what());
  }
  return network_from_json(j);
}

}  // namespace phca
