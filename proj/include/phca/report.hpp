#pragma once

// Cross-method comparison of solver traces.

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "solvers.hpp"

namespace phca {

/// Percent by which `ref` beats `other` on best objective (maximisation):
/// (ref - other) / |other| * 100. Infinite when other is 0 and ref differs.
inline double bestobj_improvement(double ref, double other) {
  if (ref == other) return 0.0;
  if (other == 0.0) return ref > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  return (ref - other) / std::abs(other) * 100.0;
}

/// Percent fewer objective evaluations used by `ref`: (other - ref) / other * 100.
inline double nfuncall_improvement(std::size_t ref, std::size_t other) {
  if (other == 0) return ref == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return (static_cast<double>(other) - static_cast<double>(ref)) / static_cast<double>(other) * 100.0;
}

/// method,iter,best_obj,eps_hat; one row per query per trace.
inline std::string history_csv(const std::vector<SolveTrace>& traces) {
  std::string out = "method,iter,best_obj,eps_hat\n";
  char buf[128];
  for (const auto& tr : traces) {
    const auto best = tr.best_history();
    for (std::size_t i = 0; i < tr.queries.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g\n", tr.method.c_str(), tr.queries[i].iter, best[i],
                    tr.queries[i].eps_hat);
      out += buf;
    }
  }
  return out;
}

inline std::string format_percent(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", v);
  return buf;
}

/// One summary row per trace, then the first trace compared against each other one.
inline std::string comparison_table(const std::vector<SolveTrace>& traces, const std::vector<std::string>& labels) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %14s %14s %10s %9s\n", "trace", "bestobj", "1'psi", "eps_hat", "nfuncall");
  out += buf;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    double raw = 0.0;
    for (double v : traces[i].best_psi) raw += v;
    std::snprintf(buf, sizeof buf, "%-24s %14.6f %14.6f %10.4f %9zu\n", labels[i].c_str(), traces[i].best_obj, raw,
                  traces[i].best_eps_hat, traces[i].nfuncall);
    out += buf;
  }
  if (traces.size() > 1) {
    out += "\n";
    std::snprintf(buf, sizeof buf, "%-24s %-24s %22s %22s\n", "reference", "vs", "improvement in bestobj",
                  "improvement in nfuncall");
    out += buf;
    for (std::size_t i = 1; i < traces.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%-24s %-24s %22s %22s\n", labels[0].c_str(), labels[i].c_str(),
                    format_percent(bestobj_improvement(traces[0].best_obj, traces[i].best_obj)).c_str(),
                    format_percent(nfuncall_improvement(traces[0].nfuncall, traces[i].nfuncall)).c_str());
      out += buf;
    }
  }
  return out;
}

}  // namespace phca
