// phca: command-line front end for the hosting-capacity library.
//
// Exit codes: 0 success, 1 validation failure (bad input data or arguments),
// 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <phca/phca.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kRuntime = 2 };

struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

phca::Network load_valid_network(const std::string& path) {
  auto net = phca::read_network(path);
  if (auto errs = phca::validate(net); !errs.empty()) {
    std::string msg = path + ": invalid network";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ValidationFailure(msg);
  }
  return net;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else phca::atomic_write(out, text);
}

// --- validate ------------------------------------------------------------------

int cmd_validate(const std::string& network_path, const std::string& scenario_dir) {
  phca::Network net;
  try {
    net = phca::read_network(network_path);
  } catch (const phca::NetworkError& ex) {
    std::cout << ex.what() << "\n";
    return kInvalid;
  }
  auto errs = phca::validate(net);
  for (const auto& e : errs) std::cout << network_path << ": " << e << "\n";
  if (errs.empty() && !scenario_dir.empty()) {
    try {
      const auto set = phca::load_scenarios(scenario_dir, net);
      for (const auto& e : phca::check_scenarios(set, net)) {
        std::cout << scenario_dir << ": " << e << "\n";
        errs.push_back(e);
      }
    } catch (const phca::ScenarioError& ex) {
      std::cout << ex.what() << "\n";
      errs.emplace_back(ex.what());
    }
  }
  if (!errs.empty()) return kInvalid;
  std::cout << "OK\n";
  return kOk;
}

// --- powerflow -----------------------------------------------------------------

// CSV with header node,p,q; one row per non-substation node, p/q are net injections.
phca::Injections read_injections(const std::string& path, const phca::Network& net) {
  const auto text = phca::read_file(path);
  const std::size_t nv = net.num_buses();
  phca::Injections inj{std::vector<double>(nv, 0.0), std::vector<double>(nv, 0.0)};
  std::vector<char> seen(nv, 0);
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = phca::detail::split_csv(line);
    if (row == 1) {
      if (cells.size() != 3 || cells[0] != "node" || cells[1] != "p" || cells[2] != "q")
        throw ValidationFailure(path + ": header must be node,p,q");
      continue;
    }
    const auto where = path + " row " + std::to_string(row);
    if (cells.size() != 3) throw ValidationFailure(where + ": expected 3 columns");
    double node = 0, p = 0, q = 0;
    using phca::detail::parse_double;
    if (!parse_double(cells[0], node) || !parse_double(cells[1], p) || !parse_double(cells[2], q))
      throw ValidationFailure(where + ": non-numeric cell");
    const long id = std::lround(node);
    if (id < 1 || static_cast<std::size_t>(id) > nv || static_cast<double>(id) != node)
      throw ValidationFailure(where + ": node must be an integer in 1.." + std::to_string(nv));
    if (seen[id - 1]++) throw ValidationFailure(where + ": node " + std::to_string(id) + " listed twice");
    inj.p[id - 1] = p;
    inj.q[id - 1] = q;
  }
  return inj;
}

int cmd_powerflow(const std::string& network_path, const std::string& injections_path, const std::string& out) {
  const auto net = load_valid_network(network_path);
  const auto inj = read_injections(injections_path, net);
  const auto sol = phca::solve_distflow(net, inj.p, inj.q);
  const auto lim = phca::check_limits(net, sol);

  json j{{"converged", sol.converged},
         {"voltage_collapse", sol.voltage_collapse},
         {"iterations", sol.iterations},
         {"residual", sol.residual},
         {"v", sol.v},
         {"P", sol.P},
         {"Q", sol.Q},
         {"l", sol.l},
         {"feasible", lim.feasible}};
  j["voltage_violations"] = json::array();
  for (const auto& vv : lim.voltage_violations)
    j["voltage_violations"].push_back({{"node", vv.node}, {"v", vv.v}, {"bound", vv.bound}});
  j["line_violations"] = json::array();
  for (const auto& lv : lim.line_violations)
    j["line_violations"].push_back({{"line", lv.line}, {"apparent_power", lv.apparent_power}, {"s_max", lv.s_max}});
  emit(out, j.dump(2) + "\n");
  return kOk;
}

// --- evaluate ------------------------------------------------------------------

int cmd_evaluate(const std::string& network_path, const std::string& scenario_dir, const std::vector<double>& psi,
                 double eps_bar, unsigned threads, bool verbose, const std::string& out) {
  const auto net = load_valid_network(network_path);
  const auto set = phca::load_scenarios(scenario_dir, net);
  phca::check_eps_bar(eps_bar);
  phca::RiskEvaluator eval(net, set, threads);
  const auto res = eval.penalized_objective(psi, eps_bar);

  json j{{"psi", psi},
         {"eps_hat", res.eps_hat},
         {"eps_bar", eps_bar},
         {"feasible", res.eps_hat <= eps_bar},
         {"raw_capacity", res.raw_capacity},
         {"objective", res.objective},
         {"n_days", res.n_days},
         {"violated_days", res.violated_days}};
  if (verbose) j["snapshots_checked"] = res.n_snapshots_checked;
  emit(out, j.dump(2) + "\n");
  return kOk;
}

// --- generate ------------------------------------------------------------------

int cmd_generate(const std::string& network_path, const std::string& out_dir, std::size_t days, std::size_t T,
                 std::uint64_t seed, const std::string& mixture_path) {
  const auto net = load_valid_network(network_path);
  phca::ScenarioSet set;
  if (!mixture_path.empty()) {
    json mix;
    try {
      mix = json::parse(phca::read_file(mixture_path));
    } catch (const json::exception& ex) {
      throw ValidationFailure(mixture_path + ": " + ex.what());
    }
    const auto [classes, t] = phca::mixture_from_json(mix);
    set = phca::generate_mixture(net, classes, t);
  } else {
    set = phca::generate_synthetic(net, days, T, seed);
  }
  phca::write_scenarios(out_dir, set);
  std::cout << "wrote " << set.size() << " days x " << set.T << " snapshots to " << out_dir << "\n";
  return kOk;
}

// --- solve ---------------------------------------------------------------------

struct SolveArgs {
  std::string network, scenarios, out = "trace.json", method = "bayesopt", acquisition = "ei", warp = "rank";
  std::size_t budget = 150, n_initial = 0, points_per_dim = 11;
  std::uint64_t seed = 7;
  double eps_bar = 0.05;
  std::vector<double> start;
  unsigned threads = 0;
  bool timing = false;
};

phca::OutputWarp parse_warp(const std::string& s) {
  if (s == "rank") return phca::OutputWarp::Rank;
  if (s == "signed-log") return phca::OutputWarp::SignedLog;
  if (s == "none") return phca::OutputWarp::None;
  throw ValidationFailure("unknown warp '" + s + "'");
}

std::string summary_table(const phca::SolveTrace& tr, double eps_bar) {
  double raw = 0.0;
  for (double v : tr.best_psi) raw += v;
  std::string psi;
  for (std::size_t i = 0; i < tr.best_psi.size(); ++i) psi += (i ? ", " : "") + fmt("%.4f", tr.best_psi[i]);
  std::string s;
  s += "method        " + tr.method + "\n";
  s += "bestobj       " + fmt("%.6f", tr.best_obj) + "\n";
  s += "1'psi         " + fmt("%.6f", raw) + "\n";
  s += "best_psi      [" + psi + "]\n";
  s += "eps_hat       " + fmt("%.4f", tr.best_eps_hat) + "  (eps_bar " + fmt("%.4f", eps_bar) + ")\n";
  s += "nfuncall      " + std::to_string(tr.nfuncall) + "\n";
  return s;
}

int cmd_solve(const SolveArgs& a) {
  const auto net = load_valid_network(a.network);
  const auto set = phca::load_scenarios(a.scenarios, net);
  phca::check_eps_bar(a.eps_bar);

  phca::SolveConfig cfg;
  cfg.method = phca::method_from_string(a.method);
  cfg.budget = a.budget;
  cfg.n_initial = a.n_initial;
  cfg.eps_bar = a.eps_bar;
  cfg.seed = a.seed;
  cfg.points_per_dim = a.points_per_dim;
  cfg.threads = a.threads;
  cfg.warp = parse_warp(a.warp);
  if (a.acquisition == "ei") cfg.acquisition.kind = phca::AcquisitionKind::ExpectedImprovement;
  else if (a.acquisition == "pi") cfg.acquisition.kind = phca::AcquisitionKind::ProbabilityOfImprovement;
  else throw ValidationFailure("unknown acquisition '" + a.acquisition + "' (expected ei or pi)");
  if (!a.start.empty()) {
    if (a.start.size() != net.num_candidates())
      throw ValidationFailure("--start needs " + std::to_string(net.num_candidates()) + " values");
    cfg.start = a.start;
  }

  const auto trace = phca::solve(net, set, cfg);
  phca::atomic_write(a.out, phca::to_json(trace, a.timing).dump(2) + "\n");
  std::cout << summary_table(trace, a.eps_bar);
  return kOk;
}

// --- report --------------------------------------------------------------------

int cmd_report(const std::vector<std::string>& traces, std::vector<std::string> labels, const std::string& csv,
               const std::string& out) {
  if (!labels.empty() && labels.size() != traces.size())
    throw ValidationFailure("--labels needs one label per trace file");
  std::vector<phca::SolveTrace> loaded;
  for (const auto& path : traces) {
    try {
      loaded.push_back(phca::trace_from_json(json::parse(phca::read_file(path))));
    } catch (const json::exception& ex) {
      throw ValidationFailure(path + ": " + ex.what());
    } catch (const std::runtime_error& ex) {
      throw ValidationFailure(path + ": " + ex.what());
    }
  }
  if (labels.empty())
    for (const auto& path : traces) labels.push_back(fs::path(path).stem().string());
  if (!csv.empty()) phca::atomic_write(csv, phca::history_csv(loaded));
  emit(out, phca::comparison_table(loaded, labels));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic hosting capacity analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "phca 1.0.0");

  std::string network, scenarios, out;
  auto* validate = app.add_subcommand("validate", "Check a network and (optionally) a scenario directory");
  validate->add_option("--network", network, "Network JSON")->required();
  validate->add_option("--scenarios", scenarios, "Scenario directory");

  std::string injections;
  auto* powerflow = app.add_subcommand("powerflow", "Solve one DistFlow snapshot");
  powerflow->add_option("--network", network, "Network JSON")->required();
  powerflow->add_option("--injections", injections, "CSV with header node,p,q")->required();
  powerflow->add_option("--out", out, "Output JSON (default stdout)");

  std::vector<double> psi;
  double eps_bar = 0.05;
  unsigned threads = 0;
  bool verbose = false;
  auto* evaluate = app.add_subcommand("evaluate", "Violation probability and penalized objective at one psi");
  evaluate->add_option("--network", network, "Network JSON")->required();
  evaluate->add_option("--scenarios", scenarios, "Scenario directory")->required();
  evaluate->add_option("--psi", psi, "Installation levels, comma separated")->required()->delimiter(',');
  evaluate->add_option("--eps-bar", eps_bar, "Risk level in (0, 1)");
  evaluate->add_option("--threads", threads, "Worker threads (default: PHCA_THREADS, else 1)");
  evaluate->add_flag("--verbose", verbose, "Include snapshot counts");
  evaluate->add_option("--out", out, "Output JSON (default stdout)");

  std::size_t days = 30, T = 24;
  std::uint64_t seed = 1;
  std::string mixture;
  auto* generate = app.add_subcommand("generate", "Write synthetic day scenarios");
  generate->add_option("--network", network, "Network JSON")->required();
  generate->add_option("--out", out, "Output directory")->required();
  auto* days_opt = generate->add_option("--days", days, "Number of days")->check(CLI::PositiveNumber);
  auto* t_opt = generate->add_option("--snapshots", T, "Snapshots per day")->check(CLI::PositiveNumber);
  auto* seed_opt = generate->add_option("--seed", seed, "Generator seed");
  generate->add_option("--mixture", mixture, "JSON list of profile classes")
      ->excludes(days_opt)
      ->excludes(t_opt)
      ->excludes(seed_opt);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Maximise hosting capacity");
  solve->add_option("--network", sa.network, "Network JSON")->required();
  solve->add_option("--scenarios", sa.scenarios, "Scenario directory")->required();
  solve->add_option("--method", sa.method, "bayesopt, pattern or grid")
      ->check(CLI::IsMember({"bayesopt", "pattern", "grid"}));
  solve->add_option("--budget", sa.budget, "Objective evaluations (bayesopt, pattern)");
  solve->add_option("--n-initial", sa.n_initial, "Initial design size (default max(4, 2|L|))");
  solve->add_option("--seed", sa.seed, "Seed");
  solve->add_option("--eps-bar", sa.eps_bar, "Risk level in (0, 1)");
  solve->add_option("--out", sa.out, "Trace JSON");
  solve->add_option("--points-per-dim", sa.points_per_dim, "Grid resolution");
  solve->add_option("--start", sa.start, "Pattern search start, comma separated")->delimiter(',');
  solve->add_option("--acquisition", sa.acquisition, "ei or pi")->check(CLI::IsMember({"ei", "pi"}));
  solve->add_option("--warp", sa.warp, "Surrogate output transform: rank, signed-log or none")
      ->check(CLI::IsMember({"rank", "signed-log", "none"}));
  solve->add_option("--threads", sa.threads, "Worker threads (default: PHCA_THREADS, else 1)");
  solve->add_flag("--timing", sa.timing, "Record elapsed_ms per query (trace no longer reproducible)");

  std::vector<std::string> traces, labels;
  std::string csv;
  auto* report = app.add_subcommand("report", "Compare traces; first trace is the reference");
  report->add_option("traces", traces, "Trace JSON files")->required()->expected(1, -1);
  report->add_option("--labels", labels, "Row labels, comma separated")->delimiter(',');
  report->add_option("--csv", csv, "Per-iteration history CSV");
  report->add_option("--out", out, "Comparison table (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*validate) return cmd_validate(network, scenarios);
    if (*powerflow) return cmd_powerflow(network, injections, out);
    if (*evaluate) return cmd_evaluate(network, scenarios, psi, eps_bar, threads, verbose, out);
    if (*generate) return cmd_generate(network, out, days, T, seed, mixture);
    if (*solve) return cmd_solve(sa);
    if (*report) return cmd_report(traces, labels, csv, out);
  } catch (const ValidationFailure& ex) {
    std::cerr << "phca: " << ex.what() << "\n";
    return kInvalid;
  } catch (const phca::NetworkError& ex) {
    std::cerr << "phca: " << ex.what() << "\n";
    return kInvalid;
  } catch (const phca::ScenarioError& ex) {
    std::cerr << "phca: " << ex.what() << "\n";
    return kInvalid;
  } catch (const phca::DimensionError& ex) {
    std::cerr << "phca: " << ex.what() << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "phca: " << ex.what() << "\n";
    return kInvalid;
  } catch (const std::exception& ex) {
    std::cerr << "phca: error: " << ex.what() << "\n";
    return kRuntime;
  }
  return kRuntime;
}
