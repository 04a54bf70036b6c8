#pragma once

// Day scenarios: per-snapshot DER output fractions and nodal loads.
//
// On disk a scenario set is a directory of day_<id>.csv files plus
// scenarios_meta.json. Each day file has the header
//   alpha_1..alpha_L,d_1..d_V,e_1..e_V
// followed by T rows.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "io.hpp"
#include "network.hpp"
#include "random.hpp"

namespace phca {

class ScenarioError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix; row t is one snapshot.
struct Table {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Table() = default;
  Table(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }

  bool operator==(const Table&) const = default;
};

struct DayScenario {
  int day_id = 0;
  Table alpha;  // T x |L|
  Table d;      // T x |V|
  Table e;      // T x |V|

  std::size_t snapshots() const { return alpha.rows; }
  bool operator==(const DayScenario&) const = default;
};

struct ScenarioSet {
  std::vector<DayScenario> days;  // ordered by day_id
  std::size_t T = 0;

  std::size_t size() const { return days.size(); }
  std::size_t num_candidates() const { return days.empty() ? 0 : days.front().alpha.cols; }
  std::size_t num_buses() const { return days.empty() ? 0 : days.front().d.cols; }

  bool operator==(const ScenarioSet&) const = default;
};

/// Dimension and range diagnostics against a network; empty means consistent.
inline std::vector<std::string> check_scenarios(const ScenarioSet& set, const Network& net) {
  std::vector<std::string> out;
  if (set.days.empty()) out.push_back("scenario set is empty");
  for (const auto& day : set.days) {
    const std::string tag = "day " + std::to_string(day.day_id) + ": ";
    if (day.alpha.rows != set.T || day.d.rows != set.T || day.e.rows != set.T)
      out.push_back(tag + "expected " + std::to_string(set.T) + " snapshots");
    if (day.alpha.cols != net.num_candidates())
      out.push_back(tag + "alpha has " + std::to_string(day.alpha.cols) + " columns, network has " +
                    std::to_string(net.num_candidates()) + " candidates");
    if (day.d.cols != net.num_buses() || day.e.cols != net.num_buses())
      out.push_back(tag + "load columns do not match " + std::to_string(net.num_buses()) + " network nodes");
    for (double a : day.alpha.data)
      if (!(a >= 0.0 && a <= 1.0)) {
        out.push_back(tag + "alpha outside [0, 1]");
        break;
      }
  }
  return out;
}

// --- CSV io -----------------------------------------------------------------

inline std::vector<std::string> day_header(std::size_t num_candidates, std::size_t num_buses) {
  std::vector<std::string> cols;
  for (std::size_t k = 1; k <= num_candidates; ++k) cols.push_back("alpha_" + std::to_string(k));
  for (std::size_t j = 1; j <= num_buses; ++j) cols.push_back("d_" + std::to_string(j));
  for (std::size_t j = 1; j <= num_buses; ++j) cols.push_back("e_" + std::to_string(j));
  return cols;
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    auto cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    cells.push_back(cell);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end && !s.empty();
}

inline void append_number(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace detail

inline std::string day_to_csv(const DayScenario& day) {
  std::string out;
  const auto header = day_header(day.alpha.cols, day.d.cols);
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += '\n';
  for (std::size_t t = 0; t < day.snapshots(); ++t) {
    bool first = true;
    for (const Table* tab : {&day.alpha, &day.d, &day.e})
      for (double v : tab->row(t)) {
        if (!first) out += ',';
        first = false;
        detail::append_number(out, v);
      }
    out += '\n';
  }
  return out;
}

/// Parse one day file. `label` names the file in error messages.
inline DayScenario day_from_csv(std::string_view text, int day_id, std::size_t num_candidates,
                                std::size_t num_buses, const std::string& label) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = pos + 1;
  }
  if (lines.empty()) throw ScenarioError(label + ": empty file");

  const auto expected = day_header(num_candidates, num_buses);
  const auto header = detail::split_csv(lines[0]);
  std::map<std::string, std::size_t, std::less<>> position;
  for (std::size_t c = 0; c < header.size(); ++c) position.emplace(std::string(header[c]), c);
  std::vector<std::size_t> source(expected.size());
  for (std::size_t c = 0; c < expected.size(); ++c) {
    auto it = position.find(expected[c]);
    if (it == position.end()) throw ScenarioError(label + ": missing column " + expected[c]);
    source[c] = it->second;
  }
  if (header.size() != expected.size())
    throw ScenarioError(label + ": expected " + std::to_string(expected.size()) + " columns, header has " +
                        std::to_string(header.size()));

  const std::size_t T = lines.size() - 1;
  DayScenario day{day_id, Table(T, num_candidates), Table(T, num_buses), Table(T, num_buses)};
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t row_no = t + 2;  // 1-based file line, header is line 1
    const auto cells = detail::split_csv(lines[t + 1]);
    if (cells.size() != header.size())
      throw ScenarioError(label + ": row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                          " cells, expected " + std::to_string(header.size()));
    for (std::size_t c = 0; c < expected.size(); ++c) {
      double v = 0.0;
      if (!detail::parse_double(cells[source[c]], v) || !std::isfinite(v))
        throw ScenarioError(label + ": row " + std::to_string(row_no) + ", column " + expected[c] +
                            ": not a number '" + std::string(cells[source[c]]) + "'");
      if (c < num_candidates) {
        if (v < 0.0 || v > 1.0)
          throw ScenarioError(label + ": row " + std::to_string(row_no) + ", column " + expected[c] + ": alpha " +
                              std::string(cells[source[c]]) + " outside [0, 1]");
        day.alpha(t, c) = v;
      } else if (c < num_candidates + num_buses) {
        day.d(t, c - num_candidates) = v;
      } else {
        day.e(t, c - num_candidates - num_buses) = v;
      }
    }
  }
  return day;
}

inline void write_scenarios(const std::filesystem::path& dir, const ScenarioSet& set) {
  std::filesystem::create_directories(dir);
  for (const auto& day : set.days)
    atomic_write(dir / ("day_" + std::to_string(day.day_id) + ".csv"), day_to_csv(day));
  nlohmann::json meta{{"n_days", set.size()},
                      {"T", set.T},
                      {"L", set.num_candidates()},
                      {"V", set.num_buses()}};
  atomic_write(dir / "scenarios_meta.json", meta.dump(2) + "\n");
}

inline ScenarioSet load_scenarios(const std::filesystem::path& dir, const Network& net) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ScenarioError("scenario directory not found: " + dir.string());
  const std::size_t nl = net.num_candidates(), nv = net.num_buses();

  std::vector<std::pair<int, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() < 9 || !name.starts_with("day_") || !name.ends_with(".csv")) continue;
    const std::string_view digits(name.data() + 4, name.size() - 8);
    int id = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) continue;
    files.emplace_back(id, entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ScenarioError(dir.string() + ": no day_<id>.csv files");

  ScenarioSet set;
  for (const auto& [id, path] : files) {
    auto day = day_from_csv(read_file(path), id, nl, nv, path.filename().string());
    if (set.days.empty()) {
      set.T = day.snapshots();
    } else if (day.snapshots() != set.T) {
      throw ScenarioError(path.filename().string() + ": has " + std::to_string(day.snapshots()) +
                          " snapshots, expected " + std::to_string(set.T) + " like " +
                          files.front().second.filename().string());
    }
    set.days.push_back(std::move(day));
  }
  if (set.T == 0) throw ScenarioError(dir.string() + ": day files have no data rows");

  const auto meta_path = dir / "scenarios_meta.json";
  if (fs::exists(meta_path)) {
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(read_file(meta_path));
    } catch (const nlohmann::json::exception& ex) {
      throw ScenarioError("scenarios_meta.json: " + std::string(ex.what()));
    }
    auto expect = [&](const char* key, std::size_t want) {
      if (meta.contains(key) && meta[key].get<std::size_t>() != want)
        throw ScenarioError(std::string("scenarios_meta.json: ") + key + " = " + meta[key].dump() + " but data has " +
                            std::to_string(want));
    };
    expect("n_days", set.size());
    expect("T", set.T);
    expect("L", nl);
    expect("V", nv);
  }
  return set;
}

// --- synthetic generator -----------------------------------------------------

/// Shape of the synthetic profiles. Times are fractions of a day in [0, 1].
struct SyntheticProfile {
  double sunrise = 0.25;
  double sunset = 0.79;
  double solar_peak = 0.9;      // mean daily peak of alpha
  double solar_noise = 0.1;     // per-day amplitude std (truncated at 2 sigma)
  double load_peak = 0.05;      // p.u. real load per node at the evening peak
  double load_floor = 0.35;     // night load as a fraction of load_peak
  double midday_load = 0.0;     // weight of a noon bump (cooling load), 0 disables
  double load_noise = 0.1;      // per-day, per-node relative std
  double snapshot_noise = 0.02; // per-snapshot relative std
  double reactive_ratio = 0.3;  // e = reactive_ratio * d
};

inline double solar_shape(double h, const SyntheticProfile& prof) {
  if (h <= prof.sunrise || h >= prof.sunset) return 0.0;
  return std::sin(std::numbers::pi * (h - prof.sunrise) / (prof.sunset - prof.sunrise));
}

/// Morning/evening double peak in [load_floor, ~1], optionally with a noon bump.
inline double load_shape(double h, const SyntheticProfile& prof) {
  auto bump = [](double h, double centre, double width) {
    const double z = (h - centre) / width;
    return std::exp(-0.5 * z * z);
  };
  const double peaks =
      std::max({0.7 * bump(h, 0.33, 0.06), bump(h, 0.79, 0.07), prof.midday_load * bump(h, 0.54, 0.1)});
  return prof.load_floor + (1.0 - prof.load_floor) * peaks;
}

inline ScenarioSet generate_synthetic(const Network& net, std::size_t n_days, std::size_t T, std::uint64_t seed,
                                      const SyntheticProfile& prof = {}) {
  if (n_days < 1 || T < 1) throw ScenarioError("generate_synthetic: n_days and T must be >= 1");
  if (prof.solar_noise < 0 || prof.load_noise < 0 || prof.snapshot_noise < 0)
    throw ScenarioError("generate_synthetic: noise scales must be non-negative");
  if (!(prof.sunrise >= 0.0 && prof.sunrise < prof.sunset && prof.sunset <= 1.0))
    throw ScenarioError("generate_synthetic: need 0 <= sunrise < sunset <= 1");
  if (prof.solar_peak < 0 || prof.load_peak < 0 || prof.load_floor < 0 || prof.load_floor > 1 ||
      prof.midday_load < 0)
    throw ScenarioError("generate_synthetic: invalid load or solar amplitude");

  const std::size_t nl = net.num_candidates(), nv = net.num_buses();
  Rng rng(seed);
  ScenarioSet set;
  set.T = T;
  std::vector<double> amp(nl), scale(nv);
  for (std::size_t i = 0; i < n_days; ++i) {
    DayScenario day{static_cast<int>(i + 1), Table(T, nl), Table(T, nv), Table(T, nv)};
    for (auto& a : amp) a = std::clamp(prof.solar_peak + prof.solar_noise * rng.truncated_normal(2.0), 0.0, 1.0);
    for (auto& s : scale) s = std::max(0.0, 1.0 + prof.load_noise * rng.truncated_normal(2.0));
    for (std::size_t t = 0; t < T; ++t) {
      const double h = (static_cast<double>(t) + 0.5) / static_cast<double>(T);
      const double sun = solar_shape(h, prof), load = load_shape(h, prof);
      for (std::size_t k = 0; k < nl; ++k) day.alpha(t, k) = std::clamp(amp[k] * sun, 0.0, 1.0);
      for (std::size_t j = 0; j < nv; ++j) {
        const double jitter = std::max(0.0, 1.0 + prof.snapshot_noise * rng.truncated_normal(2.0));
        day.d(t, j) = prof.load_peak * load * scale[j] * jitter;
        day.e(t, j) = prof.reactive_ratio * day.d(t, j);
      }
    }
    set.days.push_back(std::move(day));
  }
  return set;
}

/// One block of days drawn from a single profile.
struct SyntheticClass {
  std::size_t n_days = 0;
  std::uint64_t seed = 0;
  SyntheticProfile profile;
};

/// Blocks are generated independently and concatenated; day ids run 1..N in
/// block order.
inline ScenarioSet generate_mixture(const Network& net, const std::vector<SyntheticClass>& classes, std::size_t T) {
  if (classes.empty()) throw ScenarioError("generate_mixture: no classes");
  ScenarioSet set;
  set.T = T;
  int id = 1;
  for (const auto& cls : classes) {
    auto part = generate_synthetic(net, cls.n_days, T, cls.seed, cls.profile);
    for (auto& day : part.days) {
      day.day_id = id++;
      set.days.push_back(std::move(day));
    }
  }
  return set;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline SyntheticProfile profile_from_json(const nlohmann::json& j) {
  SyntheticProfile p;
  const std::map<std::string, double*> fields{
      {"sunrise", &p.sunrise},         {"sunset", &p.sunset},         {"solar_peak", &p.solar_peak},
      {"solar_noise", &p.solar_noise}, {"load_peak", &p.load_peak},   {"load_floor", &p.load_floor},
      {"midday_load", &p.midday_load}, {"load_noise", &p.load_noise}, {"snapshot_noise", &p.snapshot_noise},
      {"reactive_ratio", &p.reactive_ratio}};
  if (!j.is_object()) throw ScenarioError("profile must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "n_days" || key == "seed") continue;
    auto it = fields.find(key);
    if (it == fields.end()) throw ScenarioError("profile: unknown key '" + key + "'");
    if (!value.is_number()) throw ScenarioError("profile: '" + key + "' must be a number");
    *it->second = value.get<double>();
  }
  return p;
}

/// {"T": 24, "classes": [{"n_days": 2, "seed": 101, "load_peak": 0.02, ...}, ...]}
inline std::pair<std::vector<SyntheticClass>, std::size_t> mixture_from_json(const nlohmann::json& j) {
  try {
    std::vector<SyntheticClass> classes;
    for (const auto& c : j.at("classes"))
      classes.push_back({c.at("n_days").get<std::size_t>(), c.at("seed").get<std::uint64_t>(), profile_from_json(c)});
    return {std::move(classes), j.value("T", std::size_t{24})};
  } catch (const nlohmann::json::exception& ex) {
    throw ScenarioError(std::string("mixture file: ") + ex.what());
  }
}

}  // namespace phca
