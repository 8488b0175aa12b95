#pragma once

// Batch experiments behind the command-line runner. Each experiment turns a
// validated config into a JSON report plus two CSV tables; nothing here
// depends on wall-clock time or thread scheduling, so reruns are byte-identical.

#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "torusblock/io.hpp"

namespace torusblock {

struct ExperimentConfig {
  std::string command;
  std::string metric_file;
  TorusPoint x{0.0, 0.0};
  TorusPoint y{0.5, 0.5};
  std::vector<double> L{1.0, 2.0, 3.0, 4.0};
  IVec2 klass{1, 0};
  std::vector<IVec2> classes{{1, 0}, {0, 1}, {1, 1}, {2, 1}};
  int seeds = 8;
  int grid = 8;
  int K = 8;
  double gamma_offset = 0.5;
  unsigned threads = 1;

  // tolerances, addressable by name
  double spatial_tol = 1e-4;
  double endpoint_tol = 1e-7;
  double geodesic_tol = 1e-12;
  double sample_spacing = 1e-2;
  double cluster_tol = 1e-3;
  double length_tol = 1e-6;
  double epsilon_floor = 0.05;
  double convergence_tol = 1e-10;
  double stationarity_tol = 1e-7;
  double slope_window = 20.0;

  template <class Self>
  static auto tolerance_table(Self& c) {
    return std::map<std::string, decltype(&c.spatial_tol)>{
        {"spatial_tol", &c.spatial_tol},           {"endpoint_tol", &c.endpoint_tol},
        {"geodesic_tol", &c.geodesic_tol},         {"sample_spacing", &c.sample_spacing},
        {"cluster_tol", &c.cluster_tol},           {"length_tol", &c.length_tol},
        {"epsilon_floor", &c.epsilon_floor},       {"convergence_tol", &c.convergence_tol},
        {"stationarity_tol", &c.stationarity_tol}, {"slope_window", &c.slope_window}};
  }

  std::map<std::string, double*> tolerances() { return tolerance_table(*this); }
  std::map<std::string, double> tolerances() const {
    std::map<std::string, double> out;
    for (const auto& [k, v] : tolerance_table(*this)) out[k] = *v;
    return out;
  }

  void set_tolerance(const std::string& name, double value) {
    auto tols = tolerances();
    auto it = tols.find(name);
    if (it == tols.end()) throw InputError("tol." + name, std::nullopt, "tol." + name + ": unknown tolerance");
    *it->second = value;
  }

  ConnectOptions connect_options() const {
    ConnectOptions c;
    c.shoot.endpoint_tol = endpoint_tol;
    c.shoot.geodesic.tol = geodesic_tol;
    c.shoot.geodesic.max_sample_spacing = sample_spacing;
    c.threads = threads;
    return c;
  }
  BlockingOptions blocking_options() const {
    BlockingOptions b;
    b.spatial_tol = spatial_tol;
    b.connect = connect_options();
    return b;
  }
  MinimalOptions minimal_options() const {
    MinimalOptions m;
    m.shorten.convergence_tol = convergence_tol;
    m.shorten.stationarity_tol = stationarity_tol;
    m.shorten.arc.geodesic.tol = geodesic_tol;
    m.shorten.arc.geodesic.max_sample_spacing = sample_spacing;
    m.connect = connect_options();
    m.cluster_tol = cluster_tol;
    m.length_tol = length_tol;
    m.spatial_tol = spatial_tol;
    m.epsilon_floor = epsilon_floor;
    m.threads = threads;
    return m;
  }
};

inline const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> cmds{"block", "minimal", "slope", "asymptotic", "verdict"};
  return cmds;
}

/// Defaults that differ between commands.
inline ExperimentConfig default_config(const std::string& command) {
  ExperimentConfig c;
  c.command = command;
  if (command == "asymptotic") c.x = {0.0, 0.3};
  if (command == "verdict") {
    c.x = {0.1, 0.47};
    c.y = {0.63, 0.55};
  }
  return c;
}

/// Validates ranges; throws InputError naming the field.
inline void validate(const ExperimentConfig& c) {
  auto bad = [](const std::string& field, const std::string& msg) {
    throw InputError(field, std::nullopt, field + ": " + msg);
  };
  if (std::find(experiment_commands().begin(), experiment_commands().end(), c.command) == experiment_commands().end())
    bad("command", "unknown command '" + c.command + "'");
  if (c.metric_file.empty()) bad("metric", "a metric file is required");
  for (const auto& [name, v] : c.tolerances())
    if (!(v > 0.0) || !std::isfinite(v)) bad("tol." + name, "must be positive and finite");
  for (double v : {c.x.u, c.x.v, c.y.u, c.y.v})
    if (!std::isfinite(v)) bad("x/y", "coordinates must be finite");
  if (c.L.empty()) bad("L", "budget list is empty");
  for (std::size_t i = 0; i < c.L.size(); ++i) {
    if (!std::isfinite(c.L[i]) || !(c.L[i] > 0.0)) bad("L", "budgets must be positive and finite");
    if (i > 0 && !(c.L[i] > c.L[i - 1])) bad("L", "budgets must be strictly increasing");
  }
  auto check_class = [&](const IVec2& k, const std::string& field) {
    if ((k.m == 0 && k.n == 0) || std::gcd(k.m, k.n) != 1) bad(field, "class (q,p) must be a coprime non-zero pair");
  };
  check_class(c.klass, "class");
  if (c.classes.empty()) bad("classes", "class list is empty");
  for (const auto& k : c.classes) check_class(k, "classes");
  if (c.seeds < 2) bad("seeds", "must be >= 2");
  if (c.grid < 4) bad("grid", "must be >= 4");
  if (c.K < 4) bad("K", "must be >= 4");
  if (!std::isfinite(c.gamma_offset)) bad("gamma_offset", "must be finite");
  if (c.threads < 1) bad("threads", "must be >= 1");
}

/// Applies a JSON config document on top of `c`; unknown keys are rejected.
inline void apply_config_json(ExperimentConfig& c, const json& j, const std::string& text) {
  io::Reader rd(j, text, "config");
  rd.require_object(j, {});
  rd.reject_unknown(j, {},
                    {"metric", "x", "y", "L", "class", "classes", "seeds", "grid", "K", "gamma_offset", "threads", "tol"});
  if (j.contains("metric")) {
    if (!j["metric"].is_string()) rd.fail({"metric"}, "expected a file path");
    c.metric_file = j["metric"].get<std::string>();
  }
  if (j.contains("x")) {
    const Vec2 v = rd.pair(j["x"], {"x"});
    c.x = {v.x, v.y};
  }
  if (j.contains("y")) {
    const Vec2 v = rd.pair(j["y"], {"y"});
    c.y = {v.x, v.y};
  }
  if (j.contains("L")) {
    if (!j["L"].is_array()) rd.fail({"L"}, "expected an array of budgets");
    c.L.clear();
    for (std::size_t i = 0; i < j["L"].size(); ++i) c.L.push_back(rd.real(j["L"][i], {"L", std::to_string(i)}));
  }
  if (j.contains("class")) c.klass = rd.int_pair(j["class"], {"class"});
  if (j.contains("classes")) {
    if (!j["classes"].is_array()) rd.fail({"classes"}, "expected an array of [q,p] pairs");
    c.classes.clear();
    for (std::size_t i = 0; i < j["classes"].size(); ++i)
      c.classes.push_back(rd.int_pair(j["classes"][i], {"classes", std::to_string(i)}));
  }
  if (j.contains("seeds")) c.seeds = static_cast<int>(rd.integer(j["seeds"], {"seeds"}));
  if (j.contains("grid")) c.grid = static_cast<int>(rd.integer(j["grid"], {"grid"}));
  if (j.contains("K")) c.K = static_cast<int>(rd.integer(j["K"], {"K"}));
  if (j.contains("gamma_offset")) c.gamma_offset = rd.real(j["gamma_offset"], {"gamma_offset"});
  if (j.contains("threads")) {
    const long t = rd.integer(j["threads"], {"threads"});
    if (t < 1 || t > 1024) rd.fail({"threads"}, "must be in [1, 1024]");
    c.threads = static_cast<unsigned>(t);
  }
  if (j.contains("tol")) {
    const json& t = j["tol"];
    rd.require_object(t, {"tol"});
    const auto known = c.tolerances();
    for (auto it = t.begin(); it != t.end(); ++it) {
      if (!known.count(it.key())) rd.fail({"tol", it.key()}, "unknown tolerance");
      c.set_tolerance(it.key(), rd.real(it.value(), {"tol", it.key()}));
    }
  }
}

/// Reads a config file; a relative metric path in it is taken relative to
/// the config file's directory.
inline void load_config_file(ExperimentConfig& c, const std::string& path) {
  const std::string text = io::read_file(path, "config");
  const json j = io::parse_text(text, "config");
  apply_config_json(c, j, text);
  if (j.contains("metric")) {
    const std::filesystem::path m(c.metric_file);
    if (m.is_relative()) c.metric_file = (std::filesystem::path(path).parent_path() / m).lexically_normal().string();
  }
}

inline json config_to_json(const ExperimentConfig& c) {
  json classes = json::array();
  for (const auto& k : c.classes) classes.push_back(int_pair(k));
  json L = json::array();
  for (double v : c.L) L.push_back(num(v));
  json tol;
  for (const auto& [k, v] : c.tolerances()) tol[k] = num(v);
  return {{"metric", c.metric_file},
          {"x", num_point(c.x)},
          {"y", num_point(c.y)},
          {"L", L},
          {"class", int_pair(c.klass)},
          {"classes", classes},
          {"seeds", c.seeds},
          {"grid", c.grid},
          {"K", c.K},
          {"gamma_offset", num(c.gamma_offset)},
          {"threads", c.threads},
          {"tol", tol}};
}

struct ExperimentOutput {
  json report;
  std::string series_csv;
  std::string paths_csv = kPathsHeader;
};

namespace detail {

inline std::string growth_csv(const std::vector<GrowthRow>& rows) {
  std::string out = "L,size,optimal,paths,lower_bound\n";
  for (const auto& r : rows)
    out += csv_num(r.L) + "," + std::to_string(r.size) + "," + (r.optimal ? "true" : "false") + "," +
           std::to_string(r.paths) + "," + std::to_string(r.lower_bound) + "\n";
  return out;
}

inline json growth_json(const std::vector<GrowthRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"L", num(r.L)},
                   {"size", r.size},
                   {"optimal", r.optimal},
                   {"paths", r.paths},
                   {"lower_bound", r.lower_bound}});
  return out;
}

/// "bounded" when the last two sizes agree, "growing" when the last three
/// (or all, if fewer) strictly increase, otherwise "mixed".
inline std::string growth_trend(const std::vector<GrowthRow>& rows) {
  const std::size_t n = rows.size();
  if (n >= 2 && rows[n - 1].size == rows[n - 2].size) return "bounded";
  const std::size_t from = n >= 3 ? n - 3 : 0;
  bool strict = n >= 2;
  for (std::size_t i = from; i + 1 < n; ++i) strict = strict && rows[i + 1].size > rows[i].size;
  return strict ? "growing" : "mixed";
}

}  // namespace detail

inline ExperimentOutput run_block(const TorusMetric& metric, const ExperimentConfig& c) {
  ExperimentOutput out;
  std::vector<BlockingReport> reps;
  const auto rows = blocking_growth(metric, c.x, c.y, c.L, c.blocking_options(), &reps);
  out.report["growth"] = detail::growth_json(rows);
  out.report["trend"] = detail::growth_trend(rows);
  out.report["blocking"] = blocking_to_json(reps.back());
  out.series_csv = detail::growth_csv(rows);
  for (std::size_t i = 0; i < reps.back().family.paths.size(); ++i)
    append_path_rows(out.paths_csv, i, reps.back().family.paths[i]);
  return out;
}

inline ExperimentOutput run_minimal(const TorusMetric& metric, const ExperimentConfig& c) {
  ExperimentOutput out;
  const StripReport rep = scan_minimizers(metric, c.klass, c.seeds, c.minimal_options());
  out.report["strip"] = strip_to_json(rep);
  out.series_csv = "seed_offset,converged,offset,length,sweeps\n";
  for (const auto& s : rep.seeds)
    out.series_csv += csv_num(s.seed_offset) + "," + (s.converged ? "true" : "false") + "," + csv_num(s.offset) + "," +
                      csv_num(s.length) + "," + std::to_string(s.sweeps) + "\n";
  for (std::size_t i = 0; i < rep.minimizers.size(); ++i) append_path_rows(out.paths_csv, i, rep.minimizers[i].loop);
  return out;
}

inline ExperimentOutput run_slope(const TorusMetric& metric, const ExperimentConfig& c) {
  ExperimentOutput out;
  const MinimalOptions mo = c.minimal_options();
  SlopeOptions so;
  so.window = c.slope_window;
  json table = json::array();
  out.series_csv = "q,p,length,slope,fitted_slope\n";
  for (std::size_t i = 0; i < c.classes.size(); ++i) {
    const IVec2 k = c.classes[i];
    const PeriodicGeodesic g = curve_shorten(metric, k, c.gamma_offset,
                                             mo.nodes > 0 ? mo.nodes : default_node_count(k), mo.shorten);
    // least-squares slope over the periodic lift, as for an open path
    const int periods = static_cast<int>(std::ceil((c.slope_window + 1.0) / g.length));
    const GeodesicPath open = unroll(metric.lattice(), g, periods);
    const double fitted = average_slope(metric, open, so);
    table.push_back({{"class", int_pair(k)},
                     {"length", num(g.length)},
                     {"transversal_offset", num(g.transversal_offset)},
                     {"slope", num(average_slope(g))},
                     {"fitted_slope", num(fitted)}});
    out.series_csv += std::to_string(k.m) + "," + std::to_string(k.n) + "," + csv_num(g.length) + "," +
                      csv_num(average_slope(g)) + "," + csv_num(fitted) + "\n";
    append_path_rows(out.paths_csv, i, g.loop);
  }
  out.report["slopes"] = table;
  return out;
}

inline ExperimentOutput run_asymptotic(const TorusMetric& metric, const ExperimentConfig& c) {
  ExperimentOutput out;
  const MinimalOptions mo = c.minimal_options();
  const PeriodicGeodesic gamma = curve_shorten(metric, c.klass, c.gamma_offset,
                                               mo.nodes > 0 ? mo.nodes : default_node_count(c.klass), mo.shorten);
  const AsymptoticCertificate cert = asymptotic_geodesic(metric, gamma, c.x, c.K, mo);
  out.report["certificate"] = asymptotic_to_json(cert);
  out.series_csv = "s,distance\n";
  for (const auto& [s, d] : cert.distances) out.series_csv += csv_num(s) + "," + csv_num(d) + "\n";
  append_path_rows(out.paths_csv, 0, gamma.loop);
  append_path_rows(out.paths_csv, 1, cert.c);
  return out;
}

inline ExperimentOutput run_verdict(const TorusMetric& metric, const ExperimentConfig& c) {
  ExperimentOutput out;
  const MinimalOptions mo = c.minimal_options();
  const FoliationResult fol = foliation_check(metric, c.klass, c.grid, mo);
  const StripReport strip = scan_minimizers(metric, c.klass, c.seeds, mo);
  const auto rows = blocking_growth(metric, c.x, c.y, c.L, c.blocking_options());
  const std::string trend = detail::growth_trend(rows);
  const bool flat = fol.fraction == 1.0 && strip.bad_gaps() == 0 && trend == "bounded";
  out.report["foliation"] = foliation_to_json(fol, c.grid);
  out.report["bad_gaps"] = strip.bad_gaps();
  out.report["minimizers"] = strip.minimizers.size();
  out.report["growth"] = detail::growth_json(rows);
  out.report["trend"] = trend;
  out.report["verdict"] = flat ? "CONSISTENT-WITH-FLAT" : "CONSISTENT-WITH-NONFLAT";
  out.series_csv = detail::growth_csv(rows);
  for (std::size_t i = 0; i < strip.minimizers.size(); ++i) append_path_rows(out.paths_csv, i, strip.minimizers[i].loop);
  return out;
}

/// Runs the configured experiment; the report starts with the effective
/// configuration and the metric it was run on.
inline ExperimentOutput run_experiment(const ExperimentConfig& c) {
  validate(c);
  const TorusMetric metric = load_metric(c.metric_file);
  ExperimentOutput body;
  if (c.command == "block")
    body = run_block(metric, c);
  else if (c.command == "minimal")
    body = run_minimal(metric, c);
  else if (c.command == "slope")
    body = run_slope(metric, c);
  else if (c.command == "asymptotic")
    body = run_asymptotic(metric, c);
  else
    body = run_verdict(metric, c);
  ExperimentOutput out;
  out.report["command"] = c.command;
  out.report["config"] = config_to_json(c);
  out.report["metric"] = metric_to_json(metric);
  for (auto it = body.report.begin(); it != body.report.end(); ++it) out.report[it.key()] = it.value();
  out.series_csv = std::move(body.series_csv);
  out.paths_csv = std::move(body.paths_csv);
  return out;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  f << text;
}

inline void write_outputs(const std::string& dir, const ExperimentOutput& out) {
  std::filesystem::create_directories(dir);
  write_text(std::filesystem::path(dir) / "report.json", out.report.dump(2) + "\n");
  write_text(std::filesystem::path(dir) / "series.csv", out.series_csv);
  write_text(std::filesystem::path(dir) / "paths.csv", out.paths_csv);
}

/// Machine-readable error document.
inline json error_json(const std::string& kind, const std::string& message, const std::string& field = "",
                       std::optional<int> line = std::nullopt) {
  json e{{"kind", kind}, {"message", message}};
  e["field"] = field.empty() ? json(nullptr) : json(field);
  e["line"] = line ? json(*line) : json(nullptr);
  return {{"error", e}};
}

}  // namespace torusblock
