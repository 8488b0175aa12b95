#pragma once

// Metric files, deterministic JSON and CSV output.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "torusblock/blocking.hpp"
#include "torusblock/minimal.hpp"

namespace torusblock {

using json = nlohmann::ordered_json;

/// Bad input with the offending field (dotted path) and source line when known.
class InputError : public std::runtime_error {
 public:
  InputError(std::string field, std::optional<int> line, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const { return field_; }
  std::optional<int> line() const { return line_; }

 private:
  std::string field_;
  std::optional<int> line_;
};

namespace io {

inline std::string read_file(const std::string& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(field, std::nullopt, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline int line_at(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  int line = 1;
  for (std::size_t i = 0; i < byte; ++i) line += text[i] == '\n';
  return line;
}

/// Parses JSON text; syntax errors carry the line of the failing byte.
inline json parse_text(const std::string& text, const std::string& field) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(field, line_at(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
}

/// Source line of a key path such as {"modes", "2", "k1"}: each key is looked
/// up after the previous one, array indices skip that many repetitions of
/// the following key. Approximate for documents with repeated keys.
inline std::optional<int> locate(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  int skip = 0;
  for (const auto& part : path) {
    if (!part.empty() && std::isdigit(static_cast<unsigned char>(part[0]))) {
      skip = std::stoi(part);
      continue;
    }
    const std::string key = "\"" + part + "\"";
    std::size_t at = text.find(key, pos);
    for (int k = 0; k < skip && at != std::string::npos; ++k) at = text.find(key, at + key.size());
    skip = 0;
    if (at == std::string::npos) break;
    pos = at + key.size();
  }
  return pos == 0 ? std::nullopt : std::optional<int>(line_at(text, pos));
}

/// Reads typed fields out of a JSON object and reports misuse precisely.
class Reader {
 public:
  Reader(const json& j, std::string text, std::string prefix = "")
      : j_(j), text_(std::move(text)), prefix_(std::move(prefix)) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
    std::string field = prefix_;
    for (const auto& p : path) {
      if (!p.empty() && std::isdigit(static_cast<unsigned char>(p[0])))
        field += "[" + p + "]";
      else
        field += (field.empty() ? "" : ".") + p;
    }
    throw InputError(field, locate(text_, path), field + ": " + msg);
  }

  void require_object(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_object()) fail(path, "expected an object");
  }

  void reject_unknown(const json& j, const std::vector<std::string>& path,
                      const std::vector<std::string>& allowed) const {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
        auto p = path;
        p.push_back(it.key());
        fail(p, "unknown key");
      }
  }

  double real(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
  }
  long integer(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<long>();
  }
  Vec2 pair(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_array() || j.size() != 2) fail(path, "expected a 2-element array");
    auto p0 = path, p1 = path;
    p0.push_back("0");
    p1.push_back("1");
    return {real(j[0], p0), real(j[1], p1)};
  }
  IVec2 int_pair(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_array() || j.size() != 2) fail(path, "expected a 2-element integer array");
    return {integer(j[0], path), integer(j[1], path)};
  }

  const json& root() const { return j_; }

 private:
  const json& j_;
  std::string text_;
  std::string prefix_;
};

}  // namespace io

/// Metric from its JSON description; `text` is the source used for line lookup.
inline TorusMetric metric_from_json(const json& j, const std::string& text = "") {
  io::Reader rd(j, text);
  rd.require_object(j, {});
  rd.reject_unknown(j, {}, {"lattice", "modes"});
  Lattice lattice;
  if (j.contains("lattice")) {
    const json& l = j["lattice"];
    rd.require_object(l, {"lattice"});
    rd.reject_unknown(l, {"lattice"}, {"e1", "e2"});
    if (!l.contains("e1")) rd.fail({"lattice", "e1"}, "missing");
    if (!l.contains("e2")) rd.fail({"lattice", "e2"}, "missing");
    const Vec2 e1 = rd.pair(l["e1"], {"lattice", "e1"});
    const Vec2 e2 = rd.pair(l["e2"], {"lattice", "e2"});
    try {
      lattice = Lattice(e1, e2);
    } catch (const std::invalid_argument& e) {
      rd.fail({"lattice"}, e.what());
    }
  }
  std::vector<FourierMode> modes;
  if (j.contains("modes")) {
    const json& m = j["modes"];
    if (!m.is_array()) rd.fail({"modes"}, "expected an array");
    if (m.size() > ConformalFactor::kMaxModes) rd.fail({"modes"}, "at most 64 modes are supported");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string idx = std::to_string(i);
      const json& e = m[i];
      rd.require_object(e, {"modes", idx});
      rd.reject_unknown(e, {"modes", idx}, {"k1", "k2", "a", "b"});
      FourierMode fm;
      for (const char* key : {"k1", "k2"})
        if (!e.contains(key)) rd.fail({"modes", idx, key}, "missing");
      const long k1 = rd.integer(e["k1"], {"modes", idx, "k1"});
      const long k2 = rd.integer(e["k2"], {"modes", idx, "k2"});
      if (std::abs(k1) > 1000 || std::abs(k2) > 1000) rd.fail({"modes", idx}, "wave numbers must lie in [-1000, 1000]");
      fm.k1 = static_cast<int>(k1);
      fm.k2 = static_cast<int>(k2);
      fm.a = e.contains("a") ? rd.real(e["a"], {"modes", idx, "a"}) : 0.0;
      fm.b = e.contains("b") ? rd.real(e["b"], {"modes", idx, "b"}) : 0.0;
      modes.push_back(fm);
    }
  }
  try {
    return TorusMetric(lattice, ConformalFactor(std::move(modes)));
  } catch (const std::invalid_argument& e) {
    rd.fail({"modes"}, e.what());
  }
}

inline TorusMetric load_metric(const std::string& path) {
  const std::string text = io::read_file(path, "metric");
  const json j = io::parse_text(text, "metric");
  try {
    return metric_from_json(j, text);
  } catch (const InputError& e) {
    throw InputError(e.field().empty() ? "metric" : "metric." + e.field(), e.line(),
                     std::string("metric file '") + path + "': " + e.what());
  }
}

// ---- number formatting ------------------------------------------------------

/// Value rounded to 12 significant digits; infinities become the string
/// "inf" / "-inf" and NaN becomes null.
inline json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

inline std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline json num_pair(const Vec2& v) { return json::array({num(v.x), num(v.y)}); }
inline json num_point(const TorusPoint& t) { return json::array({num(t.u), num(t.v)}); }
inline json int_pair(const IVec2& k) { return json::array({k.m, k.n}); }

inline json metric_to_json(const TorusMetric& metric) {
  json j;
  j["lattice"] = {{"e1", num_pair(metric.lattice().e1())}, {"e2", num_pair(metric.lattice().e2())}};
  json modes = json::array();
  for (const auto& m : metric.conformal_factor().modes())
    modes.push_back({{"k1", m.k1}, {"k2", m.k2}, {"a", num(m.a)}, {"b", num(m.b)}});
  j["modes"] = modes;
  j["phi_min"] = num(metric.phi_min());
  j["phi_max"] = num(metric.phi_max());
  return j;
}

// ---- module serialization ---------------------------------------------------

inline json path_summary(const GeodesicPath& p) {
  return {{"homotopy", int_pair(p.homotopy)},
          {"length", num(p.total_length)},
          {"angle", num(p.launch_angle)},
          {"energy_drift", num(p.energy_drift)}};
}

inline json family_to_json(const ConnectingFamily& fam) {
  json paths = json::array();
  for (const auto& p : fam.paths) paths.push_back(path_summary(p));
  return {{"x", num_point(fam.x)},
          {"y", num_point(fam.y)},
          {"L", num(fam.budget)},
          {"targets", fam.targets},
          {"seeds_per_target", fam.seeds_per_target},
          {"failed_shots", fam.failed_shots},
          {"paths", paths}};
}

inline json blocking_to_json(const BlockingReport& rep) {
  json chosen = json::array();
  for (std::size_t i = 0; i < rep.chosen.size(); ++i) {
    json blocks = json::array();
    for (std::size_t p : rep.pool.coverage[rep.chosen_index[i]]) blocks.push_back(p);
    chosen.push_back({{"point", num_point(rep.chosen[i])},
                      {"blocks", blocks},
                      {"touches_endpoint", static_cast<bool>(rep.touches_endpoint[i])}});
  }
  return {{"size", rep.size},
          {"optimal", rep.optimal},
          {"lower_bound", rep.lower_bound},
          {"spatial_tol", num(rep.spatial_tol)},
          {"candidates", rep.pool.points.size()},
          {"search_nodes", rep.search_nodes},
          {"chosen", chosen},
          {"family", family_to_json(rep.family)}};
}

inline json periodic_to_json(const PeriodicGeodesic& g) {
  return {{"class", int_pair(g.klass)},
          {"length", num(g.length)},
          {"transversal_offset", num(g.transversal_offset)},
          {"slope", num(average_slope(g))},
          {"residual", num(g.residual)},
          {"sweeps", g.sweeps},
          {"nodes", g.nodes.size()}};
}

inline json strip_to_json(const StripReport& rep) {
  json mins = json::array();
  for (const auto& m : rep.minimizers) mins.push_back(periodic_to_json(m));
  json gaps = json::array();
  for (const auto& g : rep.gaps) {
    json gj = {{"lower", num(g.lower)},
               {"upper", num(g.upper)},
               {"width", num(g.width)},
               {"bad", g.bad},
               {"probe_offset", num(g.probe_offset)},
               {"probe_length", num(g.probe_length)}};
    if (!g.probe_error.empty()) gj["probe_error"] = g.probe_error;
    gaps.push_back(gj);
  }
  std::size_t failed = 0;
  for (const auto& s : rep.seeds) failed += !s.converged;
  return {{"class", int_pair(rep.klass)},
          {"min_length", num(rep.min_length)},
          {"minimizers", mins},
          {"gaps", gaps},
          {"bad_gaps", rep.bad_gaps()},
          {"seeds", rep.seeds.size()},
          {"failed_seeds", failed}};
}

inline json asymptotic_to_json(const AsymptoticCertificate& c) {
  json shots = json::array();
  for (std::size_t i = 0; i < c.shot_index.size(); ++i)
    shots.push_back({{"i", c.shot_index[i]}, {"angle", num(c.shot_angles[i])}});
  json crossings = json::array();
  for (double s : c.crossings) crossings.push_back(num(s));
  return {{"gamma", periodic_to_json(c.gamma)},
          {"shots", shots},
          {"limit_angle", num(c.limit_angle)},
          {"horizon", num(c.horizon)},
          {"initial_distance", num(c.distances.empty() ? INFINITY : c.distances.front().second)},
          {"final_distance", num(c.final_distance())},
          {"epsilon_floor", num(c.epsilon_floor)},
          {"crossings", crossings},
          {"eventually_nonincreasing", c.eventually_nonincreasing},
          {"verdict", c.verdict}};
}

inline json foliation_to_json(const FoliationResult& f, int grid_n) {
  std::size_t covered = 0;
  for (const auto& p : f.points) covered += p.covered;
  return {{"grid", grid_n},
          {"fraction", num(f.fraction)},
          {"covered", covered},
          {"min_length", num(f.min_length)}};
}

// ---- CSV --------------------------------------------------------------------

/// Rows "path,s,xi,eta" for each path, xi/eta in cover coordinates.
inline void append_path_rows(std::string& out, std::size_t index, const GeodesicPath& p) {
  for (const auto& smp : p.samples) {
    out += std::to_string(index);
    out += ',';
    out += csv_num(smp.s);
    out += ',';
    out += csv_num(smp.pos.x);
    out += ',';
    out += csv_num(smp.pos.y);
    out += '\n';
  }
}

inline constexpr const char* kPathsHeader = "path,s,xi,eta\n";

}  // namespace torusblock
