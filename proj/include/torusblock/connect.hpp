#pragma once

// Geodesics joining two torus points: lift to the universal cover, list the
// lattice translates of the target within reach, and shoot at each one.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "torusblock/geodesic.hpp"
#include "torusblock/parallel.hpp"
#include "torusblock/segments.hpp"

namespace torusblock {

class TargetOverflow : public std::runtime_error {
 public:
  TargetOverflow(std::size_t cap, double radius)
      : std::runtime_error("more than " + std::to_string(cap) + " lattice targets within radius " +
                           std::to_string(radius)) {}
};

struct ShootOptions {
  double endpoint_tol = 1e-7;
  int max_iters = 50;
  double s_cap = 0.0;  // 0 selects a bound from the metric's phi range
  GeodesicOptions geodesic;
};

struct ConnectOptions {
  ShootOptions shoot;
  int n_seed_fan = 8;
  double fan_step = 0.05;
  double angle_dedup_tol = 1e-6;
  std::size_t target_cap = 10'000;
  double bound_margin = 1e-3;
  unsigned threads = 1;
};

struct ShootResult {
  std::optional<GeodesicPath> path;  // present iff the shot hit
  double residual = INFINITY;        // miss distance of the best iterate
  double best_angle = 0.0;
  int iterations = 0;

  bool hit() const { return path.has_value(); }
};

struct ConnectingFamily {
  std::shared_ptr<const TorusMetric> metric;
  TorusPoint x, y;
  double budget = 0.0;
  std::vector<GeodesicPath> paths;
  std::size_t targets = 0;
  std::size_t seeds_per_target = 0;
  std::size_t failed_shots = 0;  // seeds that did not converge (heuristic completeness signal)
};

/// Lattice translates of y reachable from x by a curve of length <= L.
///
/// A curve of conformal length L has Euclidean length at most
/// L * exp(-min phi), so no admissible target is pruned.
inline std::vector<CoverPoint> enumerate_targets(const TorusMetric& metric, const TorusPoint& x,
                                                 const TorusPoint& y, double L, const ConnectOptions& opt = {}) {
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("enumerate_targets: L must be positive");
  const Lattice& lat = metric.lattice();
  const double margin = metric.is_flat() ? 0.0 : opt.bound_margin;
  const double radius = L * std::exp(-metric.phi_min() + margin);
  const Vec2 du{y.u - x.u, y.v - x.v};
  const Vec2 rows = lat.inverse_row_norms();
  const long m_lo = static_cast<long>(std::ceil(-radius * rows.x - du.x));
  const long m_hi = static_cast<long>(std::floor(radius * rows.x - du.x));
  const long n_lo = static_cast<long>(std::ceil(-radius * rows.y - du.y));
  const long n_hi = static_cast<long>(std::floor(radius * rows.y - du.y));
  const CoverPoint xc = lat.to_cover(x);
  struct Item {
    double d;
    long m, n;
    CoverPoint p;
  };
  std::vector<Item> items;
  for (long m = m_lo; m <= m_hi; ++m)
    for (long n = n_lo; n <= n_hi; ++n) {
      const CoverPoint p = lat.to_cover(Vec2{y.u + m, y.v + n});
      const double d = norm(p - xc);
      if (d > radius || d < 1e-14) continue;
      items.push_back({d, m, n, p});
      if (items.size() > opt.target_cap) throw TargetOverflow(opt.target_cap, radius);
    }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.d != b.d) return a.d < b.d;
    return std::tie(a.m, a.n) < std::tie(b.m, b.n);
  });
  std::vector<CoverPoint> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.p);
  return out;
}

namespace detail {

struct Probe {
  Trace trace;
  bool found = false;  // closest approach located before s_cap
  double miss = INFINITY;  // signed: positive when the target lies to the left
  double s_star = 0.0;
};

inline double approach_rate(const CoverPoint& to, const CoverPoint& z, const Vec2& v) { return dot(to - z, v); }

inline Probe probe(const TorusMetric& metric, const CoverPoint& from, const CoverPoint& to, double angle,
                   double s_cap, const GeodesicOptions& gopt) {
  Probe pr;
  double s_hit = -1.0;
  auto stop = [&](const StepRecord& r) -> double {
    const double g0 = approach_rate(to, r.pos0(), r.vel0());
    const double g1 = approach_rate(to, r.pos1(), r.vel1());
    if (g0 <= 0.0 && r.s0 == 0.0) {
      s_hit = 0.0;
      return 0.0;
    }
    if (g0 > 0.0 && g1 <= 0.0) {
      // Illinois iteration on the Hermite interpolant of this step.
      double a = r.s0, b = r.s1, fa = g0, fb = g1;
      int side = 0;
      for (int it = 0; it < 100 && b - a > 1e-15 * std::max(1.0, b); ++it) {
        const double c = (a * fb - b * fa) / (fb - fa);
        const PathSample ps = r.sample(metric, c);
        const double fc = approach_rate(to, ps.pos, ps.vel);
        if (fc == 0.0) {
          a = b = c;
          break;
        }
        if (fc > 0.0) {
          a = c;
          fa = fc;
          if (side == -1) fb *= 0.5;
          side = -1;
        } else {
          b = c;
          fb = fc;
          if (side == 1) fa *= 0.5;
          side = 1;
        }
      }
      s_hit = 0.5 * (a + b);
      return s_hit;
    }
    return -1.0;
  };
  pr.trace = trace_geodesic(metric, launch_state(metric, from, angle), s_cap, gopt, stop);
  const StepRecord& last = pr.trace.steps.back();
  PathSample end;
  if (s_hit >= 0.0) {
    pr.found = s_hit > 0.0;
    pr.s_star = s_hit;
    end = s_hit == 0.0 ? PathSample{0.0, from, last.vel0()} : last.sample(metric, s_hit);
  } else {
    pr.trace.end_s = last.s1;
    pr.s_star = last.s1;
    end = {last.s1, last.pos1(), last.vel1()};
  }
  const Vec2 dir = end.vel / std::max(norm(end.vel), 1e-300);
  const Vec2 off = to - end.pos;
  const double c = cross(dir, off);
  pr.miss = (c >= 0.0 ? 1.0 : -1.0) * norm(off);
  return pr;
}

}  // namespace detail

/// Two-point shooting from `from` towards `to`, iterating on the launch
/// angle (safeguarded secant) to drive the miss at closest approach to zero.
inline ShootResult shoot(const TorusMetric& metric, const CoverPoint& from, const CoverPoint& to, double seed_angle,
                         const ShootOptions& opt = {}) {
  const double dist = norm(to - from);
  if (!(dist > 0.0)) throw std::invalid_argument("shoot: from and to coincide");
  const double s_cap =
      opt.s_cap > 0.0 ? opt.s_cap : 2.0 * dist * std::exp(metric.phi_max() - metric.phi_min()) + 0.1;

  ShootResult res;
  auto finish = [&](const detail::Probe& pr, double angle) {
    res.residual = std::abs(pr.miss);
    res.best_angle = angle;
    detail::Probe p = pr;
    p.trace.end_s = pr.s_star;
    res.path = resample(metric, p.trace, opt.geodesic.max_sample_spacing);
    return res;
  };

  double th0 = seed_angle;
  detail::Probe p0 = detail::probe(metric, from, to, th0, s_cap, opt.geodesic);
  res.iterations = 1;
  res.residual = std::abs(p0.miss);
  res.best_angle = th0;
  if (p0.found && std::abs(p0.miss) <= opt.endpoint_tol) return finish(p0, th0);

  double step = std::clamp(p0.miss / std::max(p0.s_star, 1e-3), -0.3, 0.3);
  if (step == 0.0) step = 1e-3;
  double th1 = th0 + step;
  bool bracketed = false;
  double lo = 0, hi = 0, m_lo = 0, m_hi = 0;
  for (int it = 1; it < opt.max_iters; ++it) {
    detail::Probe p1 = detail::probe(metric, from, to, th1, s_cap, opt.geodesic);
    ++res.iterations;
    if (std::abs(p1.miss) < res.residual) {
      res.residual = std::abs(p1.miss);
      res.best_angle = th1;
    }
    if (p1.found && std::abs(p1.miss) <= opt.endpoint_tol) return finish(p1, th1);
    if (p0.found && p1.found && (p0.miss > 0) != (p1.miss > 0)) {
      bracketed = true;
      lo = th0;
      m_lo = p0.miss;
      hi = th1;
      m_hi = p1.miss;
    } else if (bracketed && p1.found) {
      // keep the bracket consistent with the new iterate
      if ((p1.miss > 0) == (m_lo > 0)) {
        lo = th1;
        m_lo = p1.miss;
      } else {
        hi = th1;
        m_hi = p1.miss;
      }
    }
    double th2;
    const double dm = p1.miss - p0.miss;
    if (dm != 0.0 && p0.found && p1.found)
      th2 = th1 - p1.miss * (th1 - th0) / dm;
    else
      th2 = th1 + std::clamp(p1.miss / std::max(p1.s_star, 1e-3), -0.3, 0.3);
    if (bracketed) {
      const double a = std::min(lo, hi), b = std::max(lo, hi);
      if (!(th2 > a && th2 < b)) th2 = lo - m_lo * (hi - lo) / (m_hi - m_lo);
      if (!(th2 > a && th2 < b)) th2 = 0.5 * (a + b);
      if (b - a < 1e-16) break;
    } else {
      th2 = th1 + std::clamp(th2 - th1, -0.3, 0.3);
    }
    if (th2 == th1) break;
    th0 = th1;
    p0 = std::move(p1);
    th1 = th2;
  }
  return res;
}

/// All geodesics from x to y of length at most L found by the seed fan.
inline ConnectingFamily connect_all(const TorusMetric& metric, const TorusPoint& x, const TorusPoint& y, double L,
                                    const ConnectOptions& opt = {}) {
  ConnectingFamily fam;
  fam.metric = std::make_shared<const TorusMetric>(metric);
  fam.x = x;
  fam.y = y;
  fam.budget = L;
  const std::vector<CoverPoint> targets = enumerate_targets(metric, x, y, L, opt);
  fam.targets = targets.size();
  fam.seeds_per_target = 1 + static_cast<std::size_t>(std::max(0, opt.n_seed_fan));
  const CoverPoint from = metric.lattice().to_cover(x);
  const double length_ok = L * (1.0 + 1e-12) + 1e-12;

  std::vector<double> seeds_offsets{0.0};
  for (int k = 1; k <= opt.n_seed_fan; ++k) {
    const int j = (k + 1) / 2;
    seeds_offsets.push_back((k % 2 == 1 ? 1.0 : -1.0) * j * opt.fan_step);
  }

  std::vector<std::vector<GeodesicPath>> per_target(targets.size());
  std::vector<std::size_t> failures(targets.size(), 0);
  ShootOptions so = opt.shoot;
  so.s_cap = 1.05 * L + 0.1;
  parallel_for(targets.size(), opt.threads, [&](std::size_t i) {
    const Vec2 d = targets[i] - from;
    const double direct = std::atan2(d.y, d.x);
    auto& found = per_target[i];
    for (double off : seeds_offsets) {
      ShootResult r = shoot(metric, from, targets[i], direct + off, so);
      if (!r.hit()) {
        ++failures[i];
        continue;
      }
      if (r.path->total_length > length_ok) continue;
      const bool dup = std::any_of(found.begin(), found.end(), [&](const GeodesicPath& g) {
        return std::abs(wrap_angle(g.launch_angle - r.path->launch_angle)) <= opt.angle_dedup_tol;
      });
      if (!dup) found.push_back(std::move(*r.path));
    }
  });
  for (std::size_t i = 0; i < targets.size(); ++i) {
    fam.failed_shots += failures[i];
    for (auto& p : per_target[i]) fam.paths.push_back(std::move(p));
  }
  std::stable_sort(fam.paths.begin(), fam.paths.end(), [](const GeodesicPath& a, const GeodesicPath& b) {
    if (a.total_length != b.total_length) return a.total_length < b.total_length;
    if (a.homotopy != b.homotopy) return a.homotopy < b.homotopy;
    return a.launch_angle < b.launch_angle;
  });
  return fam;
}

/// Length of the shortest geodesic joining a and b on the torus, found by
/// connecting within the conformal length of the shortest straight chord.
/// Empty when the connector fails to produce any geodesic.
inline std::optional<double> geodesic_distance(const TorusMetric& metric, const CoverPoint& a, const CoverPoint& b,
                                               const ConnectOptions& opt = {}) {
  const Vec2 d = torus_displacement(metric.lattice(), a, b);
  if (norm(d) < 1e-13) return norm(d) * std::exp(metric.phi(a));
  const double upper = chord_length(metric, a, a + d);
  ConnectOptions o = opt;
  const ConnectingFamily fam =
      connect_all(metric, reduce(metric, a).point, reduce(metric, b).point, upper * (1.0 + 1e-9) + 1e-12, o);
  if (fam.paths.empty()) return std::nullopt;
  return fam.paths.front().total_length;
}

struct CrossingViolation {
  std::size_t first = 0, second = 0;  // path indices within the family
  CoverPoint point;
  double s_first = 0.0, s_second = 0.0;
};

/// Transversal crossings between interiors of paths heading to different
/// targets, checked on the universal cover. Two minimising geodesics from a
/// common start cannot meet again, so any hit marks a non-minimal member.
inline std::vector<CrossingViolation> crossing_violations(const ConnectingFamily& fam, double margin = 1e-6) {
  std::vector<CrossingViolation> out;
  const double cell = 0.05;
  std::unordered_map<long long, std::vector<std::pair<std::size_t, std::size_t>>> grid;
  auto key = [](long i, long j) { return (static_cast<long long>(i) << 32) ^ static_cast<long long>(j & 0xffffffff); };
  for (std::size_t p = 0; p < fam.paths.size(); ++p) {
    const auto& s = fam.paths[p].samples;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      const Vec2 a = s[k].pos, b = s[k + 1].pos;
      const long i0 = static_cast<long>(std::floor(std::min(a.x, b.x) / cell));
      const long i1 = static_cast<long>(std::floor(std::max(a.x, b.x) / cell));
      const long j0 = static_cast<long>(std::floor(std::min(a.y, b.y) / cell));
      const long j1 = static_cast<long>(std::floor(std::max(a.y, b.y) / cell));
      for (long i = i0; i <= i1; ++i)
        for (long j = j0; j <= j1; ++j) grid[key(i, j)].push_back({p, k});
    }
  }
  std::vector<long long> keys;
  keys.reserve(grid.size());
  for (const auto& kv : grid) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  for (long long kk : keys) {
    const auto& list = grid[kk];
    for (std::size_t u = 0; u < list.size(); ++u)
      for (std::size_t w = u + 1; w < list.size(); ++w) {
        auto [pa, ka] = list[u];
        auto [pb, kb] = list[w];
        if (pa == pb) continue;
        const GeodesicPath& A = fam.paths[pa];
        const GeodesicPath& B = fam.paths[pb];
        if (A.homotopy == B.homotopy) continue;
        const auto hit = intersect_segments(A.samples[ka].pos, A.samples[ka + 1].pos, B.samples[kb].pos,
                                            B.samples[kb + 1].pos);
        if (!hit) continue;
        const double sa = A.samples[ka].s + hit->t * (A.samples[ka + 1].s - A.samples[ka].s);
        const double sb = B.samples[kb].s + hit->r * (B.samples[kb + 1].s - B.samples[kb].s);
        if (sa <= margin || sb <= margin || sa >= A.total_length - margin || sb >= B.total_length - margin)
          continue;
        // a crossing spanning two cells is reported once, by the cell holding it
        const long ci = static_cast<long>(std::floor(hit->point.x / cell));
        const long cj = static_cast<long>(std::floor(hit->point.y / cell));
        if (key(ci, cj) != kk) continue;
        out.push_back({std::min(pa, pb), std::max(pa, pb), hit->point, pa < pb ? sa : sb, pa < pb ? sb : sa});
      }
  }
  std::sort(out.begin(), out.end(), [](const CrossingViolation& a, const CrossingViolation& b) {
    return std::tie(a.first, a.second, a.s_first) < std::tie(b.first, b.second, b.s_first);
  });
  return out;
}

}  // namespace torusblock
