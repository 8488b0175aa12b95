#pragma once

// Closed geodesics on the torus and distances measured against them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "torusblock/connect.hpp"

namespace torusblock {

/// A closed geodesic of free homotopy class (q,p), lifted to the cover.
struct PeriodicGeodesic {
  IVec2 klass;                     // (q,p), coprime
  std::vector<CoverPoint> nodes;   // z_0..z_{N-1}; z_N = z_0 + q e1 + p e2
  double length = 0.0;
  double transversal_offset = 0.0; // mean of q*v - p*u over the nodes, reduced to [0,1)
  GeodesicPath loop;               // one period, dense samples
  double residual = 0.0;           // largest kink angle between consecutive arcs
  int sweeps = 0;
  std::vector<double> length_history;  // length after every half sweep

  Vec2 period(const Lattice& lat) const { return lat.translation(klass); }
};

/// Point on the periodic lift at arc length s (any real s).
inline PathSample loop_at(const Lattice& lat, const PeriodicGeodesic& g, double s) {
  const double L = g.loop.total_length;
  const double k = std::floor(s / L);
  PathSample out = g.loop.at(s - k * L);
  out.pos += g.period(lat) * k;
  out.s = s;
  return out;
}

/// The periodic lift over `periods` consecutive periods as one open path.
inline GeodesicPath unroll(const Lattice& lat, const PeriodicGeodesic& g, int periods) {
  if (periods < 1) throw std::invalid_argument("unroll: periods must be >= 1");
  GeodesicPath out = g.loop;
  const auto& smp = g.loop.samples;
  const double L = g.loop.total_length;
  for (int k = 1; k < periods; ++k)
    for (std::size_t i = 1; i < smp.size(); ++i) {
      PathSample ps = smp[i];
      ps.s += k * L;
      ps.pos += g.period(lat) * static_cast<double>(k);
      out.samples.push_back(ps);
    }
  out.total_length = periods * L;
  out.homotopy = {g.klass.m * periods, g.klass.n * periods};
  return out;
}

/// Transversal coordinate q*v - p*u of a cover point (lattice coordinates).
inline double transversal_coordinate(const Lattice& lat, const IVec2& klass, const CoverPoint& p) {
  const Vec2 uv = lat.to_lattice(p);
  return static_cast<double>(klass.m) * uv.y - static_cast<double>(klass.n) * uv.x;
}

struct SideSample {
  double distance = 0.0;  // Euclidean distance to the nearest lift
  double signed_offset = 0.0;
  double s = 0.0;         // loop parameter of the nearest point
};

/// Nearest point of the closed geodesic (any lift) to p, with the side of p
/// relative to the loop's orientation. Euclidean in cover units.
inline SideSample nearest_on_loop(const Lattice& lat, const PeriodicGeodesic& g, const CoverPoint& p) {
  const auto& smp = g.loop.samples;
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t k = 0; k + 1 < smp.size(); ++k) {
    const double d = norm2(torus_displacement(lat, smp[k].pos, p));
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  // refine on the two adjacent chords
  SideSample out;
  out.distance = INFINITY;
  const std::size_t n = smp.size() - 1;
  for (int side = -1; side <= 0; ++side) {
    const std::size_t i0 = (best + n + side) % n;
    const Vec2 a = smp[i0].pos;
    const Vec2 d = torus_displacement(lat, a, p);
    const Vec2 seg = smp[i0 + 1].pos - smp[i0].pos;
    const double t = project_on_segment(a + d, a, a + seg);
    const Vec2 foot = a + seg * t;
    const Vec2 off = a + d - foot;
    const double dist = norm(off);
    if (dist < out.distance) {
      out.distance = dist;
      const Vec2 tan = seg / std::max(norm(seg), 1e-300);
      out.signed_offset = cross(tan, off) >= 0.0 ? dist : -dist;
      out.s = smp[i0].s + t * (smp[i0 + 1].s - smp[i0].s);
    }
  }
  return out;
}

/// Transversal crossings of `path` through the closed geodesic: sign flips of
/// the side while the path is within `near` of the loop.
inline std::vector<double> crossings_with_loop(const Lattice& lat, const PeriodicGeodesic& g,
                                               const GeodesicPath& path, double near = 0.02) {
  std::vector<double> out;
  double prev_off = 0.0;
  double prev_s = 0.0;
  bool have_prev = false;
  for (const auto& smp : path.samples) {
    const SideSample ss = nearest_on_loop(lat, g, smp.pos);
    if (ss.signed_offset == 0.0) continue;
    if (have_prev && (ss.signed_offset > 0) != (prev_off > 0) &&
        std::max(std::abs(ss.signed_offset), std::abs(prev_off)) <= near)
      out.push_back(0.5 * (prev_s + smp.s));
    prev_off = ss.signed_offset;
    prev_s = smp.s;
    have_prev = true;
  }
  return out;
}

/// Shortest geodesic distance from p to the closed geodesic as subsets.
///
/// The loop parameter is located by minimising the conformal chord length,
/// then the distance to that loop point is measured with the connector.
inline double distance_to_closed(const TorusMetric& metric, const CoverPoint& p, const PeriodicGeodesic& gamma,
                                 const ConnectOptions& opt = {}) {
  if (gamma.loop.samples.size() < 2) throw std::invalid_argument("distance_to_closed: empty closed geodesic");
  const Lattice& lat = metric.lattice();
  const SideSample ss = nearest_on_loop(lat, gamma, p);
  auto chord = [&](double s) {
    const CoverPoint g = loop_at(lat, gamma, s).pos;
    return chord_length(metric, g, g + torus_displacement(lat, g, p));
  };
  // golden-section search around the Euclidean foot point
  const double h = 2.0 * gamma.loop.total_length / std::max<std::size_t>(1, gamma.loop.samples.size() - 1);
  double a = ss.s - h, b = ss.s + h;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = chord(c), fd = chord(d);
  for (int it = 0; it < 60 && b - a > 1e-13; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = chord(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = chord(d);
    }
  }
  const double s_star = 0.5 * (a + b);
  const double upper = chord(s_star);
  const CoverPoint foot = loop_at(lat, gamma, s_star).pos;
  const auto dg = geodesic_distance(metric, foot, p, opt);
  return dg ? std::min(*dg, upper) : upper;
}

inline double distance_to_closed(const TorusMetric& metric, const TorusPoint& p, const PeriodicGeodesic& gamma,
                                 const ConnectOptions& opt = {}) {
  return distance_to_closed(metric, lift(metric, p), gamma, opt);
}

}  // namespace torusblock
