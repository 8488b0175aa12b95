#pragma once

// Unit-speed geodesic flow of a conformal torus metric on the universal cover.
//
// With g = exp(2 phi) |dz|^2 the geodesic Hamiltonian is
//   H(z, p) = 1/2 exp(-2 phi(z)) |p|^2,
// and arc length parametrisation corresponds to H = 1/2.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "torusblock/integrator.hpp"
#include "torusblock/metric.hpp"

namespace torusblock {

struct GeodesicState {
  CoverPoint position;
  Vec2 momentum;
  double s = 0.0;
};

inline double hamiltonian(const TorusMetric& metric, const GeodesicState& st) {
  return 0.5 * std::exp(-2.0 * metric.phi(st.position)) * norm2(st.momentum);
}

/// Unit-speed launch state at `start` heading along the Euclidean angle `angle`.
inline GeodesicState launch_state(const TorusMetric& metric, const CoverPoint& start, double angle) {
  const double scale = std::exp(metric.phi(start));
  return {start, Vec2{std::cos(angle), std::sin(angle)} * scale, 0.0};
}

struct PathSample {
  double s = 0.0;
  CoverPoint pos;
  Vec2 vel;  // dz/ds in cover coordinates
};

struct GeodesicPath {
  std::vector<PathSample> samples;
  double total_length = 0.0;
  IVec2 homotopy;
  double launch_angle = 0.0;
  double energy_drift = 0.0;  // max relative |H(s) - H(0)| / H(0) seen while integrating

  const CoverPoint& start() const { return samples.front().pos; }
  const CoverPoint& end() const { return samples.back().pos; }

  /// Cubic Hermite interpolation between the stored samples.
  PathSample at(double s) const {
    if (samples.size() == 1 || s <= samples.front().s) return samples.front();
    if (s >= samples.back().s) return samples.back();
    auto it = std::upper_bound(samples.begin(), samples.end(), s,
                               [](double v, const PathSample& p) { return v < p.s; });
    const PathSample& b = *it;
    const PathSample& a = *(it - 1);
    return hermite(a, b, s);
  }

  static PathSample hermite(const PathSample& a, const PathSample& b, double s) {
    const double h = b.s - a.s;
    const double t = (s - a.s) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1, d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
    PathSample out;
    out.s = s;
    out.pos = a.pos * h00 + a.vel * (h * h10) + b.pos * h01 + b.vel * (h * h11);
    out.vel = (a.pos * d00 + b.pos * d01) / h + a.vel * d10 + b.vel * d11;
    return out;
  }
};

struct GeodesicOptions {
  double tol = 1e-12;
  double max_sample_spacing = 1e-2;
  double max_step = 0.1;
};

/// One accepted integrator step, kept for dense resampling.
struct StepRecord {
  double s0, s1;
  State<4> y0, y1;
  State<4> f0, f1;

  CoverPoint pos0() const { return {y0[0], y0[1]}; }
  CoverPoint pos1() const { return {y1[0], y1[1]}; }
  Vec2 vel0() const { return {f0[0], f0[1]}; }
  Vec2 vel1() const { return {f1[0], f1[1]}; }
  /// Dense output at s0 <= s <= s1. The velocity comes from the interpolated
  /// momentum, which keeps it unit speed to the integration tolerance.
  PathSample sample(const TorusMetric& metric, double s) const {
    PathSample out = GeodesicPath::hermite({s0, pos0(), vel0()}, {s1, pos1(), vel1()}, s);
    const PathSample mom =
        GeodesicPath::hermite({s0, {y0[2], y0[3]}, {f0[2], f0[3]}}, {s1, {y1[2], y1[3]}, {f1[2], f1[3]}}, s);
    out.vel = mom.pos * std::exp(-2.0 * metric.phi(out.pos));
    return out;
  }
};

struct Trace {
  std::vector<StepRecord> steps;
  GeodesicState start;
  double launch_angle = 0.0;
  double end_s = 0.0;  // where the trace was truncated
  double energy_drift = 0.0;
};

namespace detail {

inline void geodesic_rhs(const TorusMetric& metric, const State<4>& y, State<4>& dy) {
  const PhiSample ph = metric.conformal_value_grad({y[0], y[1]});
  const double w = std::exp(-2.0 * ph.phi);
  const double p2 = y[2] * y[2] + y[3] * y[3];
  dy[0] = w * y[2];
  dy[1] = w * y[3];
  dy[2] = ph.dphi_dx * w * p2;
  dy[3] = ph.dphi_dy * w * p2;
}

}  // namespace detail

/// Integrate from a launch state. `stop(record)` may return a truncation
/// arc length inside the step (s0 < s <= s1) to end the trace there, or a
/// negative value to continue.
inline Trace trace_geodesic(const TorusMetric& metric, const GeodesicState& start, double s_max,
                            const GeodesicOptions& opt,
                            const std::function<double(const StepRecord&)>& stop = {}) {
  Trace tr;
  tr.start = start;
  tr.launch_angle = std::atan2(start.momentum.y, start.momentum.x);
  tr.end_s = s_max;
  const double h0 = hamiltonian(metric, start);
  StepperOptions so;
  so.rtol = so.atol = opt.tol;
  so.h_max = opt.max_step;
  State<4> y{start.position.x, start.position.y, start.momentum.x, start.momentum.y};
  auto rhs = [&metric](double, const State<4>& yy, State<4>& dy) { detail::geodesic_rhs(metric, yy, dy); };
  const bool flat = metric.is_flat();
  integrate_dp54<4>(rhs, y, s_max, so,
                    [&](double t0, const State<4>& y0, const State<4>& f0, double t1, const State<4>& y1,
                        const State<4>& f1) {
                      tr.steps.push_back({t0, t1, y0, y1, f0, f1});
                      if (!flat) {
                        const double h = 0.5 * std::exp(-2.0 * metric.phi({y1[0], y1[1]})) *
                                         (y1[2] * y1[2] + y1[3] * y1[3]);
                        tr.energy_drift = std::max(tr.energy_drift, std::abs(h - h0) / h0);
                      } else {
                        const double h = 0.5 * (y1[2] * y1[2] + y1[3] * y1[3]);
                        tr.energy_drift = std::max(tr.energy_drift, std::abs(h - h0) / h0);
                      }
                      if (stop) {
                        const double cut = stop(tr.steps.back());
                        if (cut >= 0.0) {
                          tr.end_s = cut;
                          return false;
                        }
                      }
                      return true;
                    });
  return tr;
}

/// Resample a trace at uniform arc-length spacing no larger than `spacing`.
inline GeodesicPath resample(const TorusMetric& metric, const Trace& tr, double spacing) {
  GeodesicPath path;
  path.launch_angle = tr.launch_angle;
  path.energy_drift = tr.energy_drift;
  const double total = tr.end_s;
  path.total_length = total;
  const Vec2 v0 = tr.steps.empty() ? Vec2{} : tr.steps.front().vel0();
  if (total <= 0.0 || tr.steps.empty()) {
    path.samples.push_back({0.0, tr.start.position, v0});
    path.total_length = 0.0;
  } else {
    const long n = std::max(1L, static_cast<long>(std::ceil(total / spacing - 1e-12)));
    const double ds = total / static_cast<double>(n);
    path.samples.reserve(n + 1);
    std::size_t k = 0;
    for (long i = 0; i <= n; ++i) {
      const double s = (i == n) ? total : ds * static_cast<double>(i);
      while (k + 1 < tr.steps.size() && tr.steps[k].s1 < s) ++k;
      path.samples.push_back(tr.steps[k].sample(metric, s));
    }
    path.samples.front().pos = tr.start.position;
  }
  const Reduced a = reduce(metric, path.start());
  const Reduced b = reduce(metric, path.end());
  path.homotopy = b.shift - a.shift;
  return path;
}

/// Geodesic of length `s_max` from `start` launched at Euclidean angle `angle`.
inline GeodesicPath flow(const TorusMetric& metric, const CoverPoint& start, double angle, double s_max,
                         double tol, const GeodesicOptions& opt = {}) {
  if (!(s_max > 0.0)) throw std::invalid_argument("flow: s_max must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("flow: tol must be positive");
  GeodesicOptions o = opt;
  o.tol = tol;
  const Trace tr = trace_geodesic(metric, launch_state(metric, start, angle), s_max, o);
  return resample(metric, tr, o.max_sample_spacing);
}

/// Reverse of a path (same point set, opposite orientation).
inline GeodesicPath reversed(const TorusMetric& metric, const GeodesicPath& p) {
  GeodesicPath r = p;
  std::reverse(r.samples.begin(), r.samples.end());
  for (auto& smp : r.samples) {
    smp.s = p.total_length - smp.s;
    smp.vel = -smp.vel;
  }
  r.samples.front().s = 0.0;
  r.launch_angle = std::atan2(r.samples.front().vel.y, r.samples.front().vel.x);
  const Reduced a = reduce(metric, r.start());
  const Reduced b = reduce(metric, r.end());
  r.homotopy = b.shift - a.shift;
  return r;
}

/// Conformal length of the straight chord a->b (Gauss-Legendre quadrature).
inline double chord_length(const TorusMetric& metric, const CoverPoint& a, const CoverPoint& b) {
  const double len = norm(b - a);
  if (metric.is_flat() || len == 0.0) return len;
  static constexpr double x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                  -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                  0.7966664774136267,  0.9602898564975363};
  static constexpr double w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                  0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                  0.2223810344533745, 0.1012285362903763};
  const int pieces = std::max(1, static_cast<int>(std::ceil(len / 0.05)));
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double t0 = double(k) / pieces, t1 = double(k + 1) / pieces;
    double sum = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * x[i];
      sum += w[i] * std::exp(metric.phi(a + (b - a) * t));
    }
    total += 0.5 * (t1 - t0) * sum;
  }
  return total * len;
}

}  // namespace torusblock
