#pragma once

// Periodic minimal geodesics per homotopy class, average slopes, bad-gap
// detection, asymptotic geodesics and the foliation check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusblock/connect.hpp"
#include "torusblock/parallel.hpp"
#include "torusblock/periodic.hpp"

namespace torusblock {

class ShorteningNotConverged : public std::runtime_error {
 public:
  ShorteningNotConverged(const std::string& what, PeriodicGeodesic last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  PeriodicGeodesic last_iterate;
};

struct ShortenOptions {
  double convergence_tol = 1e-10;   // relative length decrease per sweep
  double stationarity_tol = 1e-7;   // largest kink angle (radians)
  int max_sweeps = 10'000;
  int extrapolate_every = 20;       // sweeps between drift extrapolations, 0 disables
  ShootOptions arc;                 // shooting used for node-to-node arcs

  ShortenOptions() { arc.endpoint_tol = 1e-11; }
};

struct MinimalOptions {
  ShortenOptions shorten;
  ConnectOptions connect;
  double cluster_tol = 1e-3;
  double length_tol = 1e-6;
  double spatial_tol = 1e-4;
  double epsilon_floor = 0.05;
  int nodes = 0;  // 0 selects 16 * (|q| + |p|)
  unsigned threads = 1;
};

namespace detail {

inline long ext_gcd(long a, long b, long& x, long& y) {
  if (b == 0) {
    x = a >= 0 ? 1 : -1;
    y = 0;
    return std::abs(a);
  }
  long x1, y1;
  const long g = ext_gcd(b, a % b, x1, y1);
  x = y1;
  y = x1 - (a / b) * y1;
  return g;
}

inline void check_class(const IVec2& k) {
  if (k.m == 0 && k.n == 0) throw std::invalid_argument("homotopy class (0,0) has no closed geodesic");
  if (std::gcd(std::abs(k.m), std::abs(k.n)) != 1)
    throw std::invalid_argument("homotopy class must be primitive (gcd(|q|,|p|) = 1)");
}

inline double wrap_unit(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

/// Cyclic distance on R/Z.
inline double cyclic_gap(double a, double b) {
  const double d = wrap_unit(a - b);
  return std::min(d, 1.0 - d);
}

}  // namespace detail

inline int default_node_count(const IVec2& klass) {
  return static_cast<int>(16 * (std::abs(klass.m) + std::abs(klass.n)));
}

/// Cover point whose transversal coordinate equals `offset`.
inline CoverPoint offset_base_point(const Lattice& lat, const IVec2& klass, double offset) {
  detail::check_class(klass);
  long x, y;
  detail::ext_gcd(klass.m, klass.n, x, y);  // x q + y p = 1
  // q*v - p*u = 1 with (u, v) = (-y, x)
  return lat.to_cover(Vec2{-static_cast<double>(y) * offset, static_cast<double>(x) * offset});
}

namespace detail {

/// Birkhoff sweeps on the closed polygon `g.nodes` until the length stalls
/// and the kinks vanish. Leaves the last (odd) half sweep's arcs in `arcs`.
inline void birkhoff_sweeps(const TorusMetric& metric, const Vec2& T, PeriodicGeodesic& g,
                            std::vector<GeodesicPath>& arcs, const ShortenOptions& opt) {
  const int N = static_cast<int>(g.nodes.size());
  auto node = [&](int k) -> CoverPoint {
    const int w = (k >= N) ? 1 : 0;
    return g.nodes[k - w * N] + T * double(w);
  };
  auto set_node = [&](int k, const CoverPoint& z) {
    if (k >= N)
      g.nodes[k - N] = z - T;
    else
      g.nodes[k] = z;
  };

  std::vector<double> angle_hint(N, NAN);
  arcs.assign(N / 2, GeodesicPath{});
  double prev = INFINITY;
  auto half_sweep = [&](int parity) {
    double total = 0.0;
    for (int j = 0; j < N / 2; ++j) {
      const int k = parity + 2 * j;
      const CoverPoint a = node(k), b = node(k + 2);
      const Vec2 d = b - a;
      const double seed = std::isnan(angle_hint[k]) ? std::atan2(d.y, d.x) : angle_hint[k];
      ShootResult r = shoot(metric, a, b, seed, opt.arc);
      if (!r.hit()) {
        g.length = prev;
        throw ShorteningNotConverged("curve_shorten: arc shooting failed (residual " +
                                         std::to_string(r.residual) + ")",
                                     g);
      }
      angle_hint[k] = r.path->launch_angle;
      total += r.path->total_length;
      arcs[j] = std::move(*r.path);
    }
    for (int j = 0; j < N / 2; ++j) {
      const int k = parity + 2 * j;
      set_node(k + 1, arcs[j].at(0.5 * arcs[j].total_length).pos);
    }
    return total;
  };
  auto kink = [&]() {
    double worst = 0.0;
    for (int j = 0; j < N / 2; ++j) {
      const GeodesicPath& in = arcs[j];
      const GeodesicPath& out = arcs[(j + 1) % (N / 2)];
      const Vec2 a = in.samples.back().vel, b = out.samples.front().vel;
      worst = std::max(worst, std::abs(std::atan2(cross(a, b), dot(a, b))));
    }
    return worst;
  };

  // length of the closed polygon of geodesic edges through all nodes
  auto polygon_length = [&](const std::vector<CoverPoint>& z) -> double {
    double total = 0.0;
    for (int k = 0; k < N; ++k) {
      const CoverPoint a = z[k], b = k + 1 < N ? z[k + 1] : z[0] + T;
      const Vec2 d = b - a;
      ShootResult r = shoot(metric, a, b, std::atan2(d.y, d.x), opt.arc);
      if (!r.hit()) return INFINITY;
      total += r.path->total_length;
    }
    return total;
  };

  std::vector<CoverPoint> snapshot = g.nodes;
  double snapshot_residual = INFINITY;
  for (int sweep = 1;; ++sweep) {
    g.length_history.push_back(half_sweep(0));
    const double len = half_sweep(1);
    g.length_history.push_back(len);
    ++g.sweeps;
    g.residual = kink();
    const bool stalled = prev - len <= opt.convergence_tol * len;
    prev = len;
    g.length = len;
    if (stalled && g.residual <= opt.stationarity_tol) return;
    if (g.sweeps >= opt.max_sweeps)
      throw ShorteningNotConverged("curve_shorten: no convergence after " + std::to_string(g.sweeps) + " sweeps", g);
    if (opt.extrapolate_every <= 0 || sweep % opt.extrapolate_every) continue;

    // slow drift: extend the motion of the last window while the polygon shortens
    if (g.residual > 0.5 * snapshot_residual) {
      std::vector<CoverPoint> drift(N), trial(N);
      for (int k = 0; k < N; ++k) drift[k] = g.nodes[k] - snapshot[k];
      double best = polygon_length(g.nodes), best_t = 0.0;
      for (double t = 1.0; t <= 4096.0; t *= 2.0) {
        for (int k = 0; k < N; ++k) trial[k] = g.nodes[k] + drift[k] * t;
        const double P = polygon_length(trial);
        if (!(P < best - 1e-13 * best)) break;
        best = P;
        best_t = t;
      }
      if (best_t > 0.0) {
        for (int k = 0; k < N; ++k) g.nodes[k] += drift[k] * best_t;
        std::fill(angle_hint.begin(), angle_hint.end(), NAN);
        prev = INFINITY;
      }
    }
    snapshot = g.nodes;
    snapshot_residual = g.residual;
  }
}

}  // namespace detail

/// Birkhoff-style curve shortening from the straight closed curve through
/// `base` in class (q,p). Alternately, arcs between even (then odd) nodes are
/// replaced by shot geodesics and the skipped nodes move to the arc
/// midpoints, until the length stalls and the kinks vanish.
///
/// Transversal drift slows down like 1/N^2, so the polygon is first
/// converged with fewer nodes (down to 4 (|q| + |p|), at least 8) and then
/// refined by arc midpoints up to N.
inline PeriodicGeodesic curve_shorten_through(const TorusMetric& metric, const IVec2& klass, const CoverPoint& base,
                                              int N, const ShortenOptions& opt = {}) {
  detail::check_class(klass);
  if (N < default_node_count(klass))
    throw std::invalid_argument("curve_shorten: need N >= 16 * (|q| + |p|)");
  if (N % 2) ++N;
  const Lattice& lat = metric.lattice();
  const Vec2 T = lat.translation(klass);
  const int coarsest = std::max(8, static_cast<int>(4 * (std::abs(klass.m) + std::abs(klass.n))));
  int n0 = N;
  while (n0 % 4 == 0 && n0 / 2 >= coarsest) n0 /= 2;

  PeriodicGeodesic g;
  g.klass = klass;
  g.nodes.resize(n0);
  for (int k = 0; k < n0; ++k) g.nodes[k] = base + T * (double(k) / n0);

  std::vector<GeodesicPath> arcs;
  detail::birkhoff_sweeps(metric, T, g, arcs, opt);
  while (static_cast<int>(g.nodes.size()) < N) {
    // split every edge at the midpoint of the geodesic joining its ends
    const int n = static_cast<int>(g.nodes.size());
    std::vector<CoverPoint> fine(2 * n);
    for (int k = 0; k < n; ++k) {
      const CoverPoint a = g.nodes[k];
      const CoverPoint b = k + 1 < n ? g.nodes[k + 1] : g.nodes[0] + T;
      const Vec2 d = b - a;
      ShootResult r = shoot(metric, a, b, std::atan2(d.y, d.x), opt.arc);
      if (!r.hit()) throw ShorteningNotConverged("curve_shorten: refinement shot failed", g);
      fine[2 * k] = a;
      fine[2 * k + 1] = r.path->at(0.5 * r.path->total_length).pos;
    }
    g.nodes = std::move(fine);
    detail::birkhoff_sweeps(metric, T, g, arcs, opt);
  }

  // one period as a single dense path, starting at node 1
  GeodesicPath& loop = g.loop;
  loop = arcs[0];
  for (std::size_t j = 1; j < arcs.size(); ++j) {
    const double s0 = loop.total_length;
    for (std::size_t i = 1; i < arcs[j].samples.size(); ++i) {
      PathSample smp = arcs[j].samples[i];
      smp.s += s0;
      loop.samples.push_back(smp);
    }
    loop.total_length = s0 + arcs[j].total_length;
    loop.energy_drift = std::max(loop.energy_drift, arcs[j].energy_drift);
  }
  loop.homotopy = klass;
  loop.launch_angle = arcs[0].launch_angle;

  double off = 0.0;
  for (const auto& z : g.nodes) off += transversal_coordinate(lat, klass, z);
  g.transversal_offset = detail::wrap_unit(off / static_cast<double>(g.nodes.size()));
  return g;
}

/// Curve shortening seeded by the straight closed curve at transversal
/// offset `seed_offset` (q*v - p*u in lattice coordinates).
inline PeriodicGeodesic curve_shorten(const TorusMetric& metric, const IVec2& klass, double seed_offset, int N,
                                      const ShortenOptions& opt = {}) {
  return curve_shorten_through(metric, klass, offset_base_point(metric.lattice(), klass, seed_offset), N, opt);
}

inline constexpr double kInfiniteSlope = INFINITY;

/// Average slope of a periodic minimal geodesic: p/q, or +inf when q = 0.
inline double average_slope(const PeriodicGeodesic& g) {
  if (g.klass.m == 0) return kInfiniteSlope;
  return static_cast<double>(g.klass.n) / static_cast<double>(g.klass.m);
}

struct SlopeOptions {
  double window = 20.0;          // trailing arc-length window
  double bounded_xi_tol = 1e-3;  // lattice-coordinate range below which xi counts as bounded
};

/// Least-squares slope of v against u (lattice coordinates) over the
/// trailing window of a long path; +inf when u stays bounded there.
inline double average_slope(const TorusMetric& metric, const GeodesicPath& path, const SlopeOptions& opt = {}) {
  if (path.total_length < opt.window)
    throw std::invalid_argument("average_slope: path shorter than the slope window");
  const double s_lo = path.total_length - opt.window;
  double su = 0, sv = 0, suu = 0, suv = 0, umin = INFINITY, umax = -INFINITY;
  long n = 0;
  for (const auto& smp : path.samples) {
    if (smp.s < s_lo) continue;
    const Vec2 uv = metric.lattice().to_lattice(smp.pos);
    su += uv.x;
    sv += uv.y;
    suu += uv.x * uv.x;
    suv += uv.x * uv.y;
    umin = std::min(umin, uv.x);
    umax = std::max(umax, uv.x);
    ++n;
  }
  if (umax - umin < opt.bounded_xi_tol) return kInfiniteSlope;
  const double mu = su / n, mv = sv / n;
  const double cov = suv / n - mu * mv, var = suu / n - mu * mu;
  return cov / var;
}

struct SeedOutcome {
  double seed_offset = 0.0;
  bool converged = false;
  double offset = 0.0;
  double length = 0.0;
  int sweeps = 0;
  std::string error;
};

struct Gap {
  double lower = 0.0, upper = 0.0, width = 0.0;  // upper may exceed 1 for the wrapping gap
  bool bad = false;
  double probe_offset = 0.0;        // where the midpoint re-seed converged
  double probe_length = 0.0;
  std::string probe_error;
};

struct StripReport {
  IVec2 klass;
  std::vector<PeriodicGeodesic> minimizers;  // sorted by transversal offset
  std::vector<Gap> gaps;
  std::vector<SeedOutcome> seeds;
  double min_length = INFINITY;

  std::size_t bad_gaps() const {
    return static_cast<std::size_t>(std::count_if(gaps.begin(), gaps.end(), [](const Gap& g) { return g.bad; }));
  }
};

/// Curve shortening from `n_seeds` equispaced offsets (i + 1/2)/n_seeds,
/// keeping the global minimisers of the class and classifying the gaps
/// between consecutive ones.
inline StripReport scan_minimizers(const TorusMetric& metric, const IVec2& klass, int n_seeds,
                                   const MinimalOptions& opt = {}) {
  detail::check_class(klass);
  if (n_seeds < 2) throw std::invalid_argument("scan_minimizers: need at least 2 seeds");
  const int N = opt.nodes > 0 ? opt.nodes : default_node_count(klass);
  StripReport rep;
  rep.klass = klass;
  rep.seeds.resize(n_seeds);
  std::vector<std::optional<PeriodicGeodesic>> loops(n_seeds);
  parallel_for(static_cast<std::size_t>(n_seeds), opt.threads, [&](std::size_t i) {
    SeedOutcome& so = rep.seeds[i];
    so.seed_offset = (static_cast<double>(i) + 0.5) / n_seeds;
    try {
      loops[i] = curve_shorten(metric, klass, so.seed_offset, N, opt.shorten);
      so.converged = true;
      so.offset = loops[i]->transversal_offset;
      so.length = loops[i]->length;
      so.sweeps = loops[i]->sweeps;
    } catch (const std::exception& e) {
      so.error = e.what();
    }
  });
  for (const auto& l : loops)
    if (l) rep.min_length = std::min(rep.min_length, l->length);
  if (!std::isfinite(rep.min_length)) return rep;

  // cluster global minimisers by offset (cyclic) and length
  for (auto& l : loops) {
    if (!l || l->length > rep.min_length + opt.length_tol) continue;
    const bool dup = std::any_of(rep.minimizers.begin(), rep.minimizers.end(), [&](const PeriodicGeodesic& m) {
      return detail::cyclic_gap(m.transversal_offset, l->transversal_offset) <= opt.cluster_tol &&
             std::abs(m.length - l->length) <= opt.length_tol;
    });
    if (!dup) rep.minimizers.push_back(std::move(*l));
  }
  std::sort(rep.minimizers.begin(), rep.minimizers.end(),
            [](const PeriodicGeodesic& a, const PeriodicGeodesic& b) { return a.transversal_offset < b.transversal_offset; });

  const std::size_t k = rep.minimizers.size();
  rep.gaps.resize(k);
  parallel_for(k, opt.threads, [&](std::size_t i) {
    Gap& gap = rep.gaps[i];
    gap.lower = rep.minimizers[i].transversal_offset;
    gap.upper = (i + 1 < k) ? rep.minimizers[i + 1].transversal_offset : rep.minimizers[0].transversal_offset + 1.0;
    gap.width = gap.upper - gap.lower;
    const double mid = detail::wrap_unit(0.5 * (gap.lower + gap.upper));
    try {
      const PeriodicGeodesic probe = curve_shorten(metric, klass, mid, N, opt.shorten);
      gap.probe_offset = probe.transversal_offset;
      gap.probe_length = probe.length;
      const double rel = detail::wrap_unit(probe.transversal_offset - gap.lower);
      const bool inside = rel > opt.cluster_tol && rel < gap.width - opt.cluster_tol;
      const bool minimal = probe.length <= rep.min_length + opt.length_tol;
      gap.bad = !(inside && minimal);
    } catch (const std::exception& e) {
      gap.probe_error = e.what();
      gap.bad = true;
    }
  });
  return rep;
}

struct AsymptoticCertificate {
  PeriodicGeodesic gamma;
  GeodesicPath c;
  std::vector<int> shot_index;          // i for which T^i x was reached
  std::vector<double> shot_angles;      // launch angles v_i
  double limit_angle = 0.0;
  std::vector<std::pair<double, double>> distances;  // (s_k, d(c(s_k), gamma))
  std::vector<double> crossings;        // arc lengths where c crosses gamma
  double epsilon_floor = 0.05;
  double horizon = 0.0;
  bool eventually_nonincreasing = false;
  bool verdict = false;

  double final_distance() const { return distances.empty() ? INFINITY : distances.back().second; }
};

/// Limit-of-directions construction: shoot from x to its translates
/// T^i x, i = 1..K, extrapolate the launch angles, follow the limit geodesic
/// for K periods and record its distance to gamma.
inline AsymptoticCertificate asymptotic_geodesic(const TorusMetric& metric, const PeriodicGeodesic& gamma,
                                                 const TorusPoint& x, int K, const MinimalOptions& opt = {}) {
  if (K < 4) throw std::invalid_argument("asymptotic_geodesic: K must be >= 4");
  const Lattice& lat = metric.lattice();
  const CoverPoint xc = lift(metric, x);
  if (distance_to_closed(metric, xc, gamma, opt.connect) <= opt.spatial_tol)
    throw std::invalid_argument("asymptotic_geodesic: x lies on the closed geodesic");

  AsymptoticCertificate cert;
  cert.gamma = gamma;
  cert.epsilon_floor = opt.epsilon_floor;
  const Vec2 T = gamma.period(lat);
  const double stretch = std::exp(metric.phi_max() - metric.phi_min());
  double seed = std::atan2(T.y, T.x);
  for (int i = 1; i <= K; ++i) {
    ShootOptions so = opt.connect.shoot;
    so.s_cap = 2.0 * i * norm(T) * stretch + 0.1;
    const CoverPoint target = xc + T * double(i);
    ShootResult r = shoot(metric, xc, target, seed, so);
    if (!r.hit()) continue;
    cert.shot_index.push_back(i);
    cert.shot_angles.push_back(r.path->launch_angle);
    seed = r.path->launch_angle;
  }
  const auto& v = cert.shot_angles;
  if (v.size() < 3) throw std::runtime_error("asymptotic_geodesic: fewer than 3 successful shots");

  // Aitken delta-squared on the last four angles
  double limit = v.back();
  if (v.size() >= 4) {
    const std::size_t n = v.size();
    const double d1 = v[n - 3] - v[n - 4], d2 = v[n - 2] - v[n - 3], d3 = v[n - 1] - v[n - 2];
    const double den = d3 - d2;
    const bool geometric = d1 != 0.0 && d2 != 0.0 && std::abs(d2 / d1) < 1.0 && std::abs(d3 / d2) < 1.0 &&
                           (d2 / d1) * (d3 / d2) > 0.0;
    if (geometric && std::abs(den) > 1e-300) limit = v[n - 1] - d3 * d3 / den;
  }
  cert.limit_angle = limit;

  cert.horizon = K * gamma.length;
  cert.c = flow(metric, xc, limit, cert.horizon, opt.shorten.arc.geodesic.tol, opt.connect.shoot.geodesic);
  const int per_period = 8;
  const int n_rec = K * per_period;
  for (int k = 0; k <= n_rec; ++k) {
    const double s = cert.horizon * k / n_rec;
    cert.distances.emplace_back(s, distance_to_closed(metric, cert.c.at(s).pos, gamma, opt.connect));
  }
  cert.crossings = crossings_with_loop(lat, gamma, cert.c);

  // non-increasing over the trailing half, up to a resolution of 1% of the floor
  const double slack = 0.01 * opt.epsilon_floor;
  bool mono = true;
  for (std::size_t k = cert.distances.size() / 2; k + 1 < cert.distances.size(); ++k)
    if (cert.distances[k + 1].second > cert.distances[k].second + slack) mono = false;
  cert.eventually_nonincreasing = mono;
  const double d0 = cert.distances.front().second;
  const double dN = cert.final_distance();
  cert.verdict = mono && cert.crossings.empty() && dN <= opt.epsilon_floor && dN <= 0.5 * d0;
  return cert;
}

struct FoliationPoint {
  TorusPoint point;
  bool covered = false;
  double distance = INFINITY;  // to the converged loop, cover units
  double length = INFINITY;
};

struct FoliationResult {
  double fraction = 0.0;
  double min_length = INFINITY;
  std::vector<FoliationPoint> points;
};

/// Fraction of a grid_n x grid_n lattice grid lying on a global minimiser of
/// the class, each point tested by shortening the straight loop through it.
inline FoliationResult foliation_check(const TorusMetric& metric, const IVec2& klass, int grid_n,
                                       const MinimalOptions& opt = {}) {
  detail::check_class(klass);
  if (grid_n < 4) throw std::invalid_argument("foliation_check: grid_n must be >= 4");
  const int N = opt.nodes > 0 ? opt.nodes : default_node_count(klass);
  const Lattice& lat = metric.lattice();
  FoliationResult res;
  res.points.resize(static_cast<std::size_t>(grid_n) * grid_n);
  std::vector<std::optional<PeriodicGeodesic>> loops(res.points.size());
  parallel_for(res.points.size(), opt.threads, [&](std::size_t idx) {
    FoliationPoint& fp = res.points[idx];
    fp.point = {double(idx / grid_n) / grid_n, double(idx % grid_n) / grid_n};
    try {
      loops[idx] = curve_shorten_through(metric, klass, lat.to_cover(fp.point), N, opt.shorten);
      fp.length = loops[idx]->length;
      fp.distance = nearest_on_loop(lat, *loops[idx], lat.to_cover(fp.point)).distance;
    } catch (const std::exception&) {
    }
  });
  for (const auto& fp : res.points) res.min_length = std::min(res.min_length, fp.length);
  std::size_t covered = 0;
  for (auto& fp : res.points) {
    fp.covered = fp.length <= res.min_length + opt.length_tol && fp.distance <= opt.spatial_tol;
    covered += fp.covered;
  }
  res.fraction = static_cast<double>(covered) / static_cast<double>(res.points.size());
  return res;
}

}  // namespace torusblock
