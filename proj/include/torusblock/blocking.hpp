#pragma once

// Blocking sets for connecting families.
//
// A point blocks a geodesic segment when it is an interior point of it. For a
// finite family the problem becomes a hitting-set instance over a finite
// candidate pool: every pairwise crossing of projected interiors plus each
// path's arc-length midpoint (which keeps the instance feasible).

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "torusblock/connect.hpp"

namespace torusblock {

/// Midpoint construction for a flat torus: with x lifted to the origin and
/// y to (a,b), every straight connecting segment has its midpoint in
/// (a/2, b/2) + (Z/2)^2. Returns the four points, sorted.
inline std::vector<TorusPoint> flat_blocking_set(const Lattice& /*lattice*/, const TorusPoint& x,
                                                 const TorusPoint& y) {
  std::vector<TorusPoint> out;
  const double hu = 0.5 * (y.u - x.u), hv = 0.5 * (y.v - x.v);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.push_back(wrap(x.u + hu + 0.5 * i, x.v + hv + 0.5 * j));
  std::sort(out.begin(), out.end());
  return out;
}

/// Reduced samples strictly inside the path, at least `margin` of arc
/// length away from both endpoints.
inline std::vector<TorusPoint> interior_samples(const TorusMetric& metric, const GeodesicPath& path, double margin) {
  if (!(margin >= 0.0) || margin >= 0.5 * path.total_length)
    throw std::invalid_argument("interior_samples: margin must be in [0, length/2)");
  std::vector<TorusPoint> out;
  for (const auto& smp : path.samples) {
    if (smp.s <= 0.0 || smp.s >= path.total_length) continue;
    if (smp.s < margin || smp.s > path.total_length - margin) continue;
    out.push_back(reduce(metric, smp.pos).point);
  }
  return out;
}

struct BlockingOptions {
  double spatial_tol = 1e-4;
  double interior_margin = -1.0;  // arc length excluded at both ends; negative selects spatial_tol
  std::size_t exact_limit = 64;   // largest family solved exactly
  long node_limit = 5'000'000;    // branch-and-bound budget before falling back to the incumbent
  ConnectOptions connect;

  double margin() const { return interior_margin >= 0.0 ? interior_margin : spatial_tol; }
};

struct CandidatePool {
  std::vector<TorusPoint> points;                   // sorted lexicographically
  std::vector<std::vector<std::size_t>> coverage;   // candidate -> blocked path indices (ascending)
};

namespace detail {

/// Uniform hash of path segments over the fundamental domain.
class TorusSegmentIndex {
 public:
  struct Seg {
    std::uint32_t path;
    std::uint32_t k;   // samples k, k+1
    Vec2 base;         // lattice shift (integer valued) removed from the raw samples
    Vec2 a, b;         // shifted cover endpoints
  };

  TorusSegmentIndex(const ConnectingFamily& fam, double pad, double margin) : lat_(fam.metric->lattice()) {
    double extent = 0.0;
    for (const auto& p : fam.paths)
      for (std::size_t k = 0; k + 1 < p.samples.size(); ++k)
        extent = std::max(extent, norm(p.samples[k + 1].pos - p.samples[k].pos));
    const double ls = lat_.lattice_scale();
    pad_l_ = pad * ls;
    extent = extent * ls + 2.0 * pad_l_;
    grid_ = std::clamp(static_cast<int>(1.0 / std::max(2.0 * extent, 1e-9)), 1, 256);
    cells_.resize(static_cast<std::size_t>(grid_) * grid_);
    for (std::uint32_t pi = 0; pi < fam.paths.size(); ++pi) {
      const auto& p = fam.paths[pi];
      for (std::uint32_t k = 0; k + 1 < p.samples.size(); ++k) {
        if (p.samples[k + 1].s < margin || p.samples[k].s > p.total_length - margin) continue;
        const Vec2 la = lat_.to_lattice(p.samples[k].pos);
        const Vec2 base{std::floor(la.x), std::floor(la.y)};
        const Vec2 shift = lat_.to_cover(base);
        Seg sg{pi, k, base, p.samples[k].pos - shift, p.samples[k + 1].pos - shift};
        const Vec2 ua = lat_.to_lattice(sg.a), ub = lat_.to_lattice(sg.b);
        const int i0 = cell_floor(std::min(ua.x, ub.x) - pad_l_), i1 = cell_floor(std::max(ua.x, ub.x) + pad_l_);
        const int j0 = cell_floor(std::min(ua.y, ub.y) - pad_l_), j1 = cell_floor(std::max(ua.y, ub.y) + pad_l_);
        const auto id = static_cast<std::uint32_t>(segs_.size());
        segs_.push_back(sg);
        for (int i = i0; i <= i1; ++i)
          for (int j = j0; j <= j1; ++j) cells_[cell_id(i, j)].push_back(id);
      }
    }
  }

  int grid() const { return grid_; }
  std::size_t cell_count() const { return cells_.size(); }
  const std::vector<std::uint32_t>& cell(std::size_t c) const { return cells_[c]; }
  const Seg& seg(std::uint32_t id) const { return segs_[id]; }
  std::size_t cell_of(const TorusPoint& t) const { return cell_id(cell_floor(t.u), cell_floor(t.v)); }

  /// Cover translation moving a point near `ref` onto the lift closest to `ref`.
  Vec2 align(const Vec2& ref, const Vec2& p) const {
    const Vec2 d = lat_.to_lattice(ref - p);
    return lat_.to_cover(Vec2{std::round(d.x), std::round(d.y)});
  }

 private:
  int cell_floor(double c) const { return static_cast<int>(std::floor(c * grid_)); }
  std::size_t cell_id(int i, int j) const {
    const int ii = ((i % grid_) + grid_) % grid_, jj = ((j % grid_) + grid_) % grid_;
    return static_cast<std::size_t>(ii) * grid_ + jj;
  }

  Lattice lat_;
  double pad_l_ = 0.0;
  int grid_ = 1;
  std::vector<Seg> segs_;
  std::vector<std::vector<std::uint32_t>> cells_;
};

/// Merges points closer than `radius` on the torus, keeping the first.
class PointMerger {
 public:
  PointMerger(const Lattice& lat, double radius)
      : lat_(lat), radius_(radius), cells_(std::max(1L, static_cast<long>(1.0 / (radius * lat.lattice_scale())))) {}

  bool insert(const TorusPoint& t) {
    const long ci = cell(t.u), cj = cell(t.v);
    for (long di = -1; di <= 1; ++di)
      for (long dj = -1; dj <= 1; ++dj) {
        auto it = map_.find(key(ci + di, cj + dj));
        if (it == map_.end()) continue;
        for (std::size_t idx : it->second)
          if (torus_distance(lat_, points_[idx], t) <= radius_) return false;
      }
    map_[key(ci, cj)].push_back(points_.size());
    points_.push_back(t);
    return true;
  }
  std::vector<TorusPoint>& points() { return points_; }

 private:
  long cell(double c) const { return static_cast<long>(std::floor(c * cells_)); }
  long long key(long i, long j) const {
    i = ((i % cells_) + cells_) % cells_;
    j = ((j % cells_) + cells_) % cells_;
    return static_cast<long long>(i) * cells_ + j;
  }

  Lattice lat_;
  double radius_;
  long cells_;
  std::unordered_map<long long, std::vector<std::size_t>> map_;
  std::vector<TorusPoint> points_;
};

}  // namespace detail

/// Candidate blockers and the paths each one blocks through its interior.
inline CandidatePool candidate_blockers(const ConnectingFamily& fam, double spatial_tol,
                                        const BlockingOptions& opt = {}) {
  if (fam.paths.empty()) throw std::invalid_argument("candidate_blockers: empty family");
  const TorusMetric& metric = *fam.metric;
  const Lattice& lat = metric.lattice();
  const double margin = opt.interior_margin >= 0.0 ? opt.interior_margin : spatial_tol;
  detail::TorusSegmentIndex index(fam, spatial_tol, margin);

  detail::PointMerger merger(lat, 0.1 * spatial_tol);
  for (const auto& p : fam.paths) merger.insert(reduce(metric, p.at(0.5 * p.total_length).pos).point);

  for (std::size_t c = 0; c < index.cell_count(); ++c) {
    const auto& list = index.cell(c);
    for (std::size_t u = 0; u < list.size(); ++u)
      for (std::size_t w = u + 1; w < list.size(); ++w) {
        const auto& A = index.seg(list[u]);
        const auto& B = index.seg(list[w]);
        if (A.path == B.path) continue;
        const Vec2 shift = index.align(A.a, B.a);
        const auto hit = intersect_segments(A.a, A.b, B.a + shift, B.b + shift);
        if (!hit) continue;
        if (index.cell_of(reduce(lat, hit->point).point) != c) continue;
        const GeodesicPath& PA = fam.paths[A.path];
        const GeodesicPath& PB = fam.paths[B.path];
        const Vec2 raw_shift = lat.to_cover(A.base) - lat.to_cover(B.base) + shift;
        SegmentHit h = *hit;
        if (auto r = refine_crossing(PA.samples[A.k], PA.samples[A.k + 1], PB.samples[B.k], PB.samples[B.k + 1],
                                     raw_shift, *hit))
          h = *r;
        else
          h.point = h.point + lat.to_cover(A.base);
        const double sa = PA.samples[A.k].s + h.t * (PA.samples[A.k + 1].s - PA.samples[A.k].s);
        const double sb = PB.samples[B.k].s + h.r * (PB.samples[B.k + 1].s - PB.samples[B.k].s);
        if (sa < margin || sa > PA.total_length - margin || sb < margin || sb > PB.total_length - margin) continue;
        merger.insert(reduce(lat, h.point).point);
      }
  }

  CandidatePool pool;
  pool.points = std::move(merger.points());
  std::sort(pool.points.begin(), pool.points.end());
  pool.coverage.resize(pool.points.size());
  for (std::size_t i = 0; i < pool.points.size(); ++i) {
    const CoverPoint z = lat.to_cover(pool.points[i]);
    std::vector<std::size_t>& cov = pool.coverage[i];
    for (std::uint32_t id : index.cell(index.cell_of(pool.points[i]))) {
      const auto& sg = index.seg(id);
      const Vec2 shift = index.align(z, sg.a);
      const Vec2 a = sg.a + shift, b = sg.b + shift;
      const double t = project_on_segment(z, a, b);
      if (norm(z - (a + (b - a) * t)) > spatial_tol) continue;
      const GeodesicPath& P = fam.paths[sg.path];
      const double s = P.samples[sg.k].s + t * (P.samples[sg.k + 1].s - P.samples[sg.k].s);
      if (s < margin || s > P.total_length - margin) continue;
      cov.push_back(sg.path);
    }
    std::sort(cov.begin(), cov.end());
    cov.erase(std::unique(cov.begin(), cov.end()), cov.end());
  }
  return pool;
}

struct HittingSet {
  std::vector<std::size_t> chosen;  // candidate indices, ascending
  bool optimal = false;
  std::size_t lower_bound = 0;
  long nodes = 0;
};

namespace detail {

/// Pairwise "independent" paths (no candidate blocks two of them); any
/// blocking set needs at least this many points.
inline std::size_t disjoint_path_bound(const std::vector<std::vector<std::size_t>>& coverage, std::size_t n_paths) {
  std::vector<std::vector<std::size_t>> neighbours(n_paths);
  for (const auto& cov : coverage)
    for (std::size_t a : cov)
      for (std::size_t b : cov) neighbours[a].push_back(b);
  std::vector<char> removed(n_paths, 0);
  std::size_t count = 0;
  // greedy: repeatedly take the path with the fewest live neighbours
  for (;;) {
    std::size_t best = n_paths, best_deg = std::numeric_limits<std::size_t>::max();
    for (std::size_t j = 0; j < n_paths; ++j) {
      if (removed[j]) continue;
      std::size_t deg = 0;
      for (std::size_t b : neighbours[j]) deg += !removed[b];
      if (deg < best_deg) {
        best_deg = deg;
        best = j;
      }
    }
    if (best == n_paths) break;
    ++count;
    removed[best] = 1;
    for (std::size_t b : neighbours[best]) removed[b] = 1;
  }
  return count;
}

class ExactHittingSolver {
 public:
  ExactHittingSolver(std::vector<std::uint64_t> masks, std::uint64_t all, long node_limit)
      : masks_(std::move(masks)), all_(all), node_limit_(node_limit) {
    for (int j = 0; j < 64; ++j) {
      if (!(all_ >> j & 1)) continue;
      for (std::size_t c = 0; c < masks_.size(); ++c)
        if (masks_[c] >> j & 1) {
          by_path_[j].push_back(c);
          reach_[j] |= masks_[c];
        }
    }
    root_dual_ = cover_lp_dual(all_);
    by_size_.resize(masks_.size());
    for (std::size_t c = 0; c < masks_.size(); ++c) by_size_[c] = c;
    std::stable_sort(by_size_.begin(), by_size_.end(), [&](std::size_t a, std::size_t b) {
      return std::popcount(masks_[a]) > std::popcount(masks_[b]);
    });
  }

  bool aborted() const { return aborted_; }
  long nodes() const { return nodes_; }

  /// Whether U can be covered by at most r candidates of index >= first.
  bool feasible(std::uint64_t U, std::size_t r, std::size_t first, std::vector<std::size_t>& out) {
    current_.clear();
    seen_.clear();
    first_ = first;
    const bool ok = exists(U, r);
    if (ok) out = current_;
    first_ = 0;
    return ok;
  }

  std::size_t lower_bound(std::uint64_t U) const {
    if (!U) return 0;
    int maxcov = 0;
    for (std::size_t c : by_size_) {
      if (std::popcount(masks_[c]) <= maxcov) break;
      if (c >= first_) maxcov = std::max(maxcov, std::popcount(masks_[c] & U));
    }
    if (maxcov == 0) return kInfeasible;
    const std::size_t by_size = (std::popcount(U) + maxcov - 1) / maxcov;
    // paths no candidate blocks together, chosen by fewest live neighbours
    std::size_t indep = 0;
    std::uint64_t rest = U;
    while (rest) {
      int pick = -1, deg = 65;
      for (std::uint64_t r = rest; r; r &= r - 1) {
        const int j = std::countr_zero(r);
        const int d = std::popcount(reach_[j] & rest);
        if (d < deg) {
          deg = d;
          pick = j;
        }
      }
      ++indep;
      rest &= ~reach_[pick];
      rest &= ~(std::uint64_t{1} << pick);
    }
    const double dual = ascended_dual(U);
    if (!std::isfinite(dual)) return kInfeasible;
    return std::max({by_size, indep, static_cast<std::size_t>(std::ceil(dual - 1e-9))});
  }

  /// Root duals restricted to U, then raised path by path into the
  /// capacity freed by covered paths and excluded candidates.
  double ascended_dual(std::uint64_t U) const {
    std::array<double, 64> y{};
    for (std::uint64_t r = U; r; r &= r - 1) y[std::countr_zero(r)] = root_dual_[std::countr_zero(r)];
    load_.assign(masks_.size(), 0.0);
    for (std::size_t c = first_; c < masks_.size(); ++c)
      for (std::uint64_t r = masks_[c] & U; r; r &= r - 1) load_[c] += y[std::countr_zero(r)];
    double sum = 0.0;
    for (std::uint64_t r = U; r; r &= r - 1) {
      const int j = std::countr_zero(r);
      double slack = INFINITY;
      for (std::size_t c : by_path_[j])
        if (c >= first_) slack = std::min(slack, 1.0 - load_[c]);
      if (!std::isfinite(slack)) return INFINITY;
      if (slack > 0.0) {
        y[j] += slack;
        for (std::size_t c : by_path_[j])
          if (c >= first_) load_[c] += slack;
      }
      sum += y[j];
    }
    return sum;
  }

  double dual_mass(std::uint64_t U) const {
    double sum = 0.0;
    for (std::uint64_t r = U; r; r &= r - 1) sum += root_dual_[std::countr_zero(r)];
    return sum;
  }

  /// Optimal dual of the cover LP (min sum x, every path in U blocked, x >= 0)
  /// by dual simplex on a dense tableau. The duals are clamped and rescaled
  /// so that no candidate carries more than unit weight, which keeps
  /// sum(y) over any subset of U a valid lower bound whatever the rounding.
  std::array<double, 64> cover_lp_dual(std::uint64_t U) const {
    std::array<double, 64> y{};
    std::vector<int> rows;
    for (std::uint64_t r = U; r; r &= r - 1) rows.push_back(std::countr_zero(r));
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < masks_.size(); ++c)
      if (masks_[c] & U) cols.push_back(c);
    const std::size_t n = rows.size(), m = cols.size(), w = m + n + 1;
    if (n == 0 || m == 0) return y;
    // row i: s_i = -1 + sum_j a_ij x_j, stored as [-a_i | e_i | -1]
    std::vector<double> T(n * w, 0.0), d(m + n, 0.0);
    std::vector<std::size_t> basis(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j)
        if (masks_[cols[j]] >> rows[i] & 1) T[i * w + j] = -1.0;
      T[i * w + m + i] = 1.0;
      T[i * w + m + n] = -1.0;
      basis[i] = m + i;
    }
    for (std::size_t j = 0; j < m; ++j) d[j] = 1.0;
    for (std::size_t iter = 0; iter < 50 * (n + m); ++iter) {
      std::size_t r = n;
      double most = -1e-12;
      for (std::size_t i = 0; i < n; ++i)
        if (T[i * w + m + n] < most) {
          most = T[i * w + m + n];
          r = i;
        }
      if (r == n) break;
      std::size_t q = m + n;
      double ratio = INFINITY;
      for (std::size_t j = 0; j < m + n; ++j) {
        const double a = T[r * w + j];
        if (a < -1e-12 && d[j] / -a < ratio) {
          ratio = d[j] / -a;
          q = j;
        }
      }
      if (q == m + n) break;
      const double piv = T[r * w + q];
      for (std::size_t j = 0; j < w; ++j) T[r * w + j] /= piv;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == r) continue;
        const double f = T[i * w + q];
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < w; ++j) T[i * w + j] -= f * T[r * w + j];
      }
      const double f = d[q];
      for (std::size_t j = 0; j < m + n; ++j) d[j] -= f * T[r * w + j];
      basis[r] = q;
    }
    for (std::size_t i = 0; i < n; ++i) y[rows[i]] = std::max(0.0, d[m + i]);
    double peak = 0.0;
    for (std::size_t c = 0; c < masks_.size(); ++c) {
      double load = 0.0;
      for (std::uint64_t r = masks_[c] & U; r; r &= r - 1) load += y[std::countr_zero(r)];
      peak = std::max(peak, load);
    }
    if (peak > 1.0)
      for (double& v : y) v /= peak;
    return y;
  }

 private:
  static constexpr std::size_t kInfeasible = std::numeric_limits<std::size_t>::max() / 2;

  /// Options for covering path j: allowed candidates whose restriction to U
  /// is not strictly contained in another option's, larger gains first.
  std::vector<std::size_t> options(std::uint64_t U, int& path) const {
    std::vector<std::size_t> best;
    for (std::uint64_t rest = U; rest; rest &= rest - 1) {
      const int j = std::countr_zero(rest);
      std::vector<std::size_t> opts;
      for (std::size_t c : by_path_[j])
        if (c >= first_) opts.push_back(c);
      std::vector<std::size_t> kept;
      for (std::size_t a : opts) {
        const std::uint64_t ma = masks_[a] & U;
        bool dominated = false;
        for (std::size_t b : opts) {
          const std::uint64_t mb = masks_[b] & U;
          if (b != a && (ma & ~mb) == 0 && (mb != ma || b < a)) {
            dominated = true;
            break;
          }
        }
        if (!dominated) kept.push_back(a);
      }
      if (path < 0 || kept.size() < best.size()) {
        best = std::move(kept);
        path = j;
        if (best.size() <= 1) break;
      }
    }
    // smallest reduced cost first, then larger gains
    std::vector<double> loss(best.size());
    for (std::size_t i = 0; i < best.size(); ++i) loss[i] = 1.0 - dual_mass(masks_[best[i]] & U);
    std::vector<std::size_t> order(best.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (loss[a] != loss[b]) return loss[a] < loss[b];
      return std::popcount(masks_[best[a]] & U) > std::popcount(masks_[best[b]] & U);
    });
    std::vector<std::size_t> out;
    for (std::size_t i : order) out.push_back(best[i]);
    return out;
  }

  bool exists(std::uint64_t U, std::size_t r) {
    if (aborted_ || ++nodes_ > node_limit_) {
      aborted_ = true;
      return false;
    }
    if (!U) return true;
    if (r == 0 || lower_bound(U) > r) return false;
    if (auto [it, fresh] = seen_.try_emplace(U, r); !fresh) {
      if (it->second >= r) return false;
      it->second = r;
    }
    int j = -1;
    for (std::size_t c : options(U, j)) {
      current_.push_back(c);
      if (exists(U & ~masks_[c], r - 1)) return true;
      current_.pop_back();
      if (aborted_) return false;
    }
    return false;
  }

  std::vector<std::uint64_t> masks_;
  std::vector<std::size_t> by_size_;
  std::uint64_t all_;
  long node_limit_;
  long nodes_ = 0;
  bool aborted_ = false;
  std::size_t first_ = 0;
  std::vector<std::size_t> by_path_[64];
  std::uint64_t reach_[64] = {};
  std::array<double, 64> root_dual_{};
  mutable std::vector<double> load_;
  std::vector<std::size_t> current_;
  std::unordered_map<std::uint64_t, std::size_t> seen_;  // largest budget that failed for U
};

}  // namespace detail

/// Greedy set cover: most newly blocked paths first, ties to the
/// lexicographically smallest candidate. Optimal when it meets the
/// disjoint-path bound.
inline HittingSet greedy_hitting_set(const std::vector<std::vector<std::size_t>>& coverage, std::size_t n_paths) {
  HittingSet hs;
  std::vector<char> covered(n_paths, 0);
  std::size_t left = n_paths;
  while (left > 0) {
    std::size_t best = coverage.size(), gain = 0;
    for (std::size_t c = 0; c < coverage.size(); ++c) {
      std::size_t g = 0;
      for (std::size_t p : coverage[c]) g += !covered[p];
      if (g > gain) {
        gain = g;
        best = c;
      }
    }
    if (best == coverage.size()) throw std::runtime_error("greedy_hitting_set: candidate pool does not cover the family");
    hs.chosen.push_back(best);
    for (std::size_t p : coverage[best])
      if (!covered[p]) {
        covered[p] = 1;
        --left;
      }
  }
  std::sort(hs.chosen.begin(), hs.chosen.end());
  hs.lower_bound = detail::disjoint_path_bound(coverage, n_paths);
  hs.optimal = hs.chosen.size() == hs.lower_bound;
  return hs;
}

/// Exact minimum hitting set (at most 64 paths) by branch and bound; among
/// minimum covers the lexicographically smallest over the reduced pool
/// (duplicate and dominated candidates removed) is returned.
inline HittingSet exact_hitting_set(const std::vector<std::vector<std::size_t>>& coverage, std::size_t n_paths,
                                    long node_limit = 5'000'000) {
  if (n_paths > 64) throw std::invalid_argument("exact_hitting_set: at most 64 paths");
  HittingSet hs;
  if (n_paths == 0) {
    hs.optimal = true;
    return hs;
  }
  const std::uint64_t all = n_paths == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n_paths) - 1);
  // reduced pool: first (lexicographically smallest) candidate per mask, no strict subsets
  std::vector<std::uint64_t> masks;
  std::vector<std::size_t> rep;
  {
    std::unordered_map<std::uint64_t, std::size_t> seen;
    std::vector<std::uint64_t> raw(coverage.size(), 0);
    for (std::size_t c = 0; c < coverage.size(); ++c)
      for (std::size_t p : coverage[c]) raw[c] |= std::uint64_t{1} << p;
    std::vector<std::size_t> uniq;
    for (std::size_t c = 0; c < coverage.size(); ++c)
      if (raw[c] && seen.emplace(raw[c], c).second) uniq.push_back(c);
    for (std::size_t c : uniq) {
      const bool dominated = std::any_of(uniq.begin(), uniq.end(), [&](std::size_t d) {
        return d != c && (raw[c] & ~raw[d]) == 0 && raw[d] != raw[c];
      });
      if (!dominated) {
        masks.push_back(raw[c]);
        rep.push_back(c);
      }
    }
  }
  std::uint64_t reachable = 0;
  for (auto m : masks) reachable |= m;
  if (reachable != all) throw std::runtime_error("exact_hitting_set: candidate pool does not cover the family");

  const HittingSet greedy = greedy_hitting_set(coverage, n_paths);
  detail::ExactHittingSolver solver(masks, all, node_limit);
  // iterative deepening from the LP bound; the first feasible budget is optimal
  std::size_t k = greedy.chosen.size();
  std::vector<std::size_t> found;
  for (std::size_t r = solver.lower_bound(all); r < greedy.chosen.size(); ++r) {
    if (solver.feasible(all, r, 0, found)) {
      k = r;
      break;
    }
    if (solver.aborted()) {
      hs.chosen = greedy.chosen;
      hs.optimal = false;
      hs.lower_bound = std::max(greedy.lower_bound, r);
      hs.nodes = solver.nodes();
      return hs;
    }
  }
  // lexicographically smallest minimum cover
  std::vector<std::size_t> lex;
  std::uint64_t U = all;
  std::size_t first = 0;
  for (std::size_t slot = 0; slot < k && !solver.aborted(); ++slot) {
    for (std::size_t i = first; i < masks.size(); ++i) {
      if (!(masks[i] & U)) continue;
      std::vector<std::size_t> rest;
      if (solver.feasible(U & ~masks[i], k - slot - 1, i + 1, rest)) {
        lex.push_back(i);
        U &= ~masks[i];
        first = i + 1;
        break;
      }
      if (solver.aborted()) break;
    }
  }
  hs.nodes = solver.nodes();
  if (!solver.aborted() && lex.size() == k) {
    for (std::size_t c : lex) hs.chosen.push_back(rep[c]);
  } else if (k < greedy.chosen.size()) {
    for (std::size_t c : found) hs.chosen.push_back(rep[c]);  // optimal size, tie-break unresolved
  } else {
    hs.chosen = greedy.chosen;
  }
  std::sort(hs.chosen.begin(), hs.chosen.end());
  hs.optimal = true;
  hs.lower_bound = k;
  return hs;
}

struct BlockingReport {
  ConnectingFamily family;
  CandidatePool pool;
  std::vector<TorusPoint> chosen;
  std::vector<std::size_t> chosen_index;   // into pool.points
  std::vector<bool> touches_endpoint;      // chosen point within spatial_tol of x or y
  std::size_t size = 0;
  bool optimal = false;
  std::size_t lower_bound = 0;
  double spatial_tol = 0.0;
  long search_nodes = 0;
};

/// Minimum blocking set of a connecting family over its candidate pool.
inline BlockingReport min_blocking_set(const ConnectingFamily& fam, double spatial_tol,
                                       const BlockingOptions& opt = {}) {
  BlockingReport rep;
  rep.family = fam;
  rep.spatial_tol = spatial_tol;
  if (fam.paths.empty()) {
    rep.optimal = true;
    return rep;
  }
  BlockingOptions o = opt;
  o.spatial_tol = spatial_tol;
  rep.pool = candidate_blockers(fam, spatial_tol, o);
  const std::size_t n = fam.paths.size();
  const HittingSet hs = n <= opt.exact_limit && n <= 64 ? exact_hitting_set(rep.pool.coverage, n, opt.node_limit)
                                                        : greedy_hitting_set(rep.pool.coverage, n);
  rep.chosen_index = hs.chosen;
  for (std::size_t c : hs.chosen) rep.chosen.push_back(rep.pool.points[c]);
  rep.size = rep.chosen.size();
  rep.optimal = hs.optimal;
  rep.lower_bound = hs.lower_bound;
  rep.search_nodes = hs.nodes;
  const Lattice& lat = fam.metric->lattice();
  for (const auto& p : rep.chosen)
    rep.touches_endpoint.push_back(torus_distance(lat, p, fam.x) <= spatial_tol ||
                                   torus_distance(lat, p, fam.y) <= spatial_tol);
  return rep;
}

/// The members of a family no longer than L.
inline ConnectingFamily restrict_family(const ConnectingFamily& fam, double L) {
  ConnectingFamily out = fam;
  out.budget = L;
  out.paths.clear();
  const double ok = L * (1.0 + 1e-12) + 1e-12;
  for (const auto& p : fam.paths)
    if (p.total_length <= ok) out.paths.push_back(p);
  return out;
}

struct GrowthRow {
  double L = 0.0;
  std::size_t size = 0;
  bool optimal = false;
  std::size_t paths = 0;
  std::size_t lower_bound = 0;
};

/// Blocking size at each budget. One family is built at the largest budget
/// and restricted to each smaller one, so the families are nested.
inline std::vector<GrowthRow> blocking_growth(const TorusMetric& metric, const TorusPoint& x, const TorusPoint& y,
                                              const std::vector<double>& L_list, const BlockingOptions& opt = {},
                                              std::vector<BlockingReport>* reports = nullptr) {
  if (L_list.empty()) throw std::invalid_argument("blocking_growth: empty budget list");
  for (std::size_t i = 0; i < L_list.size(); ++i)
    if (!(L_list[i] > 0.0) || !std::isfinite(L_list[i]) || (i > 0 && !(L_list[i] > L_list[i - 1])))
      throw std::invalid_argument("blocking_growth: budgets must be positive, finite and increasing");
  const ConnectingFamily full = connect_all(metric, x, y, L_list.back(), opt.connect);
  std::vector<GrowthRow> rows;
  for (double L : L_list) {
    BlockingReport rep = min_blocking_set(restrict_family(full, L), opt.spatial_tol, opt);
    rows.push_back({L, rep.size, rep.optimal, rep.family.paths.size(), rep.lower_bound});
    if (reports) reports->push_back(std::move(rep));
  }
  return rows;
}

}  // namespace torusblock
