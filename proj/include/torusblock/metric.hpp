#pragma once

// Torus metrics: a lattice of deck transformations plus a conformal factor
// given as a finite Fourier series in lattice coordinates.
//
// The metric tensor on the universal cover is g = exp(2*phi) * (dx^2 + dy^2)
// where phi is Z^2-periodic in lattice coordinates (u,v), (x,y) = u*e1 + v*e2.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusblock/vec2.hpp"

namespace torusblock {

using CoverPoint = Vec2;

/// A point of the torus, stored as lattice coefficients in [0,1).
struct TorusPoint {
  double u = 0.0;
  double v = 0.0;

  friend constexpr bool operator==(const TorusPoint&, const TorusPoint&) = default;
  friend constexpr auto operator<=>(const TorusPoint&, const TorusPoint&) = default;
};

class Lattice {
 public:
  Lattice() : Lattice({1.0, 0.0}, {0.0, 1.0}) {}

  Lattice(Vec2 e1, Vec2 e2) : e1_(e1), e2_(e2), det_(cross(e1, e2)) {
    if (!std::isfinite(det_) || std::abs(det_) <= 1e-12)
      throw std::invalid_argument("lattice basis is degenerate (|det| <= 1e-12)");
  }

  const Vec2& e1() const { return e1_; }
  const Vec2& e2() const { return e2_; }
  double det() const { return det_; }

  /// Cover (Euclidean) coordinates -> lattice coefficients.
  Vec2 to_lattice(const Vec2& p) const {
    return {(p.x * e2_.y - p.y * e2_.x) / det_, (e1_.x * p.y - e1_.y * p.x) / det_};
  }
  Vec2 to_cover(const Vec2& uv) const { return e1_ * uv.x + e2_ * uv.y; }
  Vec2 to_cover(const TorusPoint& t) const { return to_cover(Vec2{t.u, t.v}); }

  Vec2 translation(long q, long r) const {
    return e1_ * static_cast<double>(q) + e2_ * static_cast<double>(r);
  }
  Vec2 translation(const IVec2& k) const { return translation(k.m, k.n); }

  /// Gradient in lattice coordinates -> gradient in cover coordinates.
  Vec2 pullback_gradient(const Vec2& g) const {
    // d/dx = (du/dx) d/du + (dv/dx) d/dv with du/dx = e2.y/det, dv/dx = -e1.y/det.
    return {(g.x * e2_.y - g.y * e1_.y) / det_, (-g.x * e2_.x + g.y * e1_.x) / det_};
  }

  /// Largest lattice-coefficient change produced by a unit cover displacement.
  double lattice_scale() const {
    const double r1 = std::hypot(e2_.y, e2_.x) / std::abs(det_);
    const double r2 = std::hypot(e1_.y, e1_.x) / std::abs(det_);
    return std::max(r1, r2);
  }
  /// Row norms of the inverse basis matrix, (|du/dp|, |dv/dp|).
  Vec2 inverse_row_norms() const {
    return {std::hypot(e2_.y, e2_.x) / std::abs(det_), std::hypot(e1_.y, e1_.x) / std::abs(det_)};
  }

  friend bool operator==(const Lattice& a, const Lattice& b) { return a.e1_ == b.e1_ && a.e2_ == b.e2_; }

 private:
  Vec2 e1_, e2_;
  double det_;
};

/// One Fourier term a*cos(2pi(k1 u + k2 v)) + b*sin(2pi(k1 u + k2 v)).
struct FourierMode {
  int k1 = 0;
  int k2 = 0;
  double a = 0.0;
  double b = 0.0;
};

struct PhiSample {
  double phi = 0.0;
  double dphi_dx = 0.0;
  double dphi_dy = 0.0;

  Vec2 grad() const { return {dphi_dx, dphi_dy}; }
};

class ConformalFactor {
 public:
  static constexpr std::size_t kMaxModes = 64;

  ConformalFactor() = default;
  explicit ConformalFactor(std::vector<FourierMode> modes) : modes_(std::move(modes)) {
    if (modes_.size() > kMaxModes)
      throw std::invalid_argument("conformal factor has " + std::to_string(modes_.size()) +
                                  " modes; at most 64 are supported");
    for (const auto& m : modes_)
      if (!std::isfinite(m.a) || !std::isfinite(m.b))
        throw std::invalid_argument("conformal factor coefficient is not finite");
  }

  const std::vector<FourierMode>& modes() const { return modes_; }
  bool empty() const { return modes_.empty(); }

  /// phi and its gradient with respect to the lattice coefficients (u,v).
  PhiSample evaluate_lattice(const Vec2& uv) const {
    PhiSample out;
    for (const auto& m : modes_) {
      const double arg = kTwoPi * (m.k1 * uv.x + m.k2 * uv.y);
      const double c = std::cos(arg), s = std::sin(arg);
      out.phi += m.a * c + m.b * s;
      const double d = kTwoPi * (m.b * c - m.a * s);
      out.dphi_dx += d * m.k1;
      out.dphi_dy += d * m.k2;
    }
    return out;
  }

 private:
  std::vector<FourierMode> modes_;
};

class TorusMetric {
 public:
  static constexpr int kExtremaGrid = 256;

  TorusMetric() : TorusMetric(Lattice{}, ConformalFactor{}) {}
  TorusMetric(Lattice lattice, ConformalFactor phi) : lattice_(lattice), phi_(std::move(phi)) {
    if (phi_.empty()) return;
    phi_min_ = INFINITY;
    phi_max_ = -INFINITY;
    for (int i = 0; i < kExtremaGrid; ++i)
      for (int j = 0; j < kExtremaGrid; ++j) {
        const double f = phi_.evaluate_lattice({double(i) / kExtremaGrid, double(j) / kExtremaGrid}).phi;
        phi_min_ = std::min(phi_min_, f);
        phi_max_ = std::max(phi_max_, f);
      }
    if (!std::isfinite(std::exp(2.0 * phi_min_)) || std::exp(2.0 * phi_min_) <= 0.0 ||
        !std::isfinite(std::exp(2.0 * phi_max_)))
      throw std::invalid_argument("conformal factor leaves the representable range");
  }

  static TorusMetric flat(Lattice lattice = {}) { return TorusMetric(lattice, {}); }

  const Lattice& lattice() const { return lattice_; }
  const ConformalFactor& conformal_factor() const { return phi_; }
  bool is_flat() const { return phi_.empty(); }

  /// Extremes of phi sampled on a 256x256 lattice grid (exact zeros when flat).
  double phi_min() const { return phi_min_; }
  double phi_max() const { return phi_max_; }

  PhiSample conformal_value_grad(const CoverPoint& p) const {
    if (phi_.empty()) return {};
    PhiSample s = phi_.evaluate_lattice(lattice_.to_lattice(p));
    const Vec2 g = lattice_.pullback_gradient({s.dphi_dx, s.dphi_dy});
    s.dphi_dx = g.x;
    s.dphi_dy = g.y;
    return s;
  }
  double phi(const CoverPoint& p) const {
    return phi_.empty() ? 0.0 : phi_.evaluate_lattice(lattice_.to_lattice(p)).phi;
  }

 private:
  Lattice lattice_;
  ConformalFactor phi_;
  double phi_min_ = 0.0;
  double phi_max_ = 0.0;
};

struct Reduced {
  TorusPoint point;
  IVec2 shift;
};

inline PhiSample conformal_value_grad(const TorusMetric& metric, const CoverPoint& p) {
  return metric.conformal_value_grad(p);
}

namespace detail {
// floor split with the fractional part forced into [0,1).
inline void split_unit(double c, double& frac, long& whole) {
  const double f = std::floor(c);
  frac = c - f;
  whole = static_cast<long>(f);
  if (frac >= 1.0) {
    frac -= 1.0;
    ++whole;
  }
  if (frac < 0.0) frac = 0.0;
}
}  // namespace detail

inline Reduced reduce(const Lattice& lattice, const CoverPoint& p) {
  const Vec2 uv = lattice.to_lattice(p);
  Reduced r;
  detail::split_unit(uv.x, r.point.u, r.shift.m);
  detail::split_unit(uv.y, r.point.v, r.shift.n);
  return r;
}
inline Reduced reduce(const TorusMetric& metric, const CoverPoint& p) { return reduce(metric.lattice(), p); }

/// Reduce arbitrary lattice coefficients into the fundamental domain.
inline TorusPoint wrap(double u, double v) {
  TorusPoint t;
  long w;
  detail::split_unit(u, t.u, w);
  detail::split_unit(v, t.v, w);
  return t;
}

inline CoverPoint lift(const TorusMetric& metric, const TorusPoint& t) { return metric.lattice().to_cover(t); }

inline CoverPoint deck_translate(const TorusMetric& metric, const CoverPoint& p, long q, long r) {
  return p + metric.lattice().translation(q, r);
}

/// Shortest cover displacement representing b - a on the torus.
inline Vec2 torus_displacement(const Lattice& lattice, const Vec2& a, const Vec2& b) {
  const Vec2 uv = lattice.to_lattice(b - a);
  const double bu = uv.x - std::round(uv.x), bv = uv.y - std::round(uv.y);
  Vec2 best = lattice.to_cover(Vec2{bu, bv});
  double best_n = norm2(best);
  // any shorter candidate has |coefficient| <= |best| * (row norm of the inverse basis)
  const Vec2 inv = lattice.inverse_row_norms();
  const double r = std::sqrt(best_n);
  const long iu = static_cast<long>(std::ceil(r * inv.x + std::abs(bu)));
  const long iv = static_cast<long>(std::ceil(r * inv.y + std::abs(bv)));
  for (long i = -iu; i <= iu; ++i)
    for (long j = -iv; j <= iv; ++j) {
      if (i == 0 && j == 0) continue;
      const Vec2 c = lattice.to_cover(Vec2{bu + double(i), bv + double(j)});
      if (const double n = norm2(c); n < best_n) {
        best_n = n;
        best = c;
      }
    }
  return best;
}

/// Euclidean distance between two torus points in cover units.
inline double torus_distance(const Lattice& lattice, const TorusPoint& a, const TorusPoint& b) {
  return norm(torus_displacement(lattice, lattice.to_cover(a), lattice.to_cover(b)));
}

}  // namespace torusblock
