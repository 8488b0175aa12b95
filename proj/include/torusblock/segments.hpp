#pragma once

// Segment geometry shared by the crossing checks and the blocker search.

#include <cmath>
#include <optional>

#include "torusblock/geodesic.hpp"

namespace torusblock {

struct SegmentHit {
  double t = 0.0;  // parameter on the first segment
  double r = 0.0;  // parameter on the second segment
  CoverPoint point;
};

/// Proper intersection of segments [a0,a1] and [b0,b1]; parallel or
/// collinear pairs report nothing.
inline std::optional<SegmentHit> intersect_segments(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                                                    const Vec2& b1) {
  const Vec2 da = a1 - a0, db = b1 - b0, w = b0 - a0;
  const double den = cross(da, db);
  const double scale = norm(da) * norm(db);
  if (scale == 0.0 || std::abs(den) <= 1e-12 * scale) return std::nullopt;
  const double t = cross(w, db) / den;
  const double r = cross(w, da) / den;
  if (t < 0.0 || t > 1.0 || r < 0.0 || r > 1.0) return std::nullopt;
  return SegmentHit{t, r, a0 + da * t};
}

/// Closest point parameter of p on segment [a,b].
inline double project_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double l2 = norm2(d);
  if (l2 == 0.0) return 0.0;
  return std::clamp(dot(p - a, d) / l2, 0.0, 1.0);
}

/// Refine a polyline crossing on the Hermite interpolants of two sample
/// intervals with a few Newton steps on (t, r). Returns the refined
/// parameters and point, or nothing if Newton leaves the intervals.
inline std::optional<SegmentHit> refine_crossing(const PathSample& a0, const PathSample& a1, const PathSample& b0,
                                                 const PathSample& b1, const Vec2& shift_b, SegmentHit guess) {
  double t = guess.t, r = guess.r;
  const double ha = a1.s - a0.s, hb = b1.s - b0.s;
  for (int it = 0; it < 8; ++it) {
    const PathSample pa = GeodesicPath::hermite(a0, a1, a0.s + t * ha);
    const PathSample pb = GeodesicPath::hermite(b0, b1, b0.s + r * hb);
    const Vec2 f = pa.pos - (pb.pos + shift_b);
    if (norm(f) < 1e-15) break;
    const Vec2 ja = pa.vel * ha, jb = -(pb.vel * hb);
    const double det = cross(ja, jb);
    if (std::abs(det) < 1e-300) return std::nullopt;
    // solve [ja jb] [dt dr]^T = -f
    const double dt = -cross(f, jb) / det;
    const double dr = -cross(ja, f) / det;
    t += dt;
    r += dr;
    if (t < -0.5 || t > 1.5 || r < -0.5 || r > 1.5) return std::nullopt;
  }
  if (t < -1e-9 || t > 1 + 1e-9 || r < -1e-9 || r > 1 + 1e-9) return std::nullopt;
  return SegmentHit{t, r, GeodesicPath::hermite(a0, a1, a0.s + t * ha).pos};
}

}  // namespace torusblock
