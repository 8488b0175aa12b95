#pragma once

#include <cmath>
#include <compare>
#include <ostream>

namespace torusblock {

/// Plain 2-vector used for cover coordinates, velocities and gradients.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator/(const Vec2& a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Vec2& v) {
    return os << '(' << v.x << ", " << v.y << ')';
  }
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double norm2(const Vec2& a) { return a.x * a.x + a.y * a.y; }

/// Integer pair: lattice shifts, homotopy vectors and classes (q,p).
struct IVec2 {
  long m = 0;
  long n = 0;

  friend constexpr IVec2 operator+(const IVec2& a, const IVec2& b) { return {a.m + b.m, a.n + b.n}; }
  friend constexpr IVec2 operator-(const IVec2& a, const IVec2& b) { return {a.m - b.m, a.n - b.n}; }
  friend constexpr auto operator<=>(const IVec2&, const IVec2&) = default;

  friend std::ostream& operator<<(std::ostream& os, const IVec2& v) {
    return os << '(' << v.m << ", " << v.n << ')';
  }
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wrap an angle difference into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  return a <= -kPi ? a + kTwoPi : a;
}

}  // namespace torusblock
