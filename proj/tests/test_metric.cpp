#include <gtest/gtest.h>

#include <random>

#include "torusblock/metric.hpp"

using namespace torusblock;

namespace {

TorusMetric cosine_eta(double eps) { return TorusMetric(Lattice{}, ConformalFactor({{0, 1, eps, 0.0}})); }

TorusMetric rough_metric() {
  return TorusMetric(Lattice({1.0, 0.0}, {0.3, 0.9}),
                     ConformalFactor({{1, 0, 0.07, -0.02}, {0, 1, 0.05, 0.03}, {1, 2, -0.04, 0.01}, {3, -1, 0.01, 0.02}}));
}

}  // namespace

TEST(Lattice, RejectsDegenerateBasis) {
  EXPECT_THROW(Lattice({1.0, 0.0}, {2.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(Lattice({1.0, 1.0}, {1.0, 1.0 + 1e-13}), std::invalid_argument);
  EXPECT_NO_THROW(Lattice({1.0, 0.0}, {0.0, 1e-6}));
}

TEST(Lattice, CoordinatesRoundTrip) {
  const Lattice lat({1.0, 0.2}, {-0.4, 1.3});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-5, 5);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p{U(rng), U(rng)};
    const Vec2 q = lat.to_cover(lat.to_lattice(p));
    EXPECT_NEAR(q.x, p.x, 1e-12);
    EXPECT_NEAR(q.y, p.y, 1e-12);
  }
}

TEST(Reduce, SplitsIntegerParts) {
  const Reduced r = reduce(Lattice{}, {2.25, -0.5});
  EXPECT_DOUBLE_EQ(r.point.u, 0.25);
  EXPECT_DOUBLE_EQ(r.point.v, 0.5);
  EXPECT_EQ(r.shift, (IVec2{2, -1}));

  const Reduced z = reduce(Lattice{}, {0.0, 0.0});
  EXPECT_EQ(z.point, (TorusPoint{0.0, 0.0}));
  EXPECT_EQ(z.shift, (IVec2{0, 0}));

  const Reduced w = reduce(Lattice({2.0, 0.0}, {0.0, 1.0}), {3.0, 0.0});
  EXPECT_DOUBLE_EQ(w.point.u, 0.5);
  EXPECT_DOUBLE_EQ(w.point.v, 0.0);
  EXPECT_EQ(w.shift, (IVec2{1, 0}));
}

TEST(Reduce, RepresentativeInUnitSquare) {
  const Lattice lat({1.0, 0.0}, {0.5, 0.8});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{U(rng), U(rng)};
    const Reduced r = reduce(lat, p);
    EXPECT_GE(r.point.u, 0.0);
    EXPECT_LT(r.point.u, 1.0);
    EXPECT_GE(r.point.v, 0.0);
    EXPECT_LT(r.point.v, 1.0);
    const Vec2 back = lat.to_cover(r.point) + lat.translation(r.shift);
    EXPECT_NEAR(back.x, p.x, 1e-11);
    EXPECT_NEAR(back.y, p.y, 1e-11);
  }
  // values just below an integer must not round up to 1
  const Reduced edge = reduce(Lattice{}, {-1e-18, 3.0 - 1e-17});
  EXPECT_LT(edge.point.u, 1.0);
  EXPECT_LT(edge.point.v, 1.0);
}

TEST(Reduce, LiftRoundTrip) {
  const TorusMetric m = rough_metric();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 200; ++i) {
    const TorusPoint t{U(rng), U(rng)};
    const TorusPoint back = reduce(m, lift(m, t)).point;
    EXPECT_NEAR(back.u, t.u, 1e-14);
    EXPECT_NEAR(back.v, t.v, 1e-14);
  }
}

TEST(DeckTranslate, Examples) {
  const TorusMetric flat = TorusMetric::flat();
  const Vec2 p = deck_translate(flat, {0.3, 0.3}, 1, 2);
  EXPECT_DOUBLE_EQ(p.x, 1.3);
  EXPECT_DOUBLE_EQ(p.y, 2.3);
  const Vec2 q = deck_translate(flat, {0.7, -0.2}, 0, 0);
  EXPECT_EQ(q, (Vec2{0.7, -0.2}));
  const Vec2 r = deck_translate(flat, deck_translate(flat, {0.7, -0.2}, 1, 0), -1, 0);
  EXPECT_DOUBLE_EQ(r.x, 0.7);
  EXPECT_DOUBLE_EQ(r.y, -0.2);
}

TEST(DeckTranslate, GroupAction) {
  const TorusMetric m = rough_metric();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-3, 3);
  std::uniform_int_distribution<long> K(-20, 20);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p{U(rng), U(rng)};
    const long a1 = K(rng), a2 = K(rng), b1 = K(rng), b2 = K(rng);
    const Vec2 two = deck_translate(m, deck_translate(m, p, a1, a2), b1, b2);
    const Vec2 one = deck_translate(m, p, a1 + b1, a2 + b2);
    EXPECT_NEAR(two.x, one.x, 1e-12);
    EXPECT_NEAR(two.y, one.y, 1e-12);
  }
}

TEST(ConformalFactor, Validation) {
  std::vector<FourierMode> many(65, FourierMode{1, 0, 0.001, 0.0});
  EXPECT_THROW(ConformalFactor{many}, std::invalid_argument);
  many.pop_back();
  EXPECT_NO_THROW(ConformalFactor{many});
  EXPECT_THROW(ConformalFactor({{1, 0, std::nan(""), 0.0}}), std::invalid_argument);
  EXPECT_THROW(ConformalFactor({{1, 0, 0.0, INFINITY}}), std::invalid_argument);
  EXPECT_THROW(TorusMetric(Lattice{}, ConformalFactor({{1, 0, 400.0, 0.0}})), std::invalid_argument);
}

TEST(ConformalValueGrad, FlatIsExactlyZero) {
  const TorusMetric flat = TorusMetric::flat(Lattice({1.0, 0.0}, {0.2, 1.1}));
  const PhiSample s = conformal_value_grad(flat, {0.37, -4.2});
  EXPECT_EQ(s.phi, 0.0);
  EXPECT_EQ(s.dphi_dx, 0.0);
  EXPECT_EQ(s.dphi_dy, 0.0);
  EXPECT_TRUE(flat.is_flat());
  EXPECT_EQ(flat.phi_min(), 0.0);
  EXPECT_EQ(flat.phi_max(), 0.0);
}

TEST(ConformalValueGrad, SingleModeExamples) {
  const double eps = 0.1;
  const PhiSample a = conformal_value_grad(cosine_eta(eps), {0.3, 0.25});
  EXPECT_NEAR(a.phi, 0.0, 1e-15);
  EXPECT_NEAR(a.dphi_dx, 0.0, 1e-15);
  EXPECT_NEAR(a.dphi_dy, -kTwoPi * eps, 1e-14);

  const TorusMetric m(Lattice{}, ConformalFactor({{1, 0, 0.1, 0.0}}));
  const PhiSample b = conformal_value_grad(m, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(b.phi, 0.1);
  EXPECT_NEAR(b.dphi_dx, 0.0, 1e-15);
  EXPECT_NEAR(b.dphi_dy, 0.0, 1e-15);
}

TEST(ConformalValueGrad, MatchesCentralDifferences) {
  const TorusMetric m = rough_metric();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-2, 2);
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const Vec2 p{U(rng), U(rng)};
    const PhiSample s = m.conformal_value_grad(p);
    const double fx = (m.phi(p + Vec2{h, 0}) - m.phi(p - Vec2{h, 0})) / (2 * h);
    const double fy = (m.phi(p + Vec2{0, h}) - m.phi(p - Vec2{0, h})) / (2 * h);
    EXPECT_NEAR(s.dphi_dx, fx, 1e-8);
    EXPECT_NEAR(s.dphi_dy, fy, 1e-8);
  }
}

TEST(ConformalValueGrad, Periodic) {
  const TorusMetric m = rough_metric();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(-2, 2);
  std::uniform_int_distribution<long> K(-5, 5);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p{U(rng), U(rng)};
    const Vec2 q = deck_translate(m, p, K(rng), K(rng));
    EXPECT_NEAR(m.phi(p), m.phi(q), 1e-12);
  }
}

TEST(TorusMetric, ExtremaOfCosine) {
  const TorusMetric m = cosine_eta(0.1);
  EXPECT_NEAR(m.phi_max(), 0.1, 1e-15);
  EXPECT_NEAR(m.phi_min(), -0.1, 1e-15);
  EXPECT_FALSE(m.is_flat());
}

TEST(TorusDistance, NearestLift) {
  const Lattice lat;
  EXPECT_NEAR(torus_distance(lat, {0.05, 0.5}, {0.95, 0.5}), 0.1, 1e-15);
  EXPECT_NEAR(torus_distance(lat, {0.0, 0.0}, {0.5, 0.5}), std::sqrt(0.5), 1e-15);
  // sheared lattice against a brute-force search over shifts
  const Lattice sh({1.0, 0.0}, {0.9, 0.15});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0, 1);
  for (int i = 0; i < 200; ++i) {
    const TorusPoint a{U(rng), U(rng)}, b{U(rng), U(rng)};
    double best = INFINITY;
    for (long q = -8; q <= 8; ++q)
      for (long r = -8; r <= 8; ++r)
        best = std::min(best, norm(sh.to_cover(b) + sh.translation(q, r) - sh.to_cover(a)));
    EXPECT_NEAR(torus_distance(sh, a, b), best, 1e-14);
  }
}
