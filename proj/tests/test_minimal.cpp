#include <gtest/gtest.h>

#include "torusblock/minimal.hpp"

using namespace torusblock;

namespace {

const TorusMetric kFlat = TorusMetric::flat();

TorusMetric cosine_eta(double eps = 0.1) { return TorusMetric(Lattice{}, ConformalFactor({{0, 1, eps, 0.0}})); }

PeriodicGeodesic shorten(const TorusMetric& m, IVec2 k, double offset) {
  return curve_shorten(m, k, offset, default_node_count(k));
}

// Smallest distance from the samples of b's lift to the closed geodesic a.
double min_separation(const Lattice& lat, const PeriodicGeodesic& a, const PeriodicGeodesic& b) {
  double d = INFINITY;
  for (const auto& smp : b.loop.samples) d = std::min(d, nearest_on_loop(lat, a, smp.pos).distance);
  return d;
}

}  // namespace

TEST(CurveShorten, FlatHorizontalLoops) {
  for (double c : {0.0, 0.3, 0.77}) {
    const PeriodicGeodesic g = shorten(kFlat, {1, 0}, c);
    EXPECT_NEAR(g.length, 1.0, 1e-9);
    EXPECT_NEAR(g.transversal_offset, c, 1e-9);
    for (const auto& z : g.nodes) EXPECT_NEAR(z.y, c, 1e-9);
    EXPECT_EQ(g.klass, (IVec2{1, 0}));
  }
}

TEST(CurveShorten, StretchedLattice) {
  const TorusMetric m = TorusMetric::flat(Lattice({2.0, 0.0}, {0.0, 1.0}));
  EXPECT_NEAR(shorten(m, {0, 1}, 0.4).length, 1.0, 1e-9);
  EXPECT_NEAR(shorten(m, {1, 0}, 0.4).length, 2.0, 1e-9);
  EXPECT_NEAR(shorten(m, {1, 1}, 0.1).length, std::sqrt(5.0), 1e-9);
}

TEST(CurveShorten, CosineConvergesToValley) {
  const PeriodicGeodesic g = shorten(cosine_eta(0.1), {1, 0}, 0.3);
  EXPECT_NEAR(g.length, std::exp(-0.1), 1e-6);
  EXPECT_NEAR(g.transversal_offset, 0.5, 1e-4);
  EXPECT_LE(g.residual, 1e-7);
  // the loop-length history never increases
  for (std::size_t k = 1; k < g.length_history.size(); ++k)
    EXPECT_LE(g.length_history[k], g.length_history[k - 1] + 1e-12);
}

TEST(CurveShorten, ClosedUpToPeriod) {
  const TorusMetric m(Lattice({1.0, 0.0}, {0.2, 1.1}), ConformalFactor({{1, 1, 0.05, 0.02}, {0, 1, 0.04, 0.0}}));
  const PeriodicGeodesic g = shorten(m, {2, 1}, 0.25);
  const Vec2 gap = g.loop.end() - g.loop.start() - g.period(m.lattice());
  EXPECT_LE(norm(gap), 1e-7);
  EXPECT_NEAR(g.loop.total_length, g.length, 1e-9);
}

TEST(CurveShorten, Errors) {
  EXPECT_THROW(curve_shorten(kFlat, {0, 0}, 0.0, 32), std::invalid_argument);
  EXPECT_THROW(curve_shorten(kFlat, {2, 2}, 0.0, 64), std::invalid_argument);
  EXPECT_THROW(curve_shorten(kFlat, {1, 0}, 0.0, 15), std::invalid_argument);
}

TEST(AverageSlope, PeriodicClasses) {
  EXPECT_EQ(average_slope(shorten(kFlat, {2, 3}, 0.1)), 1.5);
  EXPECT_EQ(average_slope(shorten(kFlat, {0, 1}, 0.1)), kInfiniteSlope);
  EXPECT_EQ(average_slope(shorten(kFlat, {1, -2}, 0.1)), -2.0);
}

TEST(AverageSlope, StraightPath) {
  const GeodesicPath p = flow(kFlat, {0.1, 0.2}, std::atan2(2.0, 1.0), 30.0, 1e-12);
  EXPECT_NEAR(average_slope(kFlat, p), 2.0, 1e-9);
  const GeodesicPath v = flow(kFlat, {0.1, 0.2}, 0.5 * kPi, 30.0, 1e-12);
  EXPECT_EQ(average_slope(kFlat, v), kInfiniteSlope);
  EXPECT_THROW(average_slope(kFlat, flow(kFlat, {0, 0}, 0.0, 5.0, 1e-12)), std::invalid_argument);
}

TEST(AverageSlope, UnrolledLift) {
  const PeriodicGeodesic g = shorten(kFlat, {2, 3}, 0.1);
  const GeodesicPath p = unroll(kFlat.lattice(), g, 12);
  EXPECT_EQ(p.homotopy, (IVec2{24, 36}));
  EXPECT_NEAR(p.total_length, 12 * std::sqrt(13.0), 1e-8);
  EXPECT_NEAR(average_slope(kFlat, p), 1.5, 1e-9);
  const PeriodicGeodesic c = shorten(cosine_eta(0.1), {1, 0}, 0.3);
  EXPECT_NEAR(average_slope(cosine_eta(0.1), unroll(kFlat.lattice(), c, 30)), 0.0, 1e-6);
}

TEST(ScanMinimizers, FlatLadder) {
  const StripReport r = scan_minimizers(kFlat, {1, 0}, 16);
  ASSERT_EQ(r.minimizers.size(), 16u);
  EXPECT_EQ(r.bad_gaps(), 0u);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_NEAR(r.minimizers[i].transversal_offset, (i + 0.5) / 16, 1e-9);
    EXPECT_TRUE(r.seeds[i].converged);
  }
  EXPECT_NEAR(r.min_length, 1.0, 1e-9);
}

TEST(ScanMinimizers, CosineSingleValley) {
  const StripReport r = scan_minimizers(cosine_eta(0.1), {1, 0}, 16);
  ASSERT_EQ(r.minimizers.size(), 1u);
  EXPECT_NEAR(r.minimizers[0].transversal_offset, 0.5, 1e-4);
  EXPECT_NEAR(r.min_length, std::exp(-0.1), 1e-6);
  ASSERT_EQ(r.gaps.size(), 1u);
  EXPECT_TRUE(r.gaps[0].bad);
  EXPECT_NEAR(r.gaps[0].width, 1.0, 1e-12);
}

TEST(ScanMinimizers, TwoSeeds) {
  const StripReport r = scan_minimizers(cosine_eta(0.1), {1, 0}, 2);
  EXPECT_EQ(r.minimizers.size(), 1u);
  EXPECT_EQ(r.gaps.size(), 1u);
  EXPECT_THROW(scan_minimizers(kFlat, {1, 0}, 1), std::invalid_argument);
}

TEST(ScanMinimizers, SameClassMinimizersAreDisjoint) {
  const StripReport r = scan_minimizers(kFlat, {1, 1}, 6);
  ASSERT_GE(r.minimizers.size(), 2u);
  for (std::size_t i = 0; i < r.minimizers.size(); ++i)
    for (std::size_t j = 0; j < r.minimizers.size(); ++j) {
      if (i == j) continue;
      const auto& a = r.minimizers[i];
      const auto& b = r.minimizers[j];
      EXPECT_TRUE(crossings_with_loop(kFlat.lattice(), a, b.loop).empty());
      EXPECT_GT(min_separation(kFlat.lattice(), a, b), 0.05);
    }
}

TEST(Asymptotic, FlatStaysParallel) {
  const PeriodicGeodesic g = shorten(kFlat, {1, 0}, 0.0);
  const AsymptoticCertificate c = asymptotic_geodesic(kFlat, g, {0, 0.3}, 8);
  EXPECT_FALSE(c.verdict);
  EXPECT_NEAR(c.final_distance(), 0.3, 1e-6);
  EXPECT_NEAR(c.limit_angle, 0.0, 1e-9);
}

TEST(Asymptotic, CosineApproachesValley) {
  const TorusMetric m = cosine_eta(0.1);
  const PeriodicGeodesic g = shorten(m, {1, 0}, 0.5);
  const AsymptoticCertificate c = asymptotic_geodesic(m, g, {0, 0.3}, 8);
  EXPECT_TRUE(c.verdict);
  EXPECT_LE(c.final_distance(), 0.05);
  EXPECT_TRUE(c.crossings.empty());
  EXPECT_TRUE(c.eventually_nonincreasing);
  EXPECT_EQ(c.shot_index.size(), 8u);
}

TEST(Asymptotic, Errors) {
  const TorusMetric m = cosine_eta(0.1);
  const PeriodicGeodesic g = shorten(m, {1, 0}, 0.5);
  EXPECT_THROW(asymptotic_geodesic(m, g, {0.3, 0.5}, 8), std::invalid_argument);
  EXPECT_THROW(asymptotic_geodesic(m, g, {0, 0.3}, 3), std::invalid_argument);
}

TEST(Foliation, FlatIsFoliated) {
  const FoliationResult f = foliation_check(kFlat, {1, 0}, 4);
  EXPECT_EQ(f.fraction, 1.0);
  EXPECT_EQ(f.points.size(), 16u);
  EXPECT_THROW(foliation_check(kFlat, {1, 0}, 3), std::invalid_argument);
}

TEST(Foliation, CosineOnlyValleyRow) {
  const FoliationResult f = foliation_check(cosine_eta(0.1), {1, 0}, 4);
  EXPECT_EQ(f.fraction, 0.25);
  for (const auto& p : f.points) EXPECT_EQ(p.covered, p.point.v == 0.5);
  EXPECT_NEAR(f.min_length, std::exp(-0.1), 1e-6);
}
