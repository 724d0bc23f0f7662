#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "proxguard/error.hpp"
#include "proxguard/granularity.hpp"

using namespace proxguard;

namespace {

// Independent distance oracles: walk the cell boundary densely.
double boundary_min(const Point& p, const Rect& r, int steps) {
  if (p.x >= r.x_lo && p.x <= r.x_hi && p.y >= r.y_lo && p.y <= r.y_hi) return 0.0;
  double best = INFINITY;
  for (int k = 0; k <= steps; ++k) {
    const double f = static_cast<double>(k) / steps;
    const double x = r.x_lo + f * (r.x_hi - r.x_lo);
    const double y = r.y_lo + f * (r.y_hi - r.y_lo);
    for (const Point q : {Point{x, r.y_lo}, Point{x, r.y_hi}, Point{r.x_lo, y}, Point{r.x_hi, y}}) {
      best = std::min(best, std::hypot(q.x - p.x, q.y - p.y));
    }
  }
  return best;
}

double boundary_max(const Point& p, const Rect& r, int steps) {
  double best = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double f = static_cast<double>(k) / steps;
    const double x = r.x_lo + f * (r.x_hi - r.x_lo);
    const double y = r.y_lo + f * (r.y_hi - r.y_lo);
    for (const Point q : {Point{x, r.y_lo}, Point{x, r.y_hi}, Point{r.x_lo, y}, Point{r.x_hi, y}}) {
      best = std::max(best, std::hypot(q.x - p.x, q.y - p.y));
    }
  }
  return best;
}

GridGranularity grid32(double l = 10.0) { return GridGranularity({0.0, 0.0}, l, 32, 32); }

}  // namespace

TEST(Granularity, PointsLandInTheirCell) {
  const GridGranularity g({-50.0, 20.0}, 7.5, 13, 9);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-50.0, -50.0 + 13 * 7.5), uy(20.0, 20.0 + 9 * 7.5);
  for (int k = 0; k < 20000; ++k) {
    const Point p{ux(rng), uy(rng)};
    const GranuleIndex i = granule_of(g, p);
    ASSERT_TRUE(g.is_valid(i));
    const Rect r = g.cell(i);
    EXPECT_LE(r.x_lo, p.x);
    EXPECT_LT(p.x, r.x_hi);
    EXPECT_LE(r.y_lo, p.y);
    EXPECT_LT(p.y, r.y_hi);
  }
}

TEST(Granularity, TopAndRightEdgesFoldIntoLastCells) {
  const GridGranularity g({0.0, 0.0}, 10.0, 4, 3);
  EXPECT_EQ(granule_of(g, {40.0, 30.0}), g.index_of(3, 2));
  EXPECT_EQ(granule_of(g, {0.0, 0.0}), g.index_of(0, 0));
  EXPECT_EQ(granule_of(g, {40.0, 5.0}), g.index_of(3, 0));
}

TEST(Granularity, OutsidePointsAreDomainErrors) {
  const GridGranularity g({0.0, 0.0}, 10.0, 4, 3);
  EXPECT_THROW(granule_of(g, {-0.001, 5.0}), DomainError);
  EXPECT_THROW(granule_of(g, {5.0, 30.5}), DomainError);
  EXPECT_THROW(granule_of(g, {NAN, 1.0}), DomainError);
}

TEST(Granularity, NonValidIndexesHaveNoCell) {
  const GridGranularity g({0.0, 0.0}, 10.0, 4, 3);
  EXPECT_NO_THROW(g.cell(GranuleIndex{11}));
  EXPECT_THROW(g.cell(GranuleIndex{12}), IndexError);
  EXPECT_FALSE(g.is_valid(GranuleIndex{12}));
}

TEST(Granularity, RejectsBadGeometry) {
  EXPECT_THROW(GridGranularity({0.0, 0.0}, 0.0, 4, 4), ParameterError);
  EXPECT_THROW(GridGranularity({0.0, 0.0}, 1.0, 0, 4), ParameterError);
}

TEST(Granularity, MinAndMaxDistanceMatchBoundaryWalk) {
  const GridGranularity g = grid32();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-40.0, 360.0);
  std::uniform_int_distribution<std::uint64_t> cell(0, g.size() - 1);
  constexpr int kSteps = 4000;  // boundary step 10/4000 m
  for (int k = 0; k < 400; ++k) {
    const Point p{u(rng), u(rng)};
    const GranuleIndex i{cell(rng)};
    const Rect r = g.cell(i);
    EXPECT_NEAR(min_dist(p, g, i), boundary_min(p, r, kSteps), 0.01);
    EXPECT_NEAR(max_dist(p, g, i), boundary_max(p, r, kSteps), 1e-9);
    EXPECT_LE(min_dist(p, g, i), max_dist(p, g, i));
  }
}

TEST(Granularity, MinDistIsZeroInsideTheCell) {
  const GridGranularity g = grid32();
  EXPECT_EQ(min_dist({15.0, 15.0}, g, g.index_of(1, 1)), 0.0);
  EXPECT_DOUBLE_EQ(min_dist({0.0, 0.0}, g, g.index_of(3, 4)), 50.0);
  EXPECT_DOUBLE_EQ(max_dist({0.0, 0.0}, g, g.index_of(0, 0)), std::sqrt(200.0));
}

TEST(Granularity, SMaxBoundsEveryDiscPlacement) {
  std::mt19937_64 rng(5);
  for (const double delta : {0.3, 1.0, 1.7, 2.5, 4.0, 6.2}) {
    const GridGranularity g({0.0, 0.0}, 1.0, 32, 32);
    std::uniform_real_distribution<double> u(10.0, 11.0);
    std::uint64_t worst = 0;
    for (int k = 0; k < 3000; ++k) {
      const Point p{u(rng), u(rng)};
      std::uint64_t count = 0;
      for (std::uint64_t i = 0; i < g.size(); ++i) count += min_dist(p, g, GranuleIndex{i}) <= delta;
      worst = std::max(worst, count);
    }
    EXPECT_LE(worst, s_max(g, delta)) << "delta " << delta;
  }
  EXPECT_EQ(s_max(grid32(200.0), 400.0), 36U);
}

TEST(Granularity, TMaxIsTheWorstPointPair) {
  const GridGranularity g = grid32();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> f(0.0, 1.0);
  const GranuleIndex a = g.index_of(2, 3), b = g.index_of(5, 1);
  const Rect ra = g.cell(a), rb = g.cell(b);
  double worst = 0.0;
  for (int k = 0; k < 200000; ++k) {
    const Point p{ra.x_lo + f(rng) * 10.0, ra.y_lo + f(rng) * 10.0};
    const Point q{rb.x_lo + f(rng) * 10.0, rb.y_lo + f(rng) * 10.0};
    worst = std::max(worst, distance(p, q));
  }
  // the farthest pair of two convex cells is a vertex pair
  double corners = 0.0;
  for (const double ax : {ra.x_lo, ra.x_hi})
    for (const double ay : {ra.y_lo, ra.y_hi})
      for (const double bx : {rb.x_lo, rb.x_hi})
        for (const double by : {rb.y_lo, rb.y_hi}) corners = std::max(corners, std::hypot(ax - bx, ay - by));
  const double v = 2.0;
  EXPECT_LE(worst / v, t_max(g, a, b, v) + 1e-12);
  EXPECT_DOUBLE_EQ(t_max(g, a, b, v), corners / v);
  EXPECT_DOUBLE_EQ(t_max(g, a, a, v), std::sqrt(200.0) / v);
  EXPECT_THROW(t_max(g, a, b, 0.0), ParameterError);
}

TEST(Granularity, CandidatesMatchExhaustiveScan) {
  const GridGranularity g = grid32();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 320.0);
  for (int k = 0; k < 150; ++k) {
    const Point p{u(rng), u(rng)};
    const double delta = 1.0 + 40.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (const auto s : {Semantics::kMinDist, Semantics::kMaxDist, Semantics::kMostly}) {
      std::vector<GranuleIndex> expect;
      for (std::uint64_t i = 0; i < g.size(); ++i) {
        const GranuleIndex gi{i};
        const Rect r = g.cell(gi);
        bool in = false;
        if (s == Semantics::kMinDist) {
          const double dx = std::max({r.x_lo - p.x, 0.0, p.x - r.x_hi});
          const double dy = std::max({r.y_lo - p.y, 0.0, p.y - r.y_hi});
          in = std::hypot(dx, dy) <= delta;
        }
        if (s == Semantics::kMaxDist) in = boundary_max(p, r, 1) <= delta;
        if (s == Semantics::kMostly) in = in_proximity_of_cell(p, g, gi, delta, s);
        if (in) expect.push_back(gi);
      }
      EXPECT_EQ(proximity_candidates(p, g, delta, s), expect);
    }
  }
}

TEST(Granularity, CandidateSetsNestByStrictness) {
  const GridGranularity g = grid32();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 320.0);
  for (int k = 0; k < 200; ++k) {
    const Point p{u(rng), u(rng)};
    const double delta = 3.0 + 30.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto mx = proximity_candidates(p, g, delta, Semantics::kMaxDist);
    const auto mo = proximity_candidates(p, g, delta, Semantics::kMostly);
    const auto mn = proximity_candidates(p, g, delta, Semantics::kMinDist);
    EXPECT_TRUE(std::includes(mo.begin(), mo.end(), mx.begin(), mx.end()));
    EXPECT_TRUE(std::includes(mn.begin(), mn.end(), mo.begin(), mo.end()));
    EXPECT_LE(mn.size(), s_max(g, delta));
  }
}

TEST(Granularity, CoveredFractionConvergesUnderRefinement) {
  const GridGranularity g({0.0, 0.0}, 1.0, 8, 8);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(3.0, 5.0);
  for (int k = 0; k < 50; ++k) {
    const Point p{u(rng), u(rng)};
    for (std::uint64_t i = 0; i < g.size(); ++i) {
      const double coarse = covered_fraction(p, g, GranuleIndex{i}, 1.3);
      const double fine = covered_fraction(p, g, GranuleIndex{i}, 1.3, 512);
      EXPECT_NEAR(coarse, fine, 0.03);
      EXPECT_GE(coarse, 0.0);
      EXPECT_LE(coarse, 1.0);
    }
  }
  // quarter disc of radius 1 centred on a cell corner
  EXPECT_NEAR(covered_fraction({0.0, 0.0}, g, g.index_of(0, 0), 1.0, 1024), M_PI / 4.0, 1e-3);
}

TEST(Granularity, ProximityIsInclusiveAtDelta) {
  const GridGranularity g = grid32();
  // the cell (3,0) starts exactly 30 m from the origin
  EXPECT_TRUE(in_proximity_of_cell({0.0, 5.0}, g, g.index_of(3, 0), 30.0, Semantics::kMinDist));
  EXPECT_FALSE(in_proximity_of_cell({0.0, 5.0}, g, g.index_of(3, 0), 29.999, Semantics::kMinDist));
}

TEST(Granularity, SemanticsNamesRoundTrip) {
  for (const auto s : {Semantics::kMinDist, Semantics::kMaxDist, Semantics::kMostly}) {
    EXPECT_EQ(parse_semantics(to_string(s)), s);
  }
  EXPECT_THROW(parse_semantics("nearest"), ParameterError);
}
