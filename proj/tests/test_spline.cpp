#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace uam;

TEST(CubicSpline, InterpolatesKnots) {
  const std::vector<double> t{0, 1, 2.5, 4, 7}, y{0, 2, -1, 3, 3};
  const CubicSpline s(t, y);
  for (std::size_t n = 0; n < t.size(); ++n) EXPECT_NEAR(s(t[n]), y[n], 1e-12);
}

TEST(CubicSpline, NaturalEndsAndC2Continuity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> step(0.5, 3.0), val(-10, 10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> t{0}, y{val(rng)};
    for (int n = 0; n < 6; ++n) {
      t.push_back(t.back() + step(rng));
      y.push_back(val(rng));
    }
    const CubicSpline s(t, y);
    EXPECT_NEAR(s.second_derivative(t.front()), 0.0, 1e-9);
    EXPECT_NEAR(s.second_derivative(t.back()), 0.0, 1e-9);
    for (std::size_t n = 1; n + 1 < t.size(); ++n) {
      for (int order = 0; order <= 2; ++order) {
        const double left = s.eval_piece(n - 1, t[n], order), right = s.eval_piece(n, t[n], order);
        EXPECT_NEAR(left, right, 1e-8 * (1 + std::abs(left))) << "order " << order;
      }
    }
  }
}

TEST(CubicSpline, ReproducesLines) {
  const CubicSpline s({0, 1, 3, 4}, {1, 3, 7, 9});
  for (double x = 0; x <= 4; x += 0.125) EXPECT_NEAR(s(x), 1 + 2 * x, 1e-12);
}

TEST(CubicSpline, RejectsBadKnots) {
  EXPECT_THROW(CubicSpline({0, 0, 1}, {1, 2, 3}), DomainError);
  EXPECT_THROW(CubicSpline({0}, {1}), DomainError);
  EXPECT_THROW(CubicSpline({0, 1}, {1}), DomainError);
}

TEST(ChordSpline, CollinearPointsStayOnLine) {
  const std::vector<Point3> pts{{0, 0, 100}, {50, 100, 100}, {75, 150, 100}, {200, 400, 100}};
  const ChordSpline3 sp(pts);
  for (double s = 0; s <= sp.length(); s += sp.length() / 37) {
    const Point3 p = sp(s);
    EXPECT_NEAR(p.y, 2 * p.x, 1e-9);
    EXPECT_NEAR(p.z, 100, 1e-9);
  }
}
