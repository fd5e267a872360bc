#include <gtest/gtest.h>

#include <cmath>

#include "declab/rng.hpp"
#include "declab/simplex.hpp"

using namespace declab;

TEST(Simplex, KlMatchesHandComputation) {
  const Vec p{0.5, 0.5}, q{0.25, 0.75};
  const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(0.5 / 0.75);
  const KlValue v = kl(p, q);
  EXPECT_FALSE(v.infinite);
  EXPECT_NEAR(v.value, expected, 1e-15);
}

TEST(Simplex, KlInfiniteOffSupport) {
  EXPECT_TRUE(kl({0.5, 0.5}, {1.0, 0.0}).infinite);
  EXPECT_FALSE(kl({1.0, 0.0}, {0.5, 0.5}).infinite);
}

TEST(Simplex, DivergencesAreNonnegativeAndOrdered) {
  Rng rng(7);
  for (int k = 0; k < 500; ++k) {
    const Vec p = rng.dirichlet(4), q = rng.dirichlet(4);
    const double h = hellinger_sq(p, q), d = tv(p, q), k_pq = kl(p, q).value;
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0 + 1e-12);
    EXPECT_LE(h, d + 1e-12);               // H² ≤ TV
    EXPECT_LE(2.0 * d * d, k_pq + 1e-12);  // Pinsker
  }
}

TEST(Simplex, LogSumExpIsStable) {
  EXPECT_NEAR(log_sum_exp({1000.0, 1000.0}), 1000.0 + std::log(2.0), 1e-12);
  const Vec s = softmax({-1e4, 0.0});
  EXPECT_DOUBLE_EQ(s[1], 1.0);
}

TEST(Simplex, SmoothedKlIsFinite) {
  EXPECT_TRUE(std::isfinite(kl_smoothed({0.5, 0.5}, {1.0, 0.0}, 1e-12)));
}

TEST(Simplex, GridRespectsBudget) {
  const auto grid = simplex_grid(3, 50);
  EXPECT_FALSE(grid.empty());
  EXPECT_LE(grid.size(), 50u);
  for (const Vec& g : grid) {
    double total = 0.0;
    for (double x : g) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}
