#include <gtest/gtest.h>

#include <cmath>

#include "declab/complexity.hpp"
#include "declab/errors.hpp"
#include "declab/instances.hpp"
#include "declab/rng.hpp"

using namespace declab;

TEST(DecKl, SingleModelIsZero) {
  Rng rng(1);
  const FiniteGame g = random_game(rng, 1, 3, 3);
  const DecResult r = dec_kl(g, 0.5);
  EXPECT_NEAR(r.value, 0.0, 1e-9);
}

TEST(DecKl, UninformativeTwoModelsHasClosedForm) {
  // Identical observations, so the information term vanishes and DEC is the matrix-game value
  // of the regret table [[0, 1], [1, 0]]: 1/2.
  const FiniteGame g = FiniteGame::from_tables(2, 2, 1, {1.0, 1.0, 1.0, 1.0}, {1.0, 0.0, 0.0, 1.0});
  EXPECT_NEAR(dec_kl(g, 1.0).value, 0.5, 1e-6);
  const PartitionScheme s = make_standard_partitions(g, PartitionKind::per_model_optimal);
  EXPECT_NEAR(dec_kl_phi(g, s, 1.0).value, 0.5, 2e-3);
  EXPECT_NEAR(maxmin_air(g, s, 1.0).value, 0.5, 2e-3);
}

TEST(DecKl, DecreasesWithInformationWeight) {
  Rng rng(2);
  const FiniteGame g = random_game(rng, 3, 3, 3);
  const double small = dec_kl(g, 0.1).value, large = dec_kl(g, 10.0).value;
  EXPECT_LE(small, large + 1e-6);
}

TEST(DecKl, CapIsEnforced) {
  Rng rng(3);
  const FiniteGame g = random_game(rng, 4, 4, 4);
  ComplexityOptions o;
  o.cap = 32;
  EXPECT_THROW(dec_kl(g, 1.0, o), CapExceeded);
}

TEST(CPhi, AdaptiveToyHandValue) {
  // ν = (1/2, 1/2) on {(m0, π0), (m1, π1)}: comparator value 0.9, best fixed policy 0.6.
  const GameInstance toy = adaptive_comparator_toy();
  const CPhiResult c = c_phi(toy.game, toy.scheme);
  EXPECT_NEAR(c.value, 0.3, 1e-9);
  EXPECT_NEAR(c.nu[0], 0.5, 1e-6);
}

TEST(CPhi, NonpositiveForFixedComparatorSchemes) {
  Rng rng(4);
  for (int k = 0; k < 10; ++k) {
    const FiniteGame g = random_game(rng, 3, 3, 2);
    const PartitionScheme s = make_product_partitions(g, random_theta(rng, 3, 2));
    EXPECT_LE(c_phi(g, s).value, 1e-9);
  }
}

TEST(Convexify, DyadicGridCountsAndMixtures) {
  Rng rng(5);
  const FiniteGame g = random_game(rng, 3, 2, 2);
  const PartitionScheme s = make_product_partitions(g, {{0, 1}, {2}});
  const ConvexifiedGame c = convexify_game(g, s, 2);
  // {0,1}: 5 mixtures at resolution 1/4; {2}: one vertex.
  EXPECT_EQ(c.game.num_models(), 6u);
  for (std::size_t k = 0; k < c.weights.size(); ++k) {
    for (std::size_t pi = 0; pi < 2; ++pi) {
      double v = 0.0;
      for (std::size_t m = 0; m < 3; ++m) v += c.weights[k][m] * g.value(m, pi);
      EXPECT_NEAR(c.game.value(k, pi), v, 1e-14);
      const Vec mix = mixture_obs(g, c.weights[k], pi);
      for (std::size_t o = 0; o < 2; ++o) EXPECT_NEAR(c.game.obs(k, pi, o), mix[o], 1e-14);
    }
  }
}

TEST(Convexify, ContainsOriginalModels) {
  Rng rng(6);
  const FiniteGame g = random_game(rng, 3, 2, 2);
  const PartitionScheme s = make_standard_partitions(g, PartitionKind::per_policy);
  const ConvexifiedGame c = convexify_game(g, s, 1);
  for (std::size_t m = 0; m < 3; ++m) {
    bool found = false;
    for (const Vec& w : c.weights) found = found || w[m] == 1.0;
    EXPECT_TRUE(found);
  }
}

TEST(Lemmas, SuitePassesOnProductScheme) {
  Rng rng(7);
  const FiniteGame g = random_game(rng, 3, 2, 3);
  const PartitionScheme s = make_product_partitions(g, {{0, 2}, {1}});
  const ComplexityReport r = verify_lemma_suite(g, s, 0.5);
  EXPECT_TRUE(r.passed());
  EXPECT_FALSE(r.checks.empty());
  EXPECT_NEAR(r.maxmin_air, r.dec_kl_phi, r.tol + r.gap_maxmin_air + r.gap_dec_kl_phi);
}

TEST(Lemmas, AdaptiveToyDecAboveCPhi) {
  const GameInstance toy = adaptive_comparator_toy();
  for (double eta : {0.2, 1.0}) {
    EXPECT_GE(dec_kl_phi(toy.game, toy.scheme, eta).value, 0.3 - 1e-3);
  }
}

TEST(LinearQv, InstanceIsLinearAndBounded) {
  LinearQvSizes sizes;
  sizes.reward_bits = true;
  const LinearQvInstance lq = gen_linear_qv(3, 2, 2, sizes);
  EXPECT_LE(lq.residual, 1e-9);
  EXPECT_EQ(lq.d, 2u);
  ComplexityOptions o;
  o.closure_depth = 3;
  const BoundCheck b = linear_qv_bound_check(lq.mdp_game.game, lq.scheme, 2, 2, 0.05, o);
  EXPECT_NEAR(b.bound, 4 * 0.05 * 2 * 4, 1e-12);
  EXPECT_TRUE(b.passed);
}
