#include <gtest/gtest.h>

#include <cmath>

#include "declab/complexity.hpp"
#include "declab/errors.hpp"
#include "declab/game.hpp"
#include "declab/instances.hpp"
#include "declab/rng.hpp"

using namespace declab;

namespace {

FiniteGame two_by_two() {
  // m0: π0 → (0.9, 0.1), π1 → (0.5, 0.5); m1: π0 → (0.2, 0.8), π1 → (0.5, 0.5)
  return FiniteGame::from_tables(2, 2, 2, {0.9, 0.1, 0.5, 0.5, 0.2, 0.8, 0.5, 0.5},
                                 {1.0, 0.0, 0.0, 1.0});
}

}  // namespace

TEST(Game, RejectsBadRows) {
  EXPECT_THROW(FiniteGame::from_tables(1, 1, 2, {0.5, 0.6}, {0.0}), ValidationError);
  EXPECT_THROW(FiniteGame::from_tables(1, 1, 2, {1.2, -0.2}, {0.0}), ValidationError);
  EXPECT_THROW(FiniteGame::from_tables(1, 2, 2, {0.5, 0.5}, {0.0, 0.0}), ValidationError);
}

TEST(Game, OptimalPolicyBreaksTiesLow) {
  const FiniteGame g = FiniteGame::from_tables(1, 3, 1, {1.0, 1.0, 1.0}, {0.2, 0.7, 0.7});
  EXPECT_EQ(g.optimal_policy(0), 1u);
}

TEST(Partition, RejectsOverlapAndEmpty) {
  const FiniteGame g = two_by_two();
  EXPECT_THROW(PartitionScheme(g, {{{0, 0}}, {{0, 0}, {1, 1}}}), ValidationError);
  EXPECT_THROW(PartitionScheme(g, {{{0, 0}}, {}}), ValidationError);
  EXPECT_THROW(PartitionScheme(g, {{{2, 0}}}), ValidationError);
}

TEST(Partition, StandardKinds) {
  const FiniteGame g = two_by_two();
  const PartitionScheme per_policy = make_standard_partitions(g, PartitionKind::per_policy);
  EXPECT_EQ(per_policy.num_subsets(), 2u);
  EXPECT_EQ(per_policy.num_elements(), 4u);
  for (std::size_t e = 0; e < 4; ++e) {
    EXPECT_EQ(per_policy.subset_of(e), per_policy.element(e).policy);
  }
  const PartitionScheme per_model = make_standard_partitions(g, PartitionKind::per_model_optimal);
  EXPECT_EQ(per_model.num_subsets(), 2u);
  EXPECT_EQ(per_model.num_elements(), 2u);
  EXPECT_EQ(per_model.find(0, 0), 0u);
  EXPECT_EQ(per_model.find(0, 1), PartitionScheme::npos);
  EXPECT_EQ(per_model.find_subset(1, 1), 1u);
}

TEST(Partition, ProductPairsEveryGroupWithEveryPolicy) {
  Rng rng(3);
  const FiniteGame g = random_game(rng, 4, 3, 2);
  const PartitionScheme s = make_product_partitions(g, {{0, 2}, {1, 3}});
  EXPECT_EQ(s.num_subsets(), 6u);
  EXPECT_EQ(s.num_elements(), 12u);
  EXPECT_TRUE(is_product_scheme(g, s));
  EXPECT_TRUE(is_fixed_comparator(s));
  EXPECT_EQ(s.find_subset(0, 1), s.find_subset(2, 1));
  EXPECT_NE(s.find_subset(0, 1), s.find_subset(1, 1));
}

TEST(Belief, NormalizesInLogSpace) {
  const Belief b = Belief::from_log_weights({-1000.0, -1000.0 + std::log(3.0)});
  EXPECT_NEAR(b.prob(0), 0.25, 1e-12);
  EXPECT_NEAR(b.prob(1), 0.75, 1e-12);
  const Belief z = Belief::from_probs({0.0, 2.0});
  EXPECT_EQ(z.prob(0), 0.0);
  EXPECT_EQ(z.prob(1), 1.0);
}

TEST(Posterior, HandComputedTwoByTwo) {
  const FiniteGame g = two_by_two();
  const PartitionScheme s = make_standard_partitions(g, PartitionKind::per_model_optimal);
  const Belief prior = Belief::from_probs({0.5, 0.5});
  const Belief post = posterior_over_partitions(prior, s, g, 0, 0);
  EXPECT_NEAR(post.prob(0), 0.9 / 1.1, 1e-15);
  EXPECT_NEAR(post.prob(1), 0.2 / 1.1, 1e-15);
}

TEST(Posterior, MatchesBruteForceOnRandomInstances) {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const FiniteGame g = random_game(rng, 2 + rng.index(3), 2 + rng.index(3), 2 + rng.index(3));
    const PartitionScheme s = random_custom_partitions(rng, g, 1 + rng.index(3));
    const Vec prior = rng.dirichlet(s.num_elements());
    const std::size_t pi = rng.index(g.num_policies()), o = rng.index(g.num_observations());
    Vec joint(s.num_subsets(), 0.0);
    double total = 0.0;
    for (std::size_t e = 0; e < s.num_elements(); ++e) {
      const double w = prior[e] * g.obs(s.element(e).model, pi, o);
      joint[s.subset_of(e)] += w;
      total += w;
    }
    const Belief post = posterior_over_partitions(Belief::from_probs(prior), s, g, pi, o);
    for (std::size_t phi = 0; phi < joint.size(); ++phi) {
      EXPECT_NEAR(post.prob(phi), joint[phi] / total, 1e-12);
    }
  }
}

TEST(Posterior, ImpossibleObservationThrows) {
  const FiniteGame g = FiniteGame::from_tables(1, 1, 2, {1.0, 0.0}, {0.0});
  const PartitionScheme s = make_standard_partitions(g, PartitionKind::per_policy);
  EXPECT_THROW(posterior_over_partitions(Belief::uniform(1), s, g, 0, 1), ImpossibleObservation);
}

TEST(Posterior, MarginalAndConditionalRecoverJoint) {
  Rng rng(5);
  const FiniteGame g = random_game(rng, 3, 3, 2);
  const PartitionScheme s = make_standard_partitions(g, PartitionKind::per_policy);
  Vec nu = rng.dirichlet(s.num_elements());
  for (std::size_t e : s.members(1)) nu[e] = 0.0;
  const MarginalConditional mc = marginal_and_conditional(Belief::from_probs(nu), s);
  const double total = [&] {
    double t = 0.0;
    for (double x : nu) t += x;
    return t;
  }();
  EXPECT_TRUE(mc.zero_mass[1]);
  EXPECT_FALSE(mc.conditional[1].has_value());
  for (std::size_t phi : {0u, 2u}) {
    ASSERT_TRUE(mc.conditional[phi].has_value());
    const auto& members = s.members(phi);
    for (std::size_t i = 0; i < members.size(); ++i) {
      EXPECT_NEAR(mc.marginal.prob(phi) * mc.conditional[phi]->prob(i), nu[members[i]] / total, 1e-14);
    }
  }
}

TEST(Posterior, MixtureObservationIsAverage) {
  const FiniteGame g = two_by_two();
  const Vec mix = mixture_obs(g, Vec{0.25, 0.75}, 0);
  EXPECT_NEAR(mix[0], 0.25 * 0.9 + 0.75 * 0.2, 1e-15);
  EXPECT_NEAR(mix[1], 0.25 * 0.1 + 0.75 * 0.8, 1e-15);
}
