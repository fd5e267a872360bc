#include <gtest/gtest.h>

#include <cmath>

#include "declab/errors.hpp"
#include "declab/mdp.hpp"
#include "declab/rng.hpp"

using namespace declab;

namespace {

StagePolicy random_policy(Rng& rng, std::size_t S, std::size_t A, std::size_t H) {
  StagePolicy pi = StagePolicy::uniform(S, A, H);
  for (std::size_t c = 0; c < H * S; ++c) {
    const Vec row = rng.dirichlet(A);
    for (std::size_t a = 0; a < A; ++a) pi.prob[c * A + a] = row[a];
  }
  return pi;
}

// Expected return by summing over every state-action path.
double enumerate_value(const TabularMDP& mdp, const StagePolicy& pi) {
  const std::size_t S = mdp.S(), A = mdp.A(), H = mdp.H();
  double total = 0.0;
  std::vector<std::size_t> s(H), a(H);
  std::size_t n = 1;
  for (std::size_t h = 0; h < H; ++h) n *= S * A;
  for (std::size_t id = 0; id < n; ++id) {
    std::size_t x = id;
    for (std::size_t h = 0; h < H; ++h) {
      s[h] = x % S;
      x /= S;
      a[h] = x % A;
      x /= A;
    }
    if (s[0] != mdp.transition.s1) continue;
    double prob = 1.0, ret = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
      prob *= pi(h, s[h], a[h]);
      if (h + 1 < H) prob *= mdp.transition.p(h, s[h], a[h], s[h + 1]);
      ret += mdp.reward.r(h, s[h], a[h]);
    }
    total += prob * ret;
  }
  return total;
}

}  // namespace

TEST(Mdp, RandomInstancesValidate) {
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    const TabularMDP mdp{Transition::random(rng, 3, 2, 3), Reward::random(rng, 3, 2, 3)};
    EXPECT_NO_THROW(mdp.validate());
  }
}

TEST(Mdp, RejectsOverlongRewards) {
  Rng rng(2);
  TabularMDP mdp{Transition::random(rng, 2, 2, 2), Reward{2, 2, 2, Vec(8, 0.9)}};
  EXPECT_THROW(mdp.validate(), ValidationError);
}

TEST(Mdp, DynamicProgrammingMatchesPathEnumeration) {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const std::size_t S = 1 + rng.index(3), A = 1 + rng.index(3), H = 1 + rng.index(3);
    const TabularMDP mdp{Transition::random(rng, S, A, H), Reward::random(rng, S, A, H)};
    const StagePolicy pi = random_policy(rng, S, A, H);
    EXPECT_NEAR(dp_eval(mdp, pi).value, enumerate_value(mdp, pi), 1e-12);
  }
}

TEST(Mdp, OptimalDominatesEveryDeterministicPolicy) {
  Rng rng(4);
  const TabularMDP mdp{Transition::random(rng, 2, 2, 2), Reward::random(rng, 2, 2, 2)};
  const OptimalSolution opt = dp_optimal(mdp.transition, mdp.reward);
  double best = 0.0;
  for (const StagePolicy& pi : StagePolicy::all_deterministic(2, 2, 2)) {
    best = std::max(best, dp_eval(mdp, pi).value);
  }
  EXPECT_NEAR(opt.eval.value, best, 1e-14);
  EXPECT_NEAR(dp_eval(mdp, opt.greedy).value, best, 1e-14);
}

TEST(Mdp, OccupancyStagesSumToOneAndGiveValue) {
  Rng rng(5);
  const TabularMDP mdp{Transition::random(rng, 3, 2, 3), Reward::random(rng, 3, 2, 3)};
  const StagePolicy pi = random_policy(rng, 3, 2, 3);
  const Vec d = occupancy(mdp.transition, pi);
  double value = 0.0;
  for (std::size_t h = 0; h < 3; ++h) {
    double total = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      total += d[h * 6 + i];
      value += d[h * 6 + i] * mdp.reward.R[h * 6 + i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_NEAR(value, dp_eval(mdp, pi).value, 1e-12);
}

TEST(Mdp, PerformanceDifferenceIdentity) {
  Rng rng(6);
  for (int k = 0; k < 200; ++k) {
    const std::size_t S = 1 + rng.index(3), A = 1 + rng.index(3), H = 1 + rng.index(4);
    const TabularMDP mdp{Transition::random(rng, S, A, H), Reward::random(rng, S, A, H)};
    EXPECT_LE(pdl_check(mdp, random_policy(rng, S, A, H), random_policy(rng, S, A, H)), 1e-10);
  }
}

TEST(Mdp, MixAndSwitchPolicies) {
  const StagePolicy a = StagePolicy::deterministic(1, 2, 2, {0, 0});
  const StagePolicy b = StagePolicy::deterministic(1, 2, 2, {1, 1});
  const StagePolicy m = mix_policy(a, b, 1.0);
  EXPECT_NEAR(m(0, 0, 0), 0.5, 1e-15);
  EXPECT_NEAR(m(1, 0, 1), 0.5, 1e-15);
  const StagePolicy s = switch_policy(a, b, 1);
  EXPECT_EQ(s(0, 0, 0), 1.0);
  EXPECT_EQ(s(1, 0, 1), 1.0);
}

TEST(Trajectories, CodingRoundTrips) {
  const TrajectoryCoding c{2, 3, 2, true};
  EXPECT_EQ(c.size(), 144u);
  for (std::size_t id = 0; id < c.size(); ++id) EXPECT_EQ(c.encode(c.decode(id)), id);
}

TEST(Trajectories, LawSumsToOneAndMatchesValue) {
  Rng rng(7);
  const TabularMDP mdp{Transition::random(rng, 2, 2, 2), Reward::random(rng, 2, 2, 2)};
  const StagePolicy pi = random_policy(rng, 2, 2, 2);
  const Vec law = trajectory_law(mdp, pi, true);
  const TrajectoryCoding c = trajectory_coding(mdp, true);
  double total = 0.0, bits = 0.0;
  for (std::size_t id = 0; id < law.size(); ++id) {
    total += law[id];
    for (const auto& step : c.decode(id)) bits += law[id] * static_cast<double>(step.bit);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(bits, dp_eval(mdp, pi).value, 1e-12);
}

TEST(Trajectories, MdpGameRowsAreDistributions) {
  Rng rng(8);
  std::vector<TabularMDP> models;
  for (int k = 0; k < 3; ++k) models.push_back({Transition::random(rng, 2, 2, 2), Reward::random(rng, 2, 2, 2)});
  const MdpGame mg = make_mdp_game(models, StagePolicy::all_deterministic(2, 2, 2), false);
  EXPECT_EQ(mg.game.num_models(), 3u);
  EXPECT_EQ(mg.trajectory_ids.size(), mg.game.num_observations());
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_NEAR(mg.game.value(m, 0),
                dp_eval(models[m], StagePolicy::all_deterministic(2, 2, 2)[0]).value, 1e-12);
  }
}

TEST(Trajectories, CapIsEnforced) {
  Rng rng(9);
  const TabularMDP mdp{Transition::random(rng, 4, 4, 4), Reward::random(rng, 4, 4, 4)};
  EXPECT_THROW(trajectory_law(mdp, StagePolicy::uniform(4, 4, 4), true, 1000), CapExceeded);
}
