#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "declab/embedding.hpp"
#include "declab/game.hpp"
#include "declab/mdp.hpp"
#include "declab/rng.hpp"

namespace declab {

// Random game with Dirichlet(alpha) observation rows and uniform values.
FiniteGame random_game(Rng& rng, std::size_t n_models, std::size_t n_policies, std::size_t n_obs,
                       double alpha = 1.0);

// Random grouping of the models into `n_groups` nonempty classes.
std::vector<std::vector<std::size_t>> random_theta(Rng& rng, std::size_t n_models,
                                                   std::size_t n_groups);

// Random disjoint subsets of M×Π covering a random fraction of the pairs.
PartitionScheme random_custom_partitions(Rng& rng, const FiniteGame& game, std::size_t n_subsets);

struct GameInstance {
  std::string kind;
  FiniteGame game;
  PartitionScheme scheme;
  std::vector<std::vector<std::size_t>> theta;  // model groups, when the scheme is a product
};

// Two-armed Bernoulli bandit; model i has arm means means[i], observations are reward bits.
FiniteGame bandit_game(const std::vector<std::array<double, 2>>& means);
// Means 1/2 ± Δ/2 for Δ = 0.0125·2^k, k = 0..5, with either arm better.
std::vector<std::array<double, 2>> default_bandit_means();

// Two models with swapped optimal policies sharing one subset, so the comparator moves with
// the model. C(Φ) = 0.3.
GameInstance adaptive_comparator_toy();

// Product scheme over an MDP family: two transitions × two rewards, policies the open-loop
// action sequences, trajectories with reward bits; Θ groups models by transition.
GameInstance hybrid_product_instance(std::uint64_t seed, std::size_t S = 2, std::size_t A = 2,
                                     std::size_t H = 2, std::size_t n_transitions = 2,
                                     std::size_t n_rewards = 2);

// Every open-loop policy π_h(·|s) = δ_{a_h}, in lexicographic order of (a_0, ..., a_{H−1}).
std::vector<StagePolicy> open_loop_policies(std::size_t S, std::size_t A, std::size_t H);

// Stage-0 transitions ignore the action, so open-loop occupancies have rank ≤ S per stage.
HybridFamily low_occupancy_family(std::uint64_t seed, std::size_t n_transitions = 3,
                                  std::size_t n_rewards = 3);
// Transitions P_h(·|s,a) = w(s,a) μ_1 + (1 − w(s,a)) μ_2 over three states.
HybridFamily low_rank_family(std::uint64_t seed, std::size_t n_transitions = 2,
                             std::size_t n_rewards = 2, std::size_t n_policies = 4);

// Fixed low-occupancy instance for the Alg 3 run: two transitions that send stage 0 to state 0
// with probability 0.9 or 0.1 whatever the action, then stay put; the stage-1 rewards depend
// on the state, so the two transitions disagree on every policy's value.
HybridFamily alg3_toy_family();

// Two candidate transitions and a random reward grid for the meta-policy run.
struct MetaToy {
  std::vector<Transition> transitions;
  std::vector<Reward> rewards;
};
MetaToy meta_toy(std::uint64_t seed, std::size_t n_rewards = 8);

// Instance kinds understood by make_game_instance.
std::vector<std::string> game_instance_kinds();
GameInstance make_game_instance(const std::string& kind, std::uint64_t seed);

}  // namespace declab
