#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "declab/game.hpp"
#include "declab/rng.hpp"
#include "declab/simplex.hpp"

namespace declab {

// Stage-indexed transition kernel; P is flat over (h, s, a, s').
struct Transition {
  std::size_t S = 0, A = 0, H = 0, s1 = 0;
  Vec P;

  double p(std::size_t h, std::size_t s, std::size_t a, std::size_t s2) const {
    return P[((h * S + s) * A + a) * S + s2];
  }
  const double* row(std::size_t h, std::size_t s, std::size_t a) const {
    return P.data() + ((h * S + s) * A + a) * S;
  }
  void validate(double tol = 1e-12) const;
  static Transition random(Rng& rng, std::size_t S, std::size_t A, std::size_t H,
                           double alpha = 1.0);
};

// Stage-indexed reward table, flat over (h, s, a).
struct Reward {
  std::size_t S = 0, A = 0, H = 0;
  Vec R;

  double r(std::size_t h, std::size_t s, std::size_t a) const { return R[(h * S + s) * A + a]; }
  void validate() const;
  // Entries uniform in [lo, hi]/H so every trajectory collects at most hi.
  static Reward random(Rng& rng, std::size_t S, std::size_t A, std::size_t H, double lo = 0.0,
                       double hi = 1.0);
};

struct TabularMDP {
  Transition transition;
  Reward reward;

  std::size_t S() const { return transition.S; }
  std::size_t A() const { return transition.A; }
  std::size_t H() const { return transition.H; }
  // Rows sum to one, rewards in [0,1] and max_π V^π ≤ 1 from every stage-0 state.
  void validate(double tol = 1e-12) const;
};

// Markov policy π_h(a|s), flat over (h, s, a).
struct StagePolicy {
  std::size_t S = 0, A = 0, H = 0;
  Vec prob;

  double operator()(std::size_t h, std::size_t s, std::size_t a) const {
    return prob[(h * S + s) * A + a];
  }
  void validate(double tol = 1e-12) const;
  bool operator==(const StagePolicy&) const = default;

  static StagePolicy uniform(std::size_t S, std::size_t A, std::size_t H);
  // actions[h * S + s]
  static StagePolicy deterministic(std::size_t S, std::size_t A, std::size_t H,
                                   const std::vector<std::size_t>& actions);
  // Every deterministic Markov policy, in lexicographic order of the action table.
  static std::vector<StagePolicy> all_deterministic(std::size_t S, std::size_t A, std::size_t H);
};

// At each step independently: π with probability 1 − α/H, `other` otherwise.
StagePolicy mix_policy(const StagePolicy& pi, const StagePolicy& other, double alpha);
// π for steps before h, `other` at step h and after.
StagePolicy switch_policy(const StagePolicy& pi, const StagePolicy& other, std::size_t h);

struct Evaluation {
  Vec Q;  // (h, s, a)
  Vec V;  // (h, s) for h = 0..H, V_H = 0
  double value = 0.0;  // V_0(s1)

  double q(std::size_t h, std::size_t s, std::size_t a, std::size_t S, std::size_t A) const {
    return Q[(h * S + s) * A + a];
  }
};

// R_h(s,a) + Σ_s' P_h(s'|s,a) v_next(s').
double backup(const Transition& P, const Reward& R, std::size_t h, std::size_t s, std::size_t a,
              const double* v_next);

Evaluation dp_eval(const Transition& P, const Reward& R, const StagePolicy& pi);
Evaluation dp_eval(const TabularMDP& mdp, const StagePolicy& pi);

struct OptimalSolution {
  Evaluation eval;
  StagePolicy greedy;  // lowest-index maximizing action
};
OptimalSolution dp_optimal(const Transition& P, const Reward& R);

// d^π_h(s,a), flat over (h, s, a); each stage sums to one.
Vec occupancy(const Transition& P, const StagePolicy& pi);
// d^π_h(s), flat over (h, s).
Vec state_occupancy(const Transition& P, const StagePolicy& pi);

// |V(π′) − V(π) − Σ_h E_{s∼d^π_h}[Σ_a (π′−π)(a|s) Q^{π′}_h(s,a)]|
double pdl_check(const TabularMDP& mdp, const StagePolicy& pi, const StagePolicy& pi_prime);

// Trajectory ids enumerate (s_h, a_h[, b_h]) for h < H, with s_{H+1} dropped and b_h an
// optional Bernoulli(R_h(s_h,a_h)) reward bit; digit h has weight base^h.
struct TrajectoryCoding {
  std::size_t S = 0, A = 0, H = 0;
  bool reward_bits = false;

  std::size_t base() const { return S * A * (reward_bits ? 2 : 1); }
  std::size_t size() const;
  struct Step {
    std::size_t s = 0, a = 0, bit = 0;
  };
  std::vector<Step> decode(std::size_t id) const;
  std::size_t encode(const std::vector<Step>& steps) const;
};

TrajectoryCoding trajectory_coding(const TabularMDP& mdp, bool reward_bits,
                                   std::size_t cap = 1u << 16);
// Exact law over all ids of the coding; throws CapExceeded past `cap`.
Vec trajectory_law(const TabularMDP& mdp, const StagePolicy& pi, bool reward_bits = false,
                   std::size_t cap = 1u << 16);

// A family of MDPs against a policy list, as a game over the union of reachable trajectories.
struct MdpGame {
  FiniteGame game;
  TrajectoryCoding coding;
  std::vector<std::size_t> trajectory_ids;  // coding id per game observation
};

MdpGame make_mdp_game(const std::vector<TabularMDP>& models,
                      const std::vector<StagePolicy>& policies, bool reward_bits,
                      std::size_t cap = 1u << 16);

struct LinearQvSizes {
  std::size_t states = 2;
  std::size_t actions = 2;
  std::size_t variants = 2;  // models per (θ, w)
  std::size_t policies = 4;
  bool reward_bits = true;
  double mix = 0.3;          // largest transition perturbation for variants
  int max_resamples = 64;
};

struct LinearQvInstance {
  std::vector<TabularMDP> models;
  std::vector<StagePolicy> policies;
  std::vector<std::size_t> group;  // (θ, w) index of each model
  std::vector<std::size_t> group_policy;  // π_f per group
  Vec phi;  // φ_h(s,a) ∈ R^d, flat over (h, s, a, i)
  Vec psi;  // ψ_h(s) ∈ R^d, flat over (h, s, i), h = 0..H
  std::size_t d = 0;
  double residual = 0.0;  // max linearity residual against DP tables
  std::uint64_t seed_used = 0;
  MdpGame mdp_game;
  PartitionScheme scheme;
};

LinearQvInstance gen_linear_qv(std::uint64_t seed, std::size_t d, std::size_t H,
                               const LinearQvSizes& sizes = {});

}  // namespace declab
