#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "declab/embedding.hpp"
#include "declab/game.hpp"
#include "declab/mdp.hpp"
#include "declab/rng.hpp"
#include "declab/saddle.hpp"

namespace declab {

// log w + γ g, renormalized; throws ValidationError when max γ·g exceeds 1.
Vec exp_weights_step(const Vec& log_weights, const Vec& gains, double rate);

struct ExpWeightsRun {
  double regret = 0.0;  // max_p Σ_t ⟨g_t, p − p_t⟩
  double bound = 0.0;   // log|Π|/γ + γ Σ_t Σ_π p_t(π) g_t(π)²
  bool holds() const { return regret <= bound; }
};

ExpWeightsRun run_exp_weights(const std::vector<Vec>& gains, double rate);

struct RoundRecord {
  std::size_t t = 0;
  std::size_t pi = 0;
  std::size_t o = 0;
  double regret_increment = 0.0;
  double rho_entropy = 0.0;
  double saddle_value = 0.0;
  double gap = 0.0;
};

struct LearnerState {
  std::size_t t = 0;  // rounds completed
  Belief rho;
  SaddleSolution last;
  Rng rng;
  std::vector<RoundRecord> history;
  std::optional<std::size_t> pending_policy;  // π_t awaiting its observation
  std::vector<std::size_t> pending_meta;      // π_t^Θ of the pending round (Alg 2)

  static LearnerState start(std::size_t n_groups, std::uint64_t seed);
};

// Folds in the previous round's observation (ρ ← ν(·|π, o)), then solves the AIR^Φ saddle for
// ρ_t and samples π_t. Errors carry the round index.
std::size_t alg1_step(LearnerState& state, const PartitionScheme& scheme, const FiniteGame& game,
                      double eta, std::optional<std::size_t> observation,
                      const SaddleOptions& options = {});

// Same for InfoAIR over the model groups Θ with the revealed meta-policy π_t^Θ.
std::size_t alg2_step(LearnerState& state, const std::vector<std::vector<std::size_t>>& theta,
                      const FiniteGame& game, double eta,
                      const std::vector<std::size_t>& meta_policy,
                      std::optional<std::size_t> observation, const SaddleOptions& options = {});

// Records the regret increment of the round just played (ground truth from the environment).
void record_round(LearnerState& state, std::size_t o, double regret_increment);

// π_t^θ(a|s) ∝ exp(γ Σ_{i<t} Q^{π_i^θ}_h(s,a; M_i^θ)) for each candidate transition θ.
class SimultaneousMetaPolicy {
 public:
  SimultaneousMetaPolicy(std::vector<Transition> transitions, double gamma);
  std::size_t size() const { return transitions_.size(); }
  const StagePolicy& policy(std::size_t theta) const { return policies_.at(theta); }
  // Full-information update with the revealed reward; returns each θ's played value.
  Vec update(const Reward& reward);

 private:
  std::vector<Transition> transitions_;
  double gamma_;
  std::vector<Vec> cumulative_q_;
  std::vector<StagePolicy> policies_;
};

// Tables of the optimistic program over M = 𝒫×ℛ (model j = transition·|ℛ| + reward), for a
// learner policy list that may differ from the comparator policies.
struct OdecTables {
  std::size_t n_policies = 0, n_phi = 0, n_models = 0;
  Vec value;       // V_{P,R}(π′), [π′][j]
  Vec predicted;   // f^φ(π^φ; R), [φ][j]
  Vec divergence;  // D^{π′}_bi(φ‖P,R), [π′][φ][j]

  Matrix payoff(const Vec& rho, double divergence_scale) const;
};

OdecTables odec_tables(const BilinearEmbedding& emb, const std::vector<StagePolicy>& policies);

// Learner policies for the ODEC program: Π itself for est = id, else the per-step mixtures
// of each π with est(π) on an α grid.
std::vector<StagePolicy> odec_policies(const BilinearEmbedding& emb);

struct OdecResult {
  double value = 0.0;  // largest certified upper end of min_p max_j over the searched ρ
  double lower = 0.0;  // largest certified lower end
  double bound = 0.0;
  Vec rho;
  bool passed = false;
};

OdecResult odec_bound_check(const BilinearEmbedding& emb, double eta, double tol = 1e-3,
                            std::uint64_t seed = 0, int restarts = 16);

struct EpochData {
  std::size_t policy = 0;
  // Per episode: H observed steps (s, a, s').
  std::vector<std::vector<std::array<std::size_t, 3>>> trajectories;
  std::vector<Reward> rewards;  // R_k^i per episode
};

struct Alg3State {
  std::size_t k = 0;  // epochs completed
  Vec log_rho;
  Vec p;
  std::size_t policy = 0;
  double saddle_value = 0.0;
  double gap = 0.0;
  Rng rng;
};

struct Alg3Options {
  double gamma = 0.0;
  double eta = 0.0;
  double loss_bound = 0.0;  // L; computed from the embedding when zero
  SaddleOptions saddle;
  bool check_premise = true;
};

// Theorem tunings: η = L d^{-1/2} log(|Φ|/δ)^{1/2} T^{-1/4}, τ = √T,
// γ = min{η √(log|Φ|/K), 1/(4η + 4HL²)}.
struct Alg3Tuning {
  double eta = 0.0;
  double gamma = 0.0;
  std::size_t tau = 0;
  double loss_bound = 0.0;
};
Alg3Tuning alg3_tuning(const BilinearEmbedding& emb, std::size_t T, double delta = 0.1);

Alg3State alg3_start(const BilinearEmbedding& emb, const OdecTables& tables, double eta,
                     const SaddleOptions& options, std::uint64_t seed);
// ρ update from the epoch's data, then the optimistic minimax for p_{k+1} and a draw of π_{k+1}.
void alg3_epoch(Alg3State& state, const BilinearEmbedding& emb, const OdecTables& tables,
                const EpochData& data, const Alg3Options& options);

}  // namespace declab
