#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "declab/mdp.hpp"

namespace declab {

// Fixed transitions 𝒫, finite rewards ℛ and comparator policies Π; the model class is 𝒫×ℛ.
struct HybridFamily {
  std::vector<Transition> transitions;
  std::vector<Reward> rewards;
  std::vector<StagePolicy> policies;

  void validate() const;
};

// φ = (π, f) with f = Q^π under transition `transition`, taking the reward as input.
struct HybridFunction {
  std::size_t policy = 0;
  std::size_t transition = 0;
};

enum class EmbeddingKind { low_rank, low_occupancy };
EmbeddingKind parse_embedding_kind(const std::string& name);
std::string to_string(EmbeddingKind kind);

class BilinearEmbedding {
 public:
  // Factors the family at rank d and checks both bilinear identities on every
  // (π, f', R, P, h); throws AssertionFailure carrying the largest residual.
  BilinearEmbedding(EmbeddingKind kind, HybridFamily family, std::size_t d, double tol = 1e-9);

  EmbeddingKind kind() const { return kind_; }
  std::size_t dim() const { return d_; }
  std::size_t horizon() const { return H_; }
  const HybridFamily& family() const { return family_; }
  // Φ, with transitions inducing identical Q^π on every reward of ℛ merged.
  const std::vector<HybridFunction>& functions() const { return functions_; }
  std::size_t num_phi() const { return functions_.size(); }
  double identity_residual() const { return identity_residual_; }

  // f^φ(·,·;R), flat over (h, s, a).
  Vec f_table(std::size_t phi, const Reward& R) const;
  // f^φ(π^φ; R)
  double predicted_value(std::size_t phi, const Reward& R) const;
  // f_h(s,a) − R_h(s,a) − E_{s'∼P}E_{a'∼π^φ} f_{h+1}(s',a'), flat over (h, s, a).
  Vec residual(std::size_t phi, const Transition& P, const Reward& R) const;
  // ℓ^est_h(φ, (s,a,s'), R) for a table from f_table.
  double loss(std::size_t phi, const Vec& f, const Reward& R, std::size_t h, std::size_t s,
              std::size_t a, std::size_t s2) const;
  // E_{s'}[ℓ^est_h(φ, (s,a,s'), R)] under P, flat over (h, s, a).
  Vec expected_loss(std::size_t phi, const Transition& P, const Reward& R) const;

  StagePolicy est_policy(const StagePolicy& pi) const;
  Vec X(std::size_t h, std::size_t policy, std::size_t transition) const;
  Vec W(std::size_t h, std::size_t phi, const Reward& R, std::size_t transition) const;
  // Largest |ℓ^est| over Φ, ℛ, 𝒫 and observed steps.
  double loss_bound() const;

 private:
  void factor();
  void check_identities(double tol);

  EmbeddingKind kind_;
  HybridFamily family_;
  std::size_t d_;
  std::size_t S_, A_, H_;
  std::vector<HybridFunction> functions_;
  // [transition][h] factors: low_occupancy X over policies, ψ over (s,a); low_rank φ over
  // (s,a) of stage h−1 and ψ over s.
  std::vector<std::vector<Vec>> left_;
  std::vector<std::vector<Vec>> right_;
  double identity_residual_ = 0.0;
};

// Σ_h (E^{π,P}[ℓ^est_h(φ, o_h, R)])², exact via occupancy.
double bilinear_divergence(const BilinearEmbedding& emb, const StagePolicy& pi, std::size_t phi,
                           const Transition& P, const Reward& R);

}  // namespace declab
