#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "declab/game.hpp"
#include "declab/saddle.hpp"

namespace declab {

// For fixed reference M̄ = M^μ: E_ν[V_M(π⋆) − V_M(π)] − (1/η) E_{φ∼ν} KL(M^{ν(·|φ)}(·|π), M̄(·|π)).
class DecPhiObjective : public SaddleObjective {
 public:
  DecPhiObjective(const FiniteGame& game, const PartitionScheme& scheme, const Vec& mu, double eta,
                  double smoothing = 1e-12);
  std::size_t num_policies() const override { return n_policies_; }
  std::size_t num_max() const override { return element_group_.size(); }
  void evaluate(const Vec& p, const Vec& y, Vec& g, Vec* grad) const override;

 private:
  std::size_t n_policies_;
  std::size_t n_obs_;
  std::size_t n_groups_;
  std::vector<std::size_t> element_group_;
  Matrix regret_;  // [π][e]
  Vec lik_;        // [π][o][e]
  Vec log_ref_;    // [π][o] log M̄(o|π)
  double eta_;
};

// Payoff of the fixed-reference program of the offset DEC over models with comparator π_M.
Matrix dec_kl_payoff(const FiniteGame& game, const Vec& mu, double eta, double smoothing = 1e-12);

struct ComplexityOptions {
  SaddleOptions saddle;
  AscentOptions ascent;
  int closure_depth = 6;
  std::size_t cap = 10000;
  std::size_t closure_cap = 4096;
};

struct DecResult {
  double value = 0.0;  // certified lower value at the best reference
  double gap = 0.0;    // inner duality gap at that reference
  Vec mu;              // best reference mixture weights over models
  Vec start_values;
  bool converged = false;
};

DecResult dec_kl(const FiniteGame& game, double eta, const ComplexityOptions& options = {});
DecResult dec_kl_phi(const FiniteGame& game, const PartitionScheme& scheme, double eta,
                     const ComplexityOptions& options = {});
// max_ρ max_ν min_p AIR^Φ, reported in the same shape.
DecResult maxmin_air(const FiniteGame& game, const PartitionScheme& scheme, double eta,
                     const ComplexityOptions& options = {});

struct CPhiResult {
  double value = 0.0;
  std::size_t subset = 0;
  Vec nu;       // maximizing belief within the subset
  Vec per_subset;
};

CPhiResult c_phi(const FiniteGame& game, const PartitionScheme& scheme, double tol = 1e-3);

// Models of ∪_φ co(models of φ), with each hull replaced by its dyadic grid at resolution 2^-depth.
struct ConvexifiedGame {
  FiniteGame game;
  Matrix weights;  // per new model, mixture weights over the original models
  int depth = 0;
};

ConvexifiedGame convexify_game(const FiniteGame& game, const PartitionScheme& scheme, int depth,
                               std::size_t cap = 4096);

// True when every subset pairs one model set with one policy and Φ = Θ×Π for those sets.
bool is_product_scheme(const FiniteGame& game, const PartitionScheme& scheme);
bool is_fixed_comparator(const PartitionScheme& scheme);

struct LemmaCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct ComplexityReport {
  double eta = 0.0;
  double dec_kl = 0.0;
  double dec_kl_phi = 0.0;
  double maxmin_air = 0.0;
  double c_phi = 0.0;
  double dec_convexified = 0.0;
  double gap_dec_kl = 0.0;
  double gap_dec_kl_phi = 0.0;
  double gap_maxmin_air = 0.0;
  double gap_convexified = 0.0;
  double tol = 0.0;
  int closure_depth = 0;
  std::vector<LemmaCheck> checks;
  bool passed() const;
};

ComplexityReport verify_lemma_suite(const FiniteGame& game, const PartitionScheme& scheme,
                                    double eta, const ComplexityOptions& options = {});

struct BoundCheck {
  double value = 0.0;
  double bound = 0.0;
  double gap = 0.0;
  bool passed = false;
};

// DEC of the convexified class of a linear Q⋆/V⋆ family against 4ηdH².
BoundCheck linear_qv_bound_check(const FiniteGame& game, const PartitionScheme& scheme, int d,
                                 int horizon, double eta, const ComplexityOptions& options = {});

}  // namespace declab
