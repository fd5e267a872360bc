#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "declab/game.hpp"
#include "declab/simplex.hpp"

namespace declab {

// f(p, y) = Σ_π p_π g_π(y), linear in p (minimizer) and concave in y (maximizer).
class SaddleObjective {
 public:
  virtual ~SaddleObjective() = default;
  virtual std::size_t num_policies() const = 0;
  virtual std::size_t num_max() const = 0;
  // Fills g[π] = g_π(y); when grad is non-null also ∇_y Σ_π p_π g_π(y).
  virtual void evaluate(const Vec& p, const Vec& y, Vec& g, Vec* grad) const = 0;

  double value(const Vec& p, const Vec& y) const;
  Vec policy_values(const Vec& y) const;
  Vec gradient(const Vec& p, const Vec& y) const;
};

using Matrix = std::vector<Vec>;

// Payoff A[π][j] paid by the minimizer.
class BilinearObjective : public SaddleObjective {
 public:
  explicit BilinearObjective(Matrix a);
  std::size_t num_policies() const override { return a_.size(); }
  std::size_t num_max() const override { return cols_; }
  void evaluate(const Vec& p, const Vec& y, Vec& g, Vec* grad) const override;
  const Matrix& matrix() const { return a_; }

 private:
  Matrix a_;
  std::size_t cols_;
};

// Shared machinery of AIR-type objectives: a belief over "elements", each carrying a model
// and a group; the information term is E_o KL(group posterior, ρ).
class PosteriorObjective : public SaddleObjective {
 public:
  PosteriorObjective(const FiniteGame& game, std::vector<std::size_t> element_model,
                     std::vector<std::size_t> element_group, Matrix regret, Vec rho, double eta);
  std::size_t num_policies() const override { return n_policies_; }
  std::size_t num_max() const override { return element_model_.size(); }
  void evaluate(const Vec& p, const Vec& y, Vec& g, Vec* grad) const override;

  struct Terms {
    double value = 0.0;
    double regret = 0.0;
    double information_gain = 0.0;  // E KL(posterior, prior marginal)
    double regularization = 0.0;    // KL(prior marginal, ρ)
  };
  Terms terms(const Vec& p, const Vec& y) const;
  const Vec& rho() const { return rho_; }
  double eta() const { return eta_; }
  std::size_t num_groups() const { return rho_.size(); }
  const std::vector<std::size_t>& element_group() const { return element_group_; }

 private:
  std::size_t n_policies_;
  std::size_t n_obs_;
  std::vector<std::size_t> element_model_;
  std::vector<std::size_t> element_group_;
  Matrix regret_;  // [π][e]
  Vec lik_;        // [π][o][e]
  Vec rho_;
  double eta_;
};

enum class ObjectiveKind { air_phi, info_air, bilinear };

struct SaddleProblem {
  ObjectiveKind kind = ObjectiveKind::air_phi;
  const FiniteGame* game = nullptr;
  const PartitionScheme* scheme = nullptr;  // AIR^Φ
  std::vector<std::vector<std::size_t>> theta;  // InfoAIR model groups
  std::vector<std::size_t> meta_policy;         // InfoAIR π^θ per group
  Vec rho;
  double eta = 1.0;
  double smoothing = 1e-12;
  Matrix payoff;  // bilinear
};

std::unique_ptr<SaddleObjective> make_objective(const SaddleProblem& problem);
std::unique_ptr<PosteriorObjective> make_air_phi(const FiniteGame& game,
                                                 const PartitionScheme& scheme, const Vec& rho,
                                                 double eta, double smoothing = 1e-12);
std::unique_ptr<PosteriorObjective> make_info_air(const FiniteGame& game,
                                                  const std::vector<std::vector<std::size_t>>& theta,
                                                  const std::vector<std::size_t>& meta_policy,
                                                  const Vec& rho, double eta,
                                                  double smoothing = 1e-12);

using AirTerms = PosteriorObjective::Terms;
AirTerms eval_air_phi(const Vec& p, const Vec& nu, const SaddleProblem& problem);

enum class SaddleMethod { mwu, best_response, extragradient, cutting_plane };
SaddleMethod parse_saddle_method(const std::string& name);

struct SaddleOptions {
  double tol = 1e-3;
  int max_iters = 50000;
  SaddleMethod method = SaddleMethod::cutting_plane;
  double step_scale = 1.0;
  int refine_iters = 50;
  Vec p0;  // optional warm start
  Vec y0;
};

struct GapCertificate {
  double lower = 0.0;  // min_π g_π(y)
  double upper = 0.0;  // certified bound on max_y f(p, y)
  double gap = 0.0;
  Vec best_response_y;
  std::size_t best_response_policy = 0;
};

// Recomputes the duality gap of (p, y) from the objective alone.
GapCertificate certify_gap(const SaddleObjective& obj, const Vec& p, const Vec& y,
                           int refine_iters = 50, double target = 0.0);
// Upper bound on max_y f(p, y) valid for concave f: f(p,z) + max_j ∇_j − ⟨∇, z⟩.
double frank_wolfe_bound(const SaddleObjective& obj, const Vec& p, const Vec& z);

struct SaddleSolution {
  Vec p;
  Vec nu;
  double value = 0.0;  // f(p, ν)
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
  int iters = 0;
  bool converged = false;
};

// Bilinear objectives are solved exactly as a linear program.
SaddleSolution solve(const SaddleObjective& obj, const SaddleOptions& options = {});
SaddleSolution solve(const SaddleProblem& problem, const SaddleOptions& options = {});

// Exact min_p max_j (Aᵀp)_j by the simplex method with Bland's rule.
SaddleSolution solve_matrix_game(const Matrix& a);

// Outer maximization of r ↦ max_y min_p f_r(p, y) by the monotone fixed point
// r ← next(maximizer), restarted from the uniform point, seeded Dirichlet draws and the
// best-screened candidate seeds.
struct AscentOptions {
  int multistarts = 32;
  int max_outer = 60;
  std::uint64_t seed = 0;
  std::size_t grid_budget = 200;  // model-mixture grid points screened
  int grid_refine = 4;            // screened seeds that are ascended from
  double screen_tol = 1e-3;
};

struct AscentResult {
  double value = 0.0;  // best certified lower value over all starts
  double upper = 0.0;  // inner certificate upper end at the best reference
  Vec reference;
  SaddleSolution solution;
  Vec start_values;
  int outer_iters = 0;
};

using InnerSolve = std::function<SaddleSolution(const Vec& reference, const SaddleOptions&)>;
using NextReference = std::function<Vec(const SaddleSolution&)>;

AscentResult fixed_point_ascent(std::size_t dim, const InnerSolve& inner, const NextReference& next,
                                const SaddleOptions& options, const AscentOptions& ascent,
                                const std::vector<Vec>& seeds = {});

using WorstCaseReference = AscentResult;

// max_ρ max_ν min_p AIR^Φ via ρ ← marginal over Φ of the maximizing ν.
WorstCaseReference worst_case_reference(const FiniteGame& game, const PartitionScheme& scheme,
                                        double eta, const SaddleOptions& options = {},
                                        const AscentOptions& ascent = {},
                                        std::size_t cap = 10000);

}  // namespace declab
