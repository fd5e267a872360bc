#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "declab/simplex.hpp"

namespace declab {

// Finite decision-making game: models, policies, observation laws and values.
class FiniteGame {
 public:
  FiniteGame() = default;
  // obs_dist is row-major over (model, policy, observation); value over (model, policy).
  FiniteGame(std::vector<std::string> models, std::vector<std::string> policies,
             std::vector<std::string> observations, Vec obs_dist, Vec value,
             double row_tol = 1e-12);
  // Anonymous ids "m0", "p0", "o0", ...
  static FiniteGame from_tables(std::size_t n_models, std::size_t n_policies,
                                std::size_t n_obs, Vec obs_dist, Vec value,
                                double row_tol = 1e-12);

  std::size_t num_models() const { return models_.size(); }
  std::size_t num_policies() const { return policies_.size(); }
  std::size_t num_observations() const { return observations_.size(); }
  std::size_t size() const { return num_models() * num_policies() * num_observations(); }

  const std::vector<std::string>& model_ids() const { return models_; }
  const std::vector<std::string>& policy_ids() const { return policies_; }
  const std::vector<std::string>& observation_ids() const { return observations_; }

  double obs(std::size_t m, std::size_t pi, std::size_t o) const {
    return obs_dist_[(m * num_policies() + pi) * num_observations() + o];
  }
  const double* obs_row(std::size_t m, std::size_t pi) const {
    return obs_dist_.data() + (m * num_policies() + pi) * num_observations();
  }
  Vec obs_vec(std::size_t m, std::size_t pi) const;
  double value(std::size_t m, std::size_t pi) const { return value_[m * num_policies() + pi]; }
  // argmax_π V_M(π), lowest index on ties.
  std::size_t optimal_policy(std::size_t m) const { return optimal_[m]; }

  const Vec& obs_table() const { return obs_dist_; }
  const Vec& value_table() const { return value_; }

 private:
  std::vector<std::string> models_;
  std::vector<std::string> policies_;
  std::vector<std::string> observations_;
  Vec obs_dist_;
  Vec value_;
  std::vector<std::size_t> optimal_;
};

struct Element {
  std::size_t model = 0;
  std::size_t policy = 0;
  bool operator==(const Element&) const = default;
};

// Disjoint family Φ of subsets of M×Π; Ψ is their union, enumerated subset by subset.
class PartitionScheme {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  PartitionScheme() = default;
  // Validates nonempty, in-range and pairwise disjoint subsets.
  PartitionScheme(const FiniteGame& game, std::vector<std::vector<Element>> subsets);

  std::size_t num_subsets() const { return subsets_.size(); }
  std::size_t num_elements() const { return elements_.size(); }
  const std::vector<std::vector<Element>>& subsets() const { return subsets_; }
  const Element& element(std::size_t e) const { return elements_[e]; }
  const std::vector<Element>& elements() const { return elements_; }
  std::size_t subset_of(std::size_t e) const { return subset_of_[e]; }
  // Element indices of subset φ, ascending.
  const std::vector<std::size_t>& members(std::size_t phi) const { return members_[phi]; }
  // Element index of (m, π) or npos.
  std::size_t find(std::size_t m, std::size_t pi) const;
  std::size_t find_subset(std::size_t m, std::size_t pi) const;

 private:
  std::size_t n_policies_ = 0;
  std::vector<std::vector<Element>> subsets_;
  std::vector<Element> elements_;
  std::vector<std::size_t> subset_of_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> lookup_;
};

enum class PartitionKind { per_policy, per_model_optimal, custom };

PartitionKind parse_partition_kind(const std::string& name);
std::string to_string(PartitionKind kind);

PartitionScheme make_standard_partitions(const FiniteGame& game, PartitionKind kind,
                                         const std::vector<std::vector<Element>>& custom = {});
// Θ×Π: one subset per (θ, π) pairing every model of θ with π.
PartitionScheme make_product_partitions(const FiniteGame& game,
                                        const std::vector<std::vector<std::size_t>>& theta);

// Probability vector stored as log weights, normalized by log-sum-exp.
class Belief {
 public:
  Belief() = default;
  static Belief uniform(std::size_t n);
  static Belief from_probs(const Vec& probs);
  static Belief from_log_weights(const Vec& log_weights);

  std::size_t size() const { return log_probs_.size(); }
  double prob(std::size_t i) const { return probs_[i]; }
  double log_prob(std::size_t i) const { return log_probs_[i]; }
  const Vec& probs() const { return probs_; }
  const Vec& log_probs() const { return log_probs_; }

 private:
  Vec log_probs_;
  Vec probs_;
};

// ν(φ | π, o) for a belief ν over Ψ.
Belief posterior_over_partitions(const Belief& nu, const PartitionScheme& scheme,
                                 const FiniteGame& game, std::size_t pi, std::size_t o);

struct MarginalConditional {
  Belief marginal;                             // over Φ
  std::vector<std::optional<Belief>> conditional;  // over members(φ); absent on zero mass
  std::vector<bool> zero_mass;
};

MarginalConditional marginal_and_conditional(const Belief& nu, const PartitionScheme& scheme);

// E_{M∼w}[M(·|π)] for weights over models.
Vec mixture_obs(const FiniteGame& game, const Vec& model_weights, std::size_t pi);
// Same for a belief over Ψ (model marginal of ν).
Vec mixture_obs(const FiniteGame& game, const PartitionScheme& scheme, const Belief& nu,
                std::size_t pi);
Vec model_marginal(const FiniteGame& game, const PartitionScheme& scheme, const Vec& nu);

}  // namespace declab
