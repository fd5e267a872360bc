#include "declab/game.hpp"

#include <algorithm>
#include <cmath>

#include "declab/errors.hpp"

namespace declab {

namespace {

std::vector<std::string> make_ids(const char* prefix, std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = prefix + std::to_string(i);
  return ids;
}

}  // namespace

FiniteGame::FiniteGame(std::vector<std::string> models, std::vector<std::string> policies,
                       std::vector<std::string> observations, Vec obs_dist, Vec value,
                       double row_tol)
    : models_(std::move(models)),
      policies_(std::move(policies)),
      observations_(std::move(observations)),
      obs_dist_(std::move(obs_dist)),
      value_(std::move(value)) {
  if (models_.empty() || policies_.empty() || observations_.empty()) {
    throw ValidationError("game: model, policy and observation sets must be nonempty");
  }
  const std::size_t nm = models_.size(), np = policies_.size(), no = observations_.size();
  if (obs_dist_.size() != nm * np * no) throw ValidationError("game: obs_dist has wrong size");
  if (value_.size() != nm * np) throw ValidationError("game: value table has wrong size");
  for (std::size_t m = 0; m < nm; ++m) {
    for (std::size_t pi = 0; pi < np; ++pi) {
      const double* row = obs_row(m, pi);
      double total = 0.0;
      for (std::size_t o = 0; o < no; ++o) {
        if (!(row[o] >= 0.0) || !std::isfinite(row[o])) {
          throw ValidationError("game: negative or non-finite observation probability", {m, pi, o});
        }
        total += row[o];
      }
      if (std::abs(total - 1.0) > row_tol) {
        throw ValidationError("game: obs_dist row does not sum to 1", {m, pi});
      }
      const double v = this->value(m, pi);
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("game: value outside [0,1]", {m, pi});
    }
  }
  optimal_.resize(nm);
  for (std::size_t m = 0; m < nm; ++m) {
    std::size_t best = 0;
    for (std::size_t pi = 1; pi < np; ++pi) {
      if (this->value(m, pi) > this->value(m, best)) best = pi;
    }
    optimal_[m] = best;
  }
}

FiniteGame FiniteGame::from_tables(std::size_t n_models, std::size_t n_policies,
                                   std::size_t n_obs, Vec obs_dist, Vec value, double row_tol) {
  return FiniteGame(make_ids("m", n_models), make_ids("p", n_policies), make_ids("o", n_obs),
                    std::move(obs_dist), std::move(value), row_tol);
}

Vec FiniteGame::obs_vec(std::size_t m, std::size_t pi) const {
  const double* row = obs_row(m, pi);
  return Vec(row, row + num_observations());
}

PartitionScheme::PartitionScheme(const FiniteGame& game, std::vector<std::vector<Element>> subsets)
    : n_policies_(game.num_policies()), subsets_(std::move(subsets)) {
  const std::size_t nm = game.num_models();
  lookup_.assign(nm * n_policies_, npos);
  std::vector<std::size_t> owner(nm * n_policies_, npos);
  for (std::size_t phi = 0; phi < subsets_.size(); ++phi) {
    if (subsets_[phi].empty()) throw ValidationError("partition: empty subset", {phi});
    for (const Element& el : subsets_[phi]) {
      if (el.model >= nm || el.policy >= n_policies_) {
        throw ValidationError("partition: element out of range", {phi});
      }
      const std::size_t key = el.model * n_policies_ + el.policy;
      if (owner[key] != npos) {
        if (owner[key] == phi) throw ValidationError("partition: repeated element", {phi});
        throw ValidationError("partition: overlapping subsets", {owner[key], phi});
      }
      owner[key] = phi;
    }
  }
  members_.resize(subsets_.size());
  for (std::size_t phi = 0; phi < subsets_.size(); ++phi) {
    for (const Element& el : subsets_[phi]) {
      const std::size_t e = elements_.size();
      elements_.push_back(el);
      subset_of_.push_back(phi);
      members_[phi].push_back(e);
      lookup_[el.model * n_policies_ + el.policy] = e;
    }
  }
}

std::size_t PartitionScheme::find(std::size_t m, std::size_t pi) const {
  const std::size_t key = m * n_policies_ + pi;
  return key < lookup_.size() ? lookup_[key] : npos;
}

std::size_t PartitionScheme::find_subset(std::size_t m, std::size_t pi) const {
  const std::size_t e = find(m, pi);
  return e == npos ? npos : subset_of_[e];
}

PartitionKind parse_partition_kind(const std::string& name) {
  if (name == "per_policy") return PartitionKind::per_policy;
  if (name == "per_model_optimal") return PartitionKind::per_model_optimal;
  if (name == "custom") return PartitionKind::custom;
  throw Error("unknown partition kind: " + name);
}

std::string to_string(PartitionKind kind) {
  switch (kind) {
    case PartitionKind::per_policy: return "per_policy";
    case PartitionKind::per_model_optimal: return "per_model_optimal";
    case PartitionKind::custom: return "custom";
  }
  return "custom";
}

PartitionScheme make_standard_partitions(const FiniteGame& game, PartitionKind kind,
                                         const std::vector<std::vector<Element>>& custom) {
  std::vector<std::vector<Element>> subsets;
  switch (kind) {
    case PartitionKind::per_policy:
      for (std::size_t pi = 0; pi < game.num_policies(); ++pi) {
        std::vector<Element> phi;
        for (std::size_t m = 0; m < game.num_models(); ++m) phi.push_back({m, pi});
        subsets.push_back(std::move(phi));
      }
      break;
    case PartitionKind::per_model_optimal:
      for (std::size_t m = 0; m < game.num_models(); ++m) {
        subsets.push_back({Element{m, game.optimal_policy(m)}});
      }
      break;
    case PartitionKind::custom:
      subsets = custom;
      break;
  }
  return PartitionScheme(game, std::move(subsets));
}

PartitionScheme make_product_partitions(const FiniteGame& game,
                                        const std::vector<std::vector<std::size_t>>& theta) {
  std::vector<std::vector<Element>> subsets;
  for (const auto& group : theta) {
    for (std::size_t pi = 0; pi < game.num_policies(); ++pi) {
      std::vector<Element> phi;
      for (std::size_t m : group) phi.push_back({m, pi});
      subsets.push_back(std::move(phi));
    }
  }
  return PartitionScheme(game, std::move(subsets));
}

Belief Belief::uniform(std::size_t n) {
  if (n == 0) throw Error("belief over an empty support");
  return from_log_weights(Vec(n, 0.0));
}

Belief Belief::from_probs(const Vec& probs) {
  Vec logs(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] < 0.0 || !std::isfinite(probs[i])) {
      throw ValidationError("belief: negative or non-finite weight", {i});
    }
    logs[i] = probs[i] > 0.0 ? std::log(probs[i]) : -std::numeric_limits<double>::infinity();
  }
  return from_log_weights(logs);
}

Belief Belief::from_log_weights(const Vec& log_weights) {
  if (log_weights.empty()) throw Error("belief over an empty support");
  const double z = log_sum_exp(log_weights);
  if (!std::isfinite(z)) throw Error("belief: no positive weight");
  Belief b;
  b.log_probs_.resize(log_weights.size());
  b.probs_.resize(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    b.log_probs_[i] = log_weights[i] - z;
    b.probs_[i] = std::exp(b.log_probs_[i]);
  }
  return b;
}

Belief posterior_over_partitions(const Belief& nu, const PartitionScheme& scheme,
                                 const FiniteGame& game, std::size_t pi, std::size_t o) {
  if (nu.size() != scheme.num_elements()) throw Error("posterior: belief does not cover Ψ");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Vec log_joint(scheme.num_subsets(), neg_inf);
  Vec terms;
  for (std::size_t phi = 0; phi < scheme.num_subsets(); ++phi) {
    terms.clear();
    for (std::size_t e : scheme.members(phi)) {
      const double lik = game.obs(scheme.element(e).model, pi, o);
      if (lik > 0.0 && nu.prob(e) > 0.0) terms.push_back(nu.log_prob(e) + std::log(lik));
    }
    if (!terms.empty()) log_joint[phi] = log_sum_exp(terms);
  }
  if (!std::isfinite(log_sum_exp(log_joint))) throw ImpossibleObservation(pi, o);
  return Belief::from_log_weights(log_joint);
}

MarginalConditional marginal_and_conditional(const Belief& nu, const PartitionScheme& scheme) {
  if (nu.size() != scheme.num_elements()) throw Error("marginal: belief does not cover Ψ");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  MarginalConditional out;
  Vec log_marginal(scheme.num_subsets(), neg_inf);
  out.conditional.resize(scheme.num_subsets());
  out.zero_mass.assign(scheme.num_subsets(), true);
  Vec logs;
  for (std::size_t phi = 0; phi < scheme.num_subsets(); ++phi) {
    logs.clear();
    for (std::size_t e : scheme.members(phi)) logs.push_back(nu.log_prob(e));
    log_marginal[phi] = log_sum_exp(logs);
    if (std::isfinite(log_marginal[phi])) {
      out.zero_mass[phi] = false;
      out.conditional[phi] = Belief::from_log_weights(logs);
    }
  }
  out.marginal = Belief::from_log_weights(log_marginal);
  return out;
}

Vec mixture_obs(const FiniteGame& game, const Vec& model_weights, std::size_t pi) {
  if (model_weights.size() != game.num_models()) throw Error("mixture_obs: weight dimension");
  Vec out(game.num_observations(), 0.0);
  for (std::size_t m = 0; m < game.num_models(); ++m) {
    if (model_weights[m] == 0.0) continue;
    const double* row = game.obs_row(m, pi);
    for (std::size_t o = 0; o < out.size(); ++o) out[o] += model_weights[m] * row[o];
  }
  return out;
}

Vec model_marginal(const FiniteGame& game, const PartitionScheme& scheme, const Vec& nu) {
  Vec w(game.num_models(), 0.0);
  for (std::size_t e = 0; e < scheme.num_elements(); ++e) w[scheme.element(e).model] += nu[e];
  return w;
}

Vec mixture_obs(const FiniteGame& game, const PartitionScheme& scheme, const Belief& nu,
                std::size_t pi) {
  return mixture_obs(game, model_marginal(game, scheme, nu.probs()), pi);
}

}  // namespace declab
