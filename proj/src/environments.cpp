#include "declab/environments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "declab/errors.hpp"

namespace declab {

FeedbackKind parse_feedback_kind(const std::string& name) {
  if (name == "bandit_trajectory") return FeedbackKind::bandit_trajectory;
  if (name == "full_info_reward") return FeedbackKind::full_info_reward;
  if (name == "full_info_models") return FeedbackKind::full_info_models;
  throw Error("unknown feedback kind: " + name);
}

AdversaryKind parse_adversary_kind(const std::string& name) {
  if (name == "iid") return AdversaryKind::iid;
  if (name == "oblivious") return AdversaryKind::oblivious;
  if (name == "adaptive_worst_round") return AdversaryKind::adaptive_worst_round;
  throw Error("unknown adversary kind: " + name);
}

std::string to_string(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::bandit_trajectory: return "bandit_trajectory";
    case FeedbackKind::full_info_reward: return "full_info_reward";
    case FeedbackKind::full_info_models: return "full_info_models";
  }
  return "bandit_trajectory";
}

std::string to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::iid: return "iid";
    case AdversaryKind::oblivious: return "oblivious";
    case AdversaryKind::adaptive_worst_round: return "adaptive_worst_round";
  }
  return "iid";
}

namespace {

std::vector<std::size_t> resolve_choices(const AdversarySpec& spec, std::size_t n,
                                         const char* who) {
  std::vector<std::size_t> choices = spec.grid;
  if (choices.empty()) {
    choices.resize(n);
    std::iota(choices.begin(), choices.end(), std::size_t{0});
  }
  for (std::size_t c : choices) {
    if (c >= n) throw ValidationError(std::string(who) + ": adversary grid entry out of range", {c});
  }
  if (!spec.weights.empty() && spec.weights.size() != choices.size()) {
    throw ValidationError(std::string(who) + ": adversary weights do not match its grid");
  }
  if (spec.kind == AdversaryKind::oblivious) {
    if (spec.schedule.empty()) throw ValidationError(std::string(who) + ": empty oblivious schedule");
    for (std::size_t s : spec.schedule) {
      if (s >= choices.size()) throw ValidationError(std::string(who) + ": schedule entry out of range", {s});
    }
  }
  return choices;
}

std::size_t draw_choice(const AdversarySpec& spec, std::size_t n_choices, std::size_t round,
                        Rng& rng) {
  if (spec.kind == AdversaryKind::oblivious) return spec.schedule[round % spec.schedule.size()];
  if (spec.weights.empty()) return rng.index(n_choices);
  return rng.categorical(normalized(spec.weights));
}

}  // namespace

GameEnvironment::GameEnvironment(const FiniteGame& game, const PartitionScheme& scheme,
                                 std::size_t committed, AdversarySpec adversary,
                                 std::uint64_t seed)
    : game_(&game),
      scheme_(&scheme),
      committed_(committed),
      adversary_(std::move(adversary)),
      noise_(Rng(seed).split(2)),
      adversary_rng_(Rng(mix_seed(seed, adversary_.seed)).split(3)) {
  if (committed_ >= scheme.num_subsets()) throw ValidationError("environment: φ⋆ out of range");
  const auto& members = scheme.members(committed_);
  for (std::size_t c : resolve_choices(adversary_, members.size(), "environment")) {
    choices_.push_back(members[c]);
  }
}

std::size_t GameEnvironment::choose(const Vec& p) {
  if (adversary_.kind != AdversaryKind::adaptive_worst_round) {
    return choices_[draw_choice(adversary_, choices_.size(), round_, adversary_rng_)];
  }
  if (p.size() != game_->num_policies()) {
    throw Error("environment: adaptive adversary needs the learner's distribution");
  }
  std::size_t best = choices_.front();
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t e : choices_) {
    const Element& el = scheme_->element(e);
    double v = 0.0;
    for (std::size_t pi = 0; pi < p.size(); ++pi) {
      v += p[pi] * (game_->value(el.model, el.policy) - game_->value(el.model, pi));
    }
    if (v > best_value) {
      best_value = v;
      best = e;
    }
  }
  return best;
}

GameEnvironment::Outcome GameEnvironment::step(std::size_t pi, const Vec& p) {
  if (pi >= game_->num_policies()) throw ValidationError("environment: policy out of range", {pi});
  Outcome out;
  out.element = choose(p);
  if (scheme_->subset_of(out.element) != committed_) {
    throw AssertionFailure("environment: adversary left its committed subset");
  }
  const Element& el = scheme_->element(out.element);
  out.o = noise_.categorical(game_->obs_vec(el.model, pi));
  out.regret_increment = game_->value(el.model, el.policy) - game_->value(el.model, pi);
  ++round_;
  return out;
}

HybridEnvironment::HybridEnvironment(std::vector<Transition> candidates, std::size_t theta_star,
                                     std::vector<Reward> rewards, AdversarySpec adversary,
                                     FeedbackKind feedback, StagePolicy comparator,
                                     std::uint64_t seed)
    : candidates_(std::move(candidates)),
      theta_star_(theta_star),
      rewards_(std::move(rewards)),
      adversary_(std::move(adversary)),
      feedback_(feedback),
      comparator_(std::move(comparator)),
      noise_(Rng(seed).split(2)),
      adversary_rng_(Rng(mix_seed(seed, adversary_.seed)).split(3)) {
  if (theta_star_ >= candidates_.size()) throw ValidationError("hybrid environment: θ⋆ out of range");
  if (rewards_.empty()) throw ValidationError("hybrid environment: empty reward grid");
  for (const Transition& t : candidates_) t.validate(1e-9);
  for (const Reward& r : rewards_) TabularMDP{candidates_[theta_star_], r}.validate(1e-9);
  comparator_.validate(1e-9);
  choices_ = resolve_choices(adversary_, rewards_.size(), "hybrid environment");
}

std::size_t HybridEnvironment::choose(const std::vector<StagePolicy>& policies, const Vec& p) {
  if (adversary_.kind != AdversaryKind::adaptive_worst_round) {
    return choices_[draw_choice(adversary_, choices_.size(), round_, adversary_rng_)];
  }
  if (policies.empty() || policies.size() != p.size()) {
    throw Error("hybrid environment: adaptive adversary needs the learner's distribution");
  }
  const Transition& P = candidates_[theta_star_];
  std::size_t best = choices_.front();
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t r : choices_) {
    double v = dp_eval(P, rewards_[r], comparator_).value;
    for (std::size_t i = 0; i < policies.size(); ++i) {
      if (p[i] != 0.0) v -= p[i] * dp_eval(P, rewards_[r], policies[i]).value;
    }
    if (v > best_value) {
      best_value = v;
      best = r;
    }
  }
  return best;
}

HybridEnvironment::Outcome HybridEnvironment::step(const StagePolicy& played,
                                                   const std::vector<StagePolicy>& policies,
                                                   const Vec& p) {
  Outcome out;
  out.reward_index = choose(policies, p);
  out.transition_index = theta_star_;
  if (last_transition_ && *last_transition_ != out.transition_index) {
    throw AssertionFailure("hybrid environment: transition changed between rounds");
  }
  last_transition_ = out.transition_index;
  const Transition& P = candidates_[out.transition_index];
  const Reward& R = rewards_[out.reward_index];
  if (feedback_ == FeedbackKind::bandit_trajectory) {
    out.steps = sample_trajectory(P, played, noise_, &R, &out.reward_bits);
  } else {
    out.steps = sample_trajectory(P, played, noise_);
    out.reward = R;
  }
  out.value = dp_eval(P, R, played).value;
  out.regret_increment = dp_eval(P, R, comparator_).value - out.value;
  ++round_;
  return out;
}

std::vector<std::array<std::size_t, 3>> sample_trajectory(const Transition& P, const StagePolicy& pi,
                                                          Rng& rng, const Reward* reward,
                                                          std::vector<std::size_t>* bits) {
  std::vector<std::array<std::size_t, 3>> steps(P.H);
  if (bits != nullptr) bits->assign(P.H, 0);
  Vec row(P.A);
  std::size_t s = P.s1;
  for (std::size_t h = 0; h < P.H; ++h) {
    for (std::size_t a = 0; a < P.A; ++a) row[a] = pi(h, s, a);
    const std::size_t a = rng.categorical(row);
    if (reward != nullptr && bits != nullptr) {
      (*bits)[h] = rng.uniform() < reward->r(h, s, a) ? 1 : 0;
    }
    const double* next = P.row(h, s, a);
    const std::size_t s2 = rng.categorical(Vec(next, next + P.S));
    steps[h] = {s, a, s2};
    s = s2;
  }
  return steps;
}

std::vector<Reward> convexify_rewards(const std::vector<Reward>& grid, int depth,
                                      std::size_t cap) {
  if (depth < 0) throw ValidationError("convexify_rewards: negative depth");
  std::vector<Reward> out;
  auto contains = [&](const Reward& r) {
    for (const Reward& q : out) {
      double diff = 0.0;
      for (std::size_t i = 0; i < r.R.size(); ++i) diff = std::max(diff, std::abs(r.R[i] - q.R[i]));
      if (diff <= 1e-12) return true;
    }
    return false;
  };
  for (const Reward& r : grid) {
    if (!out.empty() && r.R.size() != out.front().R.size()) {
      throw ValidationError("convexify_rewards: rewards differ in shape");
    }
    if (!contains(r)) out.push_back(r);
  }
  for (int k = 0; k < depth; ++k) {
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        Reward mid = out[i];
        for (std::size_t c = 0; c < mid.R.size(); ++c) mid.R[c] = 0.5 * (out[i].R[c] + out[j].R[c]);
        if (contains(mid)) continue;
        out.push_back(std::move(mid));
        if (out.size() > cap) {
          throw CapExceeded("convexify_rewards: closure exceeds " + std::to_string(cap) + " rewards");
        }
      }
    }
  }
  return out;
}

}  // namespace declab
