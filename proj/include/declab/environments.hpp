#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "declab/game.hpp"
#include "declab/mdp.hpp"
#include "declab/rng.hpp"

namespace declab {

enum class FeedbackKind { bandit_trajectory, full_info_reward, full_info_models };
enum class AdversaryKind { iid, oblivious, adaptive_worst_round };

FeedbackKind parse_feedback_kind(const std::string& name);
AdversaryKind parse_adversary_kind(const std::string& name);
std::string to_string(FeedbackKind kind);
std::string to_string(AdversaryKind kind);

// `grid` restricts the adversary's choices (empty means all); `schedule` indexes into the
// choices for oblivious sequences; `weights` is the iid law over the choices (empty: uniform).
struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::iid;
  std::vector<std::size_t> grid;
  std::vector<std::size_t> schedule;
  Vec weights;
  std::uint64_t seed = 0;
};

// Φ-restricted adversary: commits to φ⋆ and plays (M_t, π⋆_t) ∈ φ⋆ every round.
class GameEnvironment {
 public:
  GameEnvironment(const FiniteGame& game, const PartitionScheme& scheme, std::size_t committed,
                  AdversarySpec adversary, std::uint64_t seed);

  struct Outcome {
    std::size_t o = 0;
    std::size_t element = 0;  // (M_t, π⋆_t) as an element of Ψ
    double regret_increment = 0.0;  // V_{M_t}(π⋆_t) − V_{M_t}(π_t), hidden from the learner
  };

  // `p` is the learner's announced distribution; only the adaptive adversary reads it.
  Outcome step(std::size_t pi, const Vec& p = {});
  std::size_t round() const { return round_; }
  std::size_t committed() const { return committed_; }

 private:
  std::size_t choose(const Vec& p);

  const FiniteGame* game_;
  const PartitionScheme* scheme_;
  std::size_t committed_;
  AdversarySpec adversary_;
  std::vector<std::size_t> choices_;  // element indices within φ⋆
  Rng noise_;
  Rng adversary_rng_;
  std::size_t round_ = 0;
};

// Hybrid MDP environment: the transition P^{θ⋆} is fixed and rewards are chosen from a grid.
class HybridEnvironment {
 public:
  HybridEnvironment(std::vector<Transition> candidates, std::size_t theta_star,
                    std::vector<Reward> rewards, AdversarySpec adversary, FeedbackKind feedback,
                    StagePolicy comparator, std::uint64_t seed);

  struct Outcome {
    std::vector<std::array<std::size_t, 3>> steps;  // (s_h, a_h, s_{h+1})
    std::vector<std::size_t> reward_bits;           // bandit feedback only
    std::optional<Reward> reward;                   // revealed in both full-information modes
    std::size_t reward_index = 0;
    std::size_t transition_index = 0;               // ground truth, for the constancy check
    double value = 0.0;                             // V_{P⋆,R_t}(π_t)
    double regret_increment = 0.0;                  // against the committed comparator
  };

  // `policies`/`p` describe the learner's announced distribution for the adaptive adversary.
  Outcome step(const StagePolicy& played, const std::vector<StagePolicy>& policies = {},
               const Vec& p = {});

  const std::vector<Transition>& candidates() const { return candidates_; }
  const std::vector<Reward>& rewards() const { return rewards_; }
  std::size_t theta_star() const { return theta_star_; }
  FeedbackKind feedback() const { return feedback_; }
  std::size_t round() const { return round_; }

 private:
  std::size_t choose(const std::vector<StagePolicy>& policies, const Vec& p);

  std::vector<Transition> candidates_;
  std::size_t theta_star_;
  std::vector<Reward> rewards_;
  AdversarySpec adversary_;
  FeedbackKind feedback_;
  StagePolicy comparator_;
  std::vector<std::size_t> choices_;
  Rng noise_;
  Rng adversary_rng_;
  std::optional<std::size_t> last_transition_;
  std::size_t round_ = 0;
};

// Draws one episode of π under P, with reward bits when `reward` is given.
std::vector<std::array<std::size_t, 3>> sample_trajectory(const Transition& P, const StagePolicy& pi,
                                                          Rng& rng, const Reward* reward = nullptr,
                                                          std::vector<std::size_t>* bits = nullptr);

// Closes a reward grid under pairwise midpoints, `depth` times.
std::vector<Reward> convexify_rewards(const std::vector<Reward>& grid, int depth,
                                      std::size_t cap = 4096);

}  // namespace declab
