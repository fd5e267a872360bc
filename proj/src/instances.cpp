#include "declab/instances.hpp"

#include <algorithm>
#include <numeric>

#include "declab/errors.hpp"

namespace declab {

FiniteGame random_game(Rng& rng, std::size_t n_models, std::size_t n_policies, std::size_t n_obs,
                       double alpha) {
  Vec obs;
  obs.reserve(n_models * n_policies * n_obs);
  for (std::size_t k = 0; k < n_models * n_policies; ++k) {
    const Vec row = rng.dirichlet(n_obs, alpha);
    obs.insert(obs.end(), row.begin(), row.end());
  }
  Vec value(n_models * n_policies);
  for (auto& v : value) v = rng.uniform();
  return FiniteGame::from_tables(n_models, n_policies, n_obs, std::move(obs), std::move(value));
}

std::vector<std::vector<std::size_t>> random_theta(Rng& rng, std::size_t n_models,
                                                   std::size_t n_groups) {
  if (n_groups == 0 || n_groups > n_models) throw ValidationError("random_theta: bad group count");
  std::vector<std::size_t> order(n_models);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<std::vector<std::size_t>> theta(n_groups);
  for (std::size_t k = 0; k < n_models; ++k) {
    theta[k < n_groups ? k : rng.index(n_groups)].push_back(order[k]);
  }
  for (auto& g : theta) std::sort(g.begin(), g.end());
  return theta;
}

PartitionScheme random_custom_partitions(Rng& rng, const FiniteGame& game, std::size_t n_subsets) {
  const std::size_t n_pairs = game.num_models() * game.num_policies();
  if (n_subsets == 0 || n_subsets > n_pairs) {
    throw ValidationError("random_custom_partitions: bad subset count");
  }
  std::vector<Element> pairs;
  for (std::size_t m = 0; m < game.num_models(); ++m) {
    for (std::size_t pi = 0; pi < game.num_policies(); ++pi) pairs.push_back({m, pi});
  }
  std::shuffle(pairs.begin(), pairs.end(), rng.engine());
  const std::size_t used = n_subsets + rng.index(n_pairs - n_subsets + 1);
  std::vector<std::vector<Element>> subsets(n_subsets);
  for (std::size_t k = 0; k < used; ++k) {
    subsets[k < n_subsets ? k : rng.index(n_subsets)].push_back(pairs[k]);
  }
  return PartitionScheme(game, std::move(subsets));
}

FiniteGame bandit_game(const std::vector<std::array<double, 2>>& means) {
  if (means.empty()) throw ValidationError("bandit_game: no models");
  Vec obs, value;
  for (const auto& mu : means) {
    for (double m : mu) {
      if (m < 0.0 || m > 1.0) throw ValidationError("bandit_game: mean outside [0,1]");
      obs.push_back(1.0 - m);
      obs.push_back(m);
      value.push_back(m);
    }
  }
  std::vector<std::string> models, policies{"arm0", "arm1"}, observations{"r0", "r1"};
  for (std::size_t i = 0; i < means.size(); ++i) models.push_back("m" + std::to_string(i));
  return FiniteGame(models, policies, observations, std::move(obs), std::move(value));
}

std::vector<std::array<double, 2>> default_bandit_means() {
  std::vector<std::array<double, 2>> out;
  for (double gap : {0.0125, 0.025, 0.05, 0.1, 0.2, 0.4}) {
    out.push_back({0.5 + gap / 2.0, 0.5 - gap / 2.0});
    out.push_back({0.5 - gap / 2.0, 0.5 + gap / 2.0});
  }
  return out;
}

GameInstance adaptive_comparator_toy() {
  GameInstance inst;
  inst.kind = "adaptive_toy";
  inst.game = FiniteGame::from_tables(2, 2, 2, {0.55, 0.45, 0.55, 0.45, 0.45, 0.55, 0.45, 0.55},
                                      {0.9, 0.3, 0.3, 0.9});
  inst.scheme = PartitionScheme(inst.game, {{{0, 0}, {1, 1}}});
  return inst;
}

std::vector<StagePolicy> open_loop_policies(std::size_t S, std::size_t A, std::size_t H) {
  std::vector<StagePolicy> out;
  std::vector<std::size_t> seq(H, 0);
  while (true) {
    std::vector<std::size_t> actions(H * S);
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t s = 0; s < S; ++s) actions[h * S + s] = seq[h];
    }
    out.push_back(StagePolicy::deterministic(S, A, H, actions));
    std::size_t k = H;
    while (k > 0 && ++seq[k - 1] == A) seq[--k] = 0;
    if (k == 0) break;
  }
  return out;
}

GameInstance hybrid_product_instance(std::uint64_t seed, std::size_t S, std::size_t A,
                                     std::size_t H, std::size_t n_transitions,
                                     std::size_t n_rewards) {
  Rng rng(seed);
  std::vector<Transition> transitions;
  for (std::size_t t = 0; t < n_transitions; ++t) transitions.push_back(Transition::random(rng, S, A, H));
  std::vector<Reward> rewards;
  for (std::size_t r = 0; r < n_rewards; ++r) rewards.push_back(Reward::random(rng, S, A, H));
  std::vector<TabularMDP> models;
  GameInstance inst;
  inst.kind = "hybrid_product";
  inst.theta.resize(n_transitions);
  for (std::size_t t = 0; t < n_transitions; ++t) {
    for (std::size_t r = 0; r < n_rewards; ++r) {
      inst.theta[t].push_back(models.size());
      models.push_back({transitions[t], rewards[r]});
    }
  }
  inst.game = make_mdp_game(models, open_loop_policies(S, A, H), true).game;
  inst.scheme = make_product_partitions(inst.game, inst.theta);
  return inst;
}

HybridFamily low_occupancy_family(std::uint64_t seed, std::size_t n_transitions,
                                  std::size_t n_rewards) {
  const std::size_t S = 2, A = 2, H = 2;
  Rng rng(seed);
  HybridFamily family;
  for (std::size_t t = 0; t < n_transitions; ++t) {
    Transition P = Transition::random(rng, S, A, H);
    for (std::size_t s = 0; s < S; ++s) {
      const Vec q = rng.dirichlet(S);
      for (std::size_t a = 0; a < A; ++a) {
        std::copy(q.begin(), q.end(), P.P.begin() + static_cast<std::ptrdiff_t>((s * A + a) * S));
      }
    }
    family.transitions.push_back(std::move(P));
  }
  for (std::size_t r = 0; r < n_rewards; ++r) family.rewards.push_back(Reward::random(rng, S, A, H));
  family.policies = open_loop_policies(S, A, H);
  return family;
}

HybridFamily low_rank_family(std::uint64_t seed, std::size_t n_transitions,
                             std::size_t n_rewards, std::size_t n_policies) {
  const std::size_t S = 3, A = 2, H = 2;
  Rng rng(seed);
  HybridFamily family;
  for (std::size_t t = 0; t < n_transitions; ++t) {
    Transition P{S, A, H, 0, Vec(H * S * A * S)};
    for (std::size_t h = 0; h < H; ++h) {
      const Vec mu1 = rng.dirichlet(S), mu2 = rng.dirichlet(S);
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
          const double w = rng.uniform();
          for (std::size_t s2 = 0; s2 < S; ++s2) {
            P.P[((h * S + s) * A + a) * S + s2] = w * mu1[s2] + (1.0 - w) * mu2[s2];
          }
        }
      }
    }
    family.transitions.push_back(std::move(P));
  }
  for (std::size_t r = 0; r < n_rewards; ++r) family.rewards.push_back(Reward::random(rng, S, A, H));
  std::vector<StagePolicy> pool = StagePolicy::all_deterministic(S, A, H);
  std::shuffle(pool.begin(), pool.end(), rng.engine());
  pool.resize(std::min(n_policies, pool.size()));
  family.policies = std::move(pool);
  return family;
}

HybridFamily alg3_toy_family() {
  const std::size_t S = 2, A = 2, H = 2;
  HybridFamily family;
  for (double q : {0.9, 0.1}) {
    Transition P{S, A, H, 0, Vec(H * S * A * S)};
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        P.P[(s * A + a) * S] = q;
        P.P[(s * A + a) * S + 1] = 1.0 - q;
        P.P[((S + s) * A + a) * S + s] = 1.0;
      }
    }
    family.transitions.push_back(std::move(P));
  }
  // R_0(s, ·) and R_1(s, ·) per reward, state-major.
  const std::vector<std::array<double, 8>> tables = {
      {0.20, 0.00, 0.20, 0.00, 0.80, 0.20, 0.20, 0.80},
      {0.15, 0.05, 0.15, 0.05, 0.70, 0.10, 0.10, 0.70},
      {0.10, 0.00, 0.10, 0.00, 0.75, 0.25, 0.25, 0.75},
      {0.00, 0.20, 0.00, 0.20, 0.60, 0.20, 0.20, 0.60},
  };
  for (const auto& t : tables) family.rewards.push_back(Reward{S, A, H, Vec(t.begin(), t.end())});
  family.policies = open_loop_policies(S, A, H);
  return family;
}

MetaToy meta_toy(std::uint64_t seed, std::size_t n_rewards) {
  const std::size_t S = 2, A = 2, H = 2;
  Rng rng(seed);
  MetaToy toy;
  for (int t = 0; t < 2; ++t) toy.transitions.push_back(Transition::random(rng, S, A, H));
  for (std::size_t r = 0; r < n_rewards; ++r) toy.rewards.push_back(Reward::random(rng, S, A, H));
  return toy;
}

std::vector<std::string> game_instance_kinds() {
  return {"random_per_policy", "random_per_model_optimal", "random_product", "random_custom",
          "bandit",            "adaptive_toy",             "hybrid_product", "linear_qv"};
}

GameInstance make_game_instance(const std::string& kind, std::uint64_t seed) {
  GameInstance inst;
  inst.kind = kind;
  Rng rng(seed);
  auto random_sized = [&]() {
    const std::size_t nm = 2 + rng.index(4), np = 2 + rng.index(3), no = 2 + rng.index(3);
    return random_game(rng, nm, np, no);
  };
  if (kind == "random_per_policy" || kind == "random_per_model_optimal") {
    inst.game = random_sized();
    inst.scheme = make_standard_partitions(inst.game, parse_partition_kind(kind.substr(7)));
  } else if (kind == "random_product") {
    inst.game = random_sized();
    inst.theta = random_theta(rng, inst.game.num_models(), 1 + rng.index(inst.game.num_models()));
    inst.scheme = make_product_partitions(inst.game, inst.theta);
  } else if (kind == "random_custom") {
    inst.game = random_sized();
    const std::size_t pairs = inst.game.num_models() * inst.game.num_policies();
    inst.scheme = random_custom_partitions(rng, inst.game, 1 + rng.index(std::min<std::size_t>(pairs, 4)));
  } else if (kind == "bandit") {
    inst.game = bandit_game(default_bandit_means());
    inst.scheme = make_standard_partitions(inst.game, PartitionKind::per_model_optimal);
  } else if (kind == "adaptive_toy") {
    inst = adaptive_comparator_toy();
  } else if (kind == "hybrid_product") {
    inst = hybrid_product_instance(seed);
  } else if (kind == "linear_qv") {
    LinearQvInstance lq = gen_linear_qv(seed, 2, 2);
    inst.game = std::move(lq.mdp_game.game);
    inst.scheme = std::move(lq.scheme);
  } else {
    throw Error("unknown instance kind: " + kind);
  }
  return inst;
}

}  // namespace declab
