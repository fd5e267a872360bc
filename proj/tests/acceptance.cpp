#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "declab/complexity.hpp"
#include "declab/embedding.hpp"
#include "declab/harness.hpp"
#include "declab/instances.hpp"
#include "declab/io.hpp"
#include "declab/learners.hpp"
#include "declab/mdp.hpp"
#include "declab/rng.hpp"
#include "declab/saddle.hpp"
#include "declab/tolerances.hpp"

namespace fs = std::filesystem;
using namespace declab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PartitionScheme random_scheme(Rng& rng, const FiniteGame& game) {
  switch (rng.index(4)) {
    case 0: return make_standard_partitions(game, PartitionKind::per_policy);
    case 1: return make_standard_partitions(game, PartitionKind::per_model_optimal);
    case 2:
      return make_product_partitions(game, random_theta(rng, game.num_models(),
                                                        1 + rng.index(game.num_models())));
    default: return random_custom_partitions(rng, game, 1 + rng.index(3));
  }
}

Outcome bayes_posterior(Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const FiniteGame game =
        random_game(rng, 2 + rng.index(3), 2 + rng.index(3), 2 + rng.index(3));
    const PartitionScheme scheme = random_scheme(rng, game);
    Vec prior = rng.dirichlet(scheme.num_elements(), 0.5);
    if (inst % 4 == 0 && prior.size() > 1) prior[rng.index(prior.size())] = 0.0;
    prior = normalized(prior);
    const std::size_t pi = rng.index(game.num_policies());
    Vec joint(scheme.num_subsets(), 0.0);
    Vec evidence(game.num_observations(), 0.0);
    for (std::size_t e = 0; e < scheme.num_elements(); ++e) {
      for (std::size_t o = 0; o < game.num_observations(); ++o) {
        evidence[o] += prior[e] * game.obs(scheme.element(e).model, pi, o);
      }
    }
    const std::size_t o = rng.categorical(normalized(evidence));
    double total = 0.0;
    for (std::size_t e = 0; e < scheme.num_elements(); ++e) {
      const double w = prior[e] * game.obs(scheme.element(e).model, pi, o);
      joint[scheme.subset_of(e)] += w;
      total += w;
    }
    const Belief post = posterior_over_partitions(Belief::from_probs(prior), scheme, game, pi, o);
    for (std::size_t phi = 0; phi < joint.size(); ++phi) {
      worst = std::max(worst, std::abs(post.prob(phi) - joint[phi] / total));
    }
  }
  const double sec = seconds_since(t0);
  return {worst <= 1e-12 && sec < 10.0, fmt("max error %.2e, %.2fs", worst, sec)};
}

// AIR^Φ_{ρ,η}(π, ν) written from the definition: posterior over Φ, then its KL to ρ.
double air_oracle(const FiniteGame& game, const PartitionScheme& scheme, const Vec& rho,
                  double eta, std::size_t pi, const Vec& nu) {
  double regret = 0.0;
  for (std::size_t e = 0; e < scheme.num_elements(); ++e) {
    const Element& el = scheme.element(e);
    regret += nu[e] * (game.value(el.model, el.policy) - game.value(el.model, pi));
  }
  double info = 0.0;
  Vec post(scheme.num_subsets());
  for (std::size_t o = 0; o < game.num_observations(); ++o) {
    std::fill(post.begin(), post.end(), 0.0);
    double evidence = 0.0;
    for (std::size_t e = 0; e < scheme.num_elements(); ++e) {
      const double w = nu[e] * game.obs(scheme.element(e).model, pi, o);
      post[scheme.subset_of(e)] += w;
      evidence += w;
    }
    if (evidence <= 0.0) continue;
    double kl_o = 0.0;
    for (std::size_t phi = 0; phi < post.size(); ++phi) {
      const double q = post[phi] / evidence;
      if (q > 0.0) kl_o += q * std::log(q / rho[phi]);
    }
    info += evidence * kl_o;
  }
  return regret - info / eta;
}

// Compositions of `res` into `n` parts, visited as points of the simplex.
void for_each_grid_point(std::size_t n, int res, const std::function<void(const Vec&)>& f) {
  std::vector<int> c(n, 0);
  Vec x(n);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == n) {
      c[i] = left;
      for (std::size_t k = 0; k < n; ++k) x[k] = static_cast<double>(c[k]) / res;
      f(x);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      c[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, res);
}

Outcome saddle_certification(Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_gap = 0.0, worst_match = 0.0;
  bool bracket = true;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t nm = 2 + rng.index(3), np = 2 + rng.index(3), no = 2 + rng.index(3);
    const FiniteGame game = random_game(rng, nm, np, no);
    PartitionScheme scheme;
    if (inst % 3 == 0 && nm * np <= 4) {
      scheme = make_standard_partitions(game, PartitionKind::per_policy);
    } else if (inst % 3 == 1) {
      scheme = random_custom_partitions(rng, game, 1 + rng.index(2));
      while (scheme.num_elements() > 4) scheme = random_custom_partitions(rng, game, 1 + rng.index(2));
    } else {
      scheme = make_standard_partitions(game, PartitionKind::per_model_optimal);
    }
    const Vec rho = rng.dirichlet(scheme.num_subsets());
    const double eta = std::array<double, 3>{0.3, 1.0, 3.0}[rng.index(3)];
    const SaddleSolution sol = solve(*make_air_phi(game, scheme, rho, eta), SaddleOptions{});
    worst_gap = std::max(worst_gap, sol.gap);
    // f is linear in p, so the inner minimum over the p-grid sits at a vertex.
    double grid = -std::numeric_limits<double>::infinity();
    for_each_grid_point(scheme.num_elements(), 200, [&](const Vec& nu) {
      double inner = std::numeric_limits<double>::infinity();
      for (std::size_t pi = 0; pi < np; ++pi) {
        inner = std::min(inner, air_oracle(game, scheme, rho, eta, pi, nu));
      }
      grid = std::max(grid, inner);
    });
    worst_match = std::max(worst_match, std::abs(sol.lower - grid));
    if (grid > sol.upper + 1e-9) bracket = false;
  }
  const double sec = seconds_since(t0);
  return {worst_gap <= 1e-3 && worst_match <= 2e-2 && bracket && sec < 300.0,
          fmt("max gap %.2e, max |solver - grid| %.2e, grid <= upper: %s, %.1fs", worst_gap,
              worst_match, bracket ? "yes" : "no", sec)};
}

Outcome air_equals_dec(Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_excess = -1.0;
  for (int inst = 0; inst < 50; ++inst) {
    GameInstance gi;
    const int kind = inst % 3;
    if (kind == 2 && inst % 2 == 1) {
      gi = hybrid_product_instance(rng.index(1u << 30));
    } else {
      gi.game = random_game(rng, 2 + rng.index(3), 2 + rng.index(2), 2 + rng.index(3));
      if (kind == 0) gi.scheme = make_standard_partitions(gi.game, PartitionKind::per_policy);
      if (kind == 1) gi.scheme = make_standard_partitions(gi.game, PartitionKind::per_model_optimal);
      if (kind == 2) {
        gi.scheme = make_product_partitions(gi.game, random_theta(rng, gi.game.num_models(), 2));
      }
    }
    const double eta = inst % 2 ? 1.0 : 0.3;
    const DecResult air = maxmin_air(gi.game, gi.scheme, eta);
    const DecResult dec = dec_kl_phi(gi.game, gi.scheme, eta);
    worst_excess = std::max(worst_excess, std::abs(air.value - dec.value) - air.gap - dec.gap);
  }
  return {worst_excess <= 2e-3,
          fmt("max |air - dec| - gaps = %.2e, %.1fs", worst_excess, seconds_since(t0))};
}

Outcome convexification(Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_excess = -1.0;
  int min_depth = 6;
  for (int inst = 0; inst < 12; ++inst) {
    GameInstance gi;
    int depth = 6;
    if (inst % 3 == 2) {
      gi = hybrid_product_instance(rng.index(1u << 30));
    } else {
      gi.game = random_game(rng, 2 + rng.index(3), 2 + rng.index(2), 2 + rng.index(3));
      gi.scheme = make_product_partitions(gi.game, random_theta(rng, gi.game.num_models(), 2));
    }
    const double eta = inst % 2 ? 1.0 : 0.3;
    const DecResult phi = dec_kl_phi(gi.game, gi.scheme, eta);
    ConvexifiedGame closure = convexify_game(gi.game, gi.scheme, depth);
    while (closure.game.size() > default_tolerances().solver_cap) {
      closure = convexify_game(gi.game, gi.scheme, --depth);
    }
    const DecResult conv = dec_kl(closure.game, eta);
    min_depth = std::min(min_depth, depth);
    worst_excess = std::max(worst_excess, std::abs(phi.value - conv.value) - phi.gap - conv.gap);
  }
  const GameInstance toy = adaptive_comparator_toy();
  const CPhiResult c = c_phi(toy.game, toy.scheme);
  double worst_toy = std::numeric_limits<double>::infinity();
  for (double eta : {0.1, 0.5, 2.0}) {
    worst_toy = std::min(worst_toy, dec_kl_phi(toy.game, toy.scheme, eta).value - c.value);
  }
  return {worst_excess <= 2e-3 && worst_toy >= -1e-3 && c.value > 0.05,
          fmt("product: max excess %.2e (closure depth >= %d); toy: C = %.4f, min DEC - C = %.2e, %.1fs",
              worst_excess, min_depth, c.value, worst_toy, seconds_since(t0))};
}

Outcome linear_qv() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = -std::numeric_limits<double>::infinity();
  bool ok = true;
  int k = 0;
  for (int d = 2; d <= 3; ++d) {
    for (int H = 2; H <= 3; ++H) {
      for (double eta : {0.05, 0.5}) {
        for (int s = 0; s < 4 && k < 30; ++s, ++k) {
          LinearQvSizes sizes;
          sizes.reward_bits = H == 2;
          const LinearQvInstance lq = gen_linear_qv(1000 + k, d, H, sizes);
          ComplexityOptions options;
          options.closure_depth = 3;
          const BoundCheck b =
              linear_qv_bound_check(lq.mdp_game.game, lq.scheme, d, H, eta, options);
          ok = ok && b.value <= b.bound + 1e-3;
          worst = std::max(worst, b.value - b.bound);
        }
      }
    }
  }
  return {ok && k == 30, fmt("%d instances, max DEC - 4ηdH² = %.4f, %.1fs", k, worst, seconds_since(t0))};
}

Outcome odec_bounds() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_id = -std::numeric_limits<double>::infinity(), worst_unif = worst_id;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const double eta = s % 2 ? 0.1 : 0.5;
    const BilinearEmbedding occ(EmbeddingKind::low_occupancy, low_occupancy_family(s), 2);
    const OdecResult a = odec_bound_check(occ, eta);
    worst_id = std::max(worst_id, a.value - eta * 2.0 * 2.0 / 4.0);
    const BilinearEmbedding rank(EmbeddingKind::low_rank, low_rank_family(s), 2);
    const OdecResult b = odec_bound_check(rank, eta);
    worst_unif = std::max(worst_unif, b.value - 2.0 * std::sqrt(eta * 2.0 / 2.0));
  }
  return {worst_id <= 1e-3 && worst_unif <= 1e-3,
          fmt("max ODEC - ηdH/4 = %.4f, max ODEC - H√(ηd/2) = %.4f, %.2fs", worst_id, worst_unif,
              seconds_since(t0))};
}

Outcome exp_weights(Rng& rng) {
  int violations = 0;
  double tightest = std::numeric_limits<double>::infinity();
  for (int seq = 0; seq < 10000; ++seq) {
    const std::size_t n = 2 + rng.index(7), T = 1 + rng.index(200);
    const double rate = std::exp(rng.uniform(std::log(1e-3), std::log(2.0)));
    const int style = seq % 3;
    std::vector<Vec> gains(T, Vec(n));
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        double g = rng.uniform(-1.0, 1.0);
        if (style == 1) g = (i == t % n) ? 1.0 : 0.0;
        if (style == 2) g = rng.uniform(-5.0, 1.0);
        gains[t][i] = std::min(g, 1.0 / rate);
      }
    }
    const ExpWeightsRun run = run_exp_weights(gains, rate);
    if (!run.holds()) ++violations;
    tightest = std::min(tightest, run.bound - run.regret);
  }
  return {violations == 0, fmt("%d violations, min slack %.3e", violations, tightest)};
}

StagePolicy random_policy(Rng& rng, std::size_t S, std::size_t A, std::size_t H) {
  StagePolicy pi = StagePolicy::uniform(S, A, H);
  for (std::size_t c = 0; c < H * S; ++c) {
    const Vec row = rng.dirichlet(A, 0.7);
    std::copy(row.begin(), row.end(), pi.prob.begin() + static_cast<std::ptrdiff_t>(c * A));
  }
  return pi;
}

Outcome pdl(Rng& rng) {
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t S = 1 + rng.index(4), A = 1 + rng.index(4), H = 1 + rng.index(5);
    const TabularMDP mdp{Transition::random(rng, S, A, H), Reward::random(rng, S, A, H)};
    const StagePolicy pi = random_policy(rng, S, A, H), pi2 = random_policy(rng, S, A, H);
    worst = std::max(worst, pdl_check(mdp, pi, pi2));
  }
  return {worst <= 1e-10, fmt("max residual %.2e", worst)};
}

RunSummary run(const Json& j, const fs::path& work) {
  const ExperimentConfig c = config_from_json(j);
  return run_experiment(c, work / c.name);
}

Outcome alg1_bandit(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunSummary s = run({{"name", "alg1_bandit"}, {"learner", "alg1"},
                            {"instance", {{"generator", "bandit"}, {"seed", 0}}},
                            {"T", 4096}, {"replicates", 200}, {"seed", 1}, {"trace_every", 64}},
                           work);
  const double sec = seconds_since(t0);
  const double bound = s.estimation_term + s.decision_term + 3.0 * s.se_regret;
  const bool ok = !s.failed && s.mean_regret <= bound && s.slope.valid && s.slope.slope >= 0.35 &&
                  s.slope.slope <= 0.65 && sec < 900.0;
  return {ok, fmt("mean %.2f (se %.2f) <= %.2f + %.2f + 3se; slope %.3f [%.3f, %.3f]; η %.4f, %.1fs",
                  s.mean_regret, s.se_regret, s.estimation_term, s.decision_term, s.slope.slope,
                  s.slope.ci_low, s.slope.ci_high, s.eta, sec)};
}

Outcome meta_policy(const fs::path& work) {
  const RunSummary s = run({{"name", "meta"}, {"learner", "meta"}, {"instance", {{"seed", 5}}},
                            {"adversary", {{"kind", "adaptive_worst_round"}}},
                            {"T", 2048}, {"replicates", 100}, {"seed", 2}, {"trace_every", 64}},
                           work);
  const double bound = s.estimation_term + s.decision_term;
  const double worst = s.extra.value("worst_component_regret", 0.0);
  const bool ok = !s.failed && s.completed == 100 && worst <= bound &&
                  s.mean_regret + 3.0 * s.se_regret <= bound;
  return {ok, fmt("worst component regret %.2f <= (log|A|/γ + γT)H = %.2f; γ %.4f", worst, bound,
                  s.gamma)};
}

Outcome alg3_rate(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunSummary s = run({{"name", "alg3"}, {"learner", "alg3"},
                            {"instance", {{"generator", "alg3_toy"}}},
                            {"embedding", "low_occupancy"}, {"d", 2}, {"T", 16384}, {"tau", 128},
                            {"gamma_rule", "premise_cap"}, {"replicates", 100}, {"seed", 11},
                            {"trace_every", 128}, {"bootstrap", 2000}},
                           work);
  const double sec = seconds_since(t0);
  const double dbi = s.extra.value("dbi_star_max", 1.0);
  bool every_epoch = !s.extra.at("replicates").empty();
  for (const Json& r : s.extra.at("replicates")) {
    every_epoch = every_epoch && r.at("dbi_checks").get<std::size_t>() > 0 &&
                  r.at("dbi_checks").get<std::size_t>() % 128 == 0;
  }
  const bool ok = !s.failed && s.slope.valid && s.slope.slope <= 0.92 && s.slope.ci_high < 1.0 &&
                  dbi == 0.0 && every_epoch && sec < 1800.0;
  return {ok, fmt("slope %.3f, 95%% CI [%.3f, %.3f]; max D_bi(φ⋆) %.1e; η %.4f γ %.4f τ %zu, %.1fs",
                  s.slope.slope, s.slope.ci_low, s.slope.ci_high, dbi, s.eta, s.gamma, s.tau, sec)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
  std::vector<fs::path> rel;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
  }
  std::size_t nb = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) nb += e.is_regular_file();
  if (rel.size() != nb || rel.empty()) return false;
  for (const auto& r : rel) {
    if (!fs::exists(b / r) || slurp(a / r) != slurp(b / r)) return false;
  }
  files += rel.size();
  return true;
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  const fs::path root = work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<Json> configs = {
      {{"name", "bandit"}, {"learner", "alg1"}, {"instance", {{"generator", "bandit"}}},
       {"T", 256}, {"replicates", 4}, {"seed", 3}, {"workers", 2}},
      {{"name", "alg2"}, {"learner", "alg2"}, {"instance", {{"generator", "hybrid_product"}, {"seed", 4}}},
       {"scheme", "product"}, {"T", 64}, {"replicates", 2}, {"seed", 4}},
      {{"name", "meta"}, {"learner", "meta"}, {"instance", {{"seed", 1}}}, {"T", 128},
       {"replicates", 3}, {"seed", 5}},
      {{"name", "alg3"}, {"learner", "alg3"}, {"instance", {{"generator", "alg3_toy"}}},
       {"T", 512}, {"tau", 16}, {"replicates", 3}, {"seed", 6}, {"workers", 3}},
  };
  std::vector<std::string> commands;
  for (const Json& j : configs) {
    const fs::path cfg = root / (j.at("name").get<std::string>() + ".json");
    save_json(cfg, j);
    commands.push_back("run " + cfg.string() + " --out {}");
  }
  const fs::path game = root / "game.json";
  commands.push_back("gen-instance random_product --seed 9 --out {}/game.json");
  commands.push_back("complexity " + game.string() + " --scheme product --eta 0.5 --out {}/c.json");
  commands.push_back("verify-lemmas " + game.string() + " --scheme product --eta 0.5 --out {}/v.json");
  std::size_t files = 0;
  std::vector<std::string> failures;
  bool ok = std::system(("\"" + cli + "\" gen-instance random_product --seed 9 --out " + game.string()).c_str()) == 0;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    fs::path outs[2];
    // Both repetitions write to the same directory, which is then set aside.
    const fs::path scratch = root / "scratch";
    std::string cmd = commands[k];
    for (std::size_t at; (at = cmd.find("{}")) != std::string::npos;) cmd.replace(at, 2, scratch.string());
    for (int rep = 0; rep < 2; ++rep) {
      outs[rep] = root / ("out" + std::to_string(k) + "_" + std::to_string(rep));
      fs::create_directories(scratch);
      const std::string line = "\"" + cli + "\" " + cmd + " 2>/dev/null";
      if (std::system(line.c_str()) != 0) {
        ok = false;
        failures.push_back(cmd);
      }
      fs::rename(scratch, outs[rep]);
    }
    ok = ok && same_tree(outs[0], outs[1], files);
  }
  std::string detail = fmt("%zu commands run twice, %zu output files compared bitwise", commands.size(), files);
  for (const std::string& f : failures) detail += "; failed: " + f;
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string cli, work = "acceptance_work";
  app.add_option("--cli", cli, "Path to the declab executable")->required();
  app.add_option("--work", work, "Scratch directory");
  std::vector<std::size_t> only;
  app.add_option("--only", only, "Run only these criteria (1-based)");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  Rng rng(0);
  struct Check {
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Check> checks = {
      {"bayes posterior vs brute force", [&] { return bayes_posterior(rng); }},
      {"saddle certification vs grid search", [&] { return saddle_certification(rng); }},
      {"maxmin AIR equals DEC(M,Φ)", [&] { return air_equals_dec(rng); }},
      {"convexified DEC and adaptive comparator", [&] { return convexification(rng); }},
      {"linear Q/V DEC bound", [] { return linear_qv(); }},
      {"optimistic DEC bounds", [] { return odec_bounds(); }},
      {"exponential weights inequality", [&] { return exp_weights(rng); }},
      {"performance difference identity", [&] { return pdl(rng); }},
      {"Alg 1 bandit regret bound and slope", [&] { return alg1_bandit(work); }},
      {"meta-policy component regret", [&] { return meta_policy(work); }},
      {"Alg 3 sublinear regret", [&] { return alg3_rate(work); }},
      {"CLI determinism", [&] { return determinism(cli, work); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < checks.size(); ++k) {
    if (!only.empty() && std::find(only.begin(), only.end(), k + 1) == only.end()) continue;
    Outcome o;
    rng = Rng(20240601 + k);
    try {
      o = checks[k].fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, checks[k].name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
