#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "declab/complexity.hpp"
#include "declab/errors.hpp"
#include "declab/harness.hpp"
#include "declab/instances.hpp"
#include "declab/io.hpp"
#include "declab/learners.hpp"

namespace fs = std::filesystem;
using namespace declab;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kAssertion = 2;

void emit(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    save_json(out, j);
  }
}

GameInstance load_game(const std::string& path, const std::string& scheme) {
  GameInstance inst = game_from_json(load_json(path));
  if (scheme == "product") {
    if (inst.theta.empty()) throw ValidationError("product scheme needs partitions.theta in the game file");
    inst.scheme = make_product_partitions(inst.game, inst.theta);
  } else if (!scheme.empty()) {
    inst.scheme = make_standard_partitions(inst.game, parse_partition_kind(scheme));
  }
  if (inst.scheme.num_subsets() == 0) throw ValidationError("no partition: pass --scheme");
  return inst;
}

int cmd_run(const std::string& config_path, const std::string& out, std::size_t workers) {
  Json j = load_json(config_path);
  if (j.contains("instance") && j["instance"].contains("file")) {
    fs::path file = j["instance"]["file"].get<std::string>();
    if (file.is_relative()) j["instance"]["file"] = (fs::path(config_path).parent_path() / file).string();
  }
  ExperimentConfig config = config_from_json(j);
  if (workers > 0) config.workers = workers;
  if (!out.empty()) config.output = out;
  const fs::path dir = resolve_output_dir(config);
  const RunSummary s = run_experiment(config, dir);
  std::cerr << "wrote " << dir.string() << ": " << s.completed << "/" << s.replicates
            << " replicates, mean regret " << s.mean_regret << " (se " << s.se_regret << ")\n";
  if (s.failed) {
    std::cerr << "run failed: " << s.aborted << " replicates aborted\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(s.errors.size(), 5); ++i) {
      std::cerr << "  " << s.errors[i] << '\n';
    }
    if (s.errors.size() > 5) std::cerr << "  (" << s.errors.size() - 5 << " more in summary.json)\n";
    return kError;
  }
  if (s.bound_holds && !*s.bound_holds) {
    std::cerr << "regret bound violated\n";
    return kAssertion;
  }
  return kOk;
}

int cmd_complexity(const std::string& path, const std::string& scheme, double eta,
                   const std::string& out) {
  const GameInstance inst = load_game(path, scheme);
  const DecResult dk = dec_kl(inst.game, eta);
  const DecResult dphi = dec_kl_phi(inst.game, inst.scheme, eta);
  const DecResult air = maxmin_air(inst.game, inst.scheme, eta);
  const CPhiResult c = c_phi(inst.game, inst.scheme);
  emit({{"eta", eta},
        {"dec_kl", {{"value", dk.value}, {"gap", dk.gap}}},
        {"dec_kl_phi", {{"value", dphi.value}, {"gap", dphi.gap}}},
        {"maxmin_air", {{"value", air.value}, {"gap", air.gap}}},
        {"c_phi", c.value}},
       out);
  return kOk;
}

int cmd_verify(const std::string& path, const std::string& scheme, double eta,
               const std::string& out) {
  const GameInstance inst = load_game(path, scheme);
  const ComplexityReport report = verify_lemma_suite(inst.game, inst.scheme, eta);
  emit(report_to_json(report), out);
  for (const LemmaCheck& c : report.checks) {
    std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.lhs << " vs " << c.rhs
              << " (tol " << c.tolerance << ")\n";
  }
  return report.passed() ? kOk : kAssertion;
}

int cmd_gen(const std::string& kind, std::uint64_t seed, const std::string& out) {
  if (kind == "alg3_toy") {
    emit(family_to_json(alg3_toy_family()), out);
  } else if (kind == "low_occupancy") {
    emit(family_to_json(low_occupancy_family(seed)), out);
  } else if (kind == "low_rank") {
    emit(family_to_json(low_rank_family(seed)), out);
  } else if (kind == "mdp") {
    Rng rng(seed);
    TabularMDP mdp{Transition::random(rng, 2, 2, 2), Reward{}};
    mdp.reward = Reward::random(rng, 2, 2, 2);
    emit(mdp_to_json(mdp), out);
  } else {
    emit(game_to_json(make_game_instance(kind, seed)), out);
  }
  return kOk;
}

int cmd_odec(const std::string& path, const std::string& embedding, std::size_t d, double eta,
             const std::string& out) {
  const BilinearEmbedding emb(parse_embedding_kind(embedding), family_from_json(load_json(path)), d);
  const OdecResult r = odec_bound_check(emb, eta);
  emit({{"eta", eta}, {"value", r.value}, {"lower", r.lower}, {"bound", r.bound}, {"passed", r.passed}},
       out);
  return r.passed ? kOk : kAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-estimation coefficient laboratory"};
  app.require_subcommand(1);

  std::string config_path, out, game_path, scheme, kind, embedding = "low_occupancy";
  std::size_t workers = 0, d = 2;
  double eta = 0.1;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory");
  run->add_option("--workers", workers, "Worker threads (0: config value)");

  auto* complexity = app.add_subcommand("complexity", "Complexity measures of a game");
  complexity->add_option("game", game_path, "Game JSON")->required()->check(CLI::ExistingFile);
  complexity->add_option("--scheme", scheme, "per_policy | per_model_optimal | product");
  complexity->add_option("--eta", eta, "Learning rate")->check(CLI::PositiveNumber);
  complexity->add_option("--out", out, "Output file");

  auto* verify = app.add_subcommand("verify-lemmas", "Check the relations between complexity measures");
  verify->add_option("game", game_path, "Game JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--scheme", scheme, "per_policy | per_model_optimal | product");
  verify->add_option("--eta", eta, "Learning rate")->check(CLI::PositiveNumber);
  verify->add_option("--out", out, "Output file");

  auto* gen = app.add_subcommand("gen-instance", "Write a generated instance as JSON");
  gen->add_option("kind", kind, "Instance kind")->required();
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--out", out, "Output file");

  auto* odec = app.add_subcommand("odec", "Optimistic DEC of a hybrid family against its bound");
  odec->add_option("family", game_path, "Family JSON")->required()->check(CLI::ExistingFile);
  odec->add_option("--embedding", embedding, "low_occupancy | low_rank");
  odec->add_option("--d", d, "Embedding dimension");
  odec->add_option("--eta", eta, "Learning rate")->check(CLI::PositiveNumber);
  odec->add_option("--out", out, "Output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out, workers);
    if (*complexity) return cmd_complexity(game_path, scheme, eta, out);
    if (*verify) return cmd_verify(game_path, scheme, eta, out);
    if (*gen) return cmd_gen(kind, seed, out);
    if (*odec) return cmd_odec(game_path, embedding, d, eta, out);
  } catch (const AssertionFailure& e) {
    std::cerr << "assertion failed: " << e.what() << '\n';
    return kAssertion;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
