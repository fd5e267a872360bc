#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "declab/environments.hpp"
#include "declab/io.hpp"
#include "declab/saddle.hpp"

namespace declab {

enum class LearnerKind { alg1, alg2, meta, alg3 };
LearnerKind parse_learner_kind(const std::string& name);
std::string to_string(LearnerKind kind);

struct ExperimentConfig {
  std::string name = "experiment";
  LearnerKind learner = LearnerKind::alg1;
  // {"generator": kind, "seed": n, ...}, {"file": path} or {"bandit_means": [[μ0, μ1], ...]}.
  Json instance = Json::object();
  std::string scheme;  // overrides the instance's partition when set
  std::optional<double> eta;
  std::optional<double> gamma;
  std::optional<std::size_t> tau;
  std::string eta_rule = "dec_slope";  // alg1/alg2 when eta is absent: dec_slope | anytime
  std::string gamma_rule = "theorem";  // alg3 when gamma is absent: theorem | premise_cap
  AdversarySpec adversary;
  // Committed φ⋆ (alg1/alg2) or θ⋆ (meta/alg3): "cycle" over replicates or a fixed index.
  std::string committed = "cycle";
  std::vector<std::size_t> meta_policy;  // alg2: π^θ per group (empty: best on average)
  std::string embedding = "low_occupancy";
  std::size_t d = 2;
  double delta = 0.1;
  std::size_t T = 1000;
  std::size_t replicates = 1;
  std::uint64_t seed = 0;
  std::string output;
  std::size_t trace_every = 1;
  std::vector<std::size_t> checkpoints;  // empty: T/64, T/32, ..., T
  SaddleOptions saddle;
  std::size_t workers = 1;  // 0: one per hardware thread
  std::size_t bootstrap = 1000;
};

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& config);

struct SlopeFit {
  double slope = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<std::size_t> used;     // checkpoints in the fit
  std::vector<std::size_t> dropped;  // checkpoints with nonpositive mean regret
  bool valid = false;
};

// Least-squares slope of log mean regret on log t, with a percentile bootstrap over replicates.
// regret[r][c] is replicate r's cumulative regret at checkpoints[c].
SlopeFit slope_fit(const std::vector<std::size_t>& checkpoints, const std::vector<Vec>& regret,
                   std::size_t bootstrap = 1000, std::uint64_t seed = 0x5eed);

struct RunSummary {
  std::string name;
  std::string learner;
  std::size_t T = 0;
  std::size_t replicates = 0;
  std::size_t completed = 0;
  std::size_t aborted = 0;
  std::vector<std::string> errors;
  double eta = 0.0;
  double gamma = 0.0;
  std::size_t tau = 0;
  double mean_regret = 0.0;
  double se_regret = 0.0;
  double estimation_term = 0.0;
  double decision_term = 0.0;
  std::optional<bool> bound_holds;  // absent when the run asserts no bound
  std::vector<std::size_t> checkpoints;
  Vec mean_regret_at;
  SlopeFit slope;
  Json extra = Json::object();
  bool failed = false;  // more than the allowed fraction of replicates aborted

  Json to_json() const;
};

// DECLAB_RUN_DIR when set, else the configured output, else runs/<name>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

// Runs every replicate and writes trace.csv, bound.json, summary.json and learner_trace.jsonl
// (replicate 0) into `out_dir`.
RunSummary run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace declab
