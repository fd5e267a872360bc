#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "declab/errors.hpp"
#include "declab/harness.hpp"
#include "declab/io.hpp"

namespace fs = std::filesystem;
using namespace declab;

namespace {

std::vector<std::size_t> doubling(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> out;
  for (std::size_t t = lo; t <= hi; t *= 2) out.push_back(t);
  return out;
}

std::vector<Vec> power_series(const std::vector<std::size_t>& ts, double exponent) {
  std::vector<Vec> regret;
  for (int r = 0; r < 20; ++r) {
    Vec row;
    for (std::size_t t : ts) row.push_back((1.0 + 0.05 * r) * std::pow(static_cast<double>(t), exponent));
    regret.push_back(row);
  }
  return regret;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("declab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(SlopeFit, RecoversSquareRootRate) {
  const auto ts = doubling(64, 4096);
  const SlopeFit f = slope_fit(ts, power_series(ts, 0.5), 500);
  ASSERT_TRUE(f.valid);
  EXPECT_NEAR(f.slope, 0.5, 1e-6);
  EXPECT_LE(f.ci_low, 0.5 + 1e-6);
  EXPECT_GE(f.ci_high, 0.5 - 1e-6);
}

TEST(SlopeFit, RecoversLinearRate) {
  const auto ts = doubling(16, 16384);
  const SlopeFit f = slope_fit(ts, power_series(ts, 1.0), 500);
  EXPECT_NEAR(f.slope, 1.0, 1e-6);
}

TEST(SlopeFit, DropsNonpositiveCheckpoints) {
  const std::vector<std::size_t> ts{1, 2, 4, 8, 16};
  const std::vector<Vec> regret{{-1.0, 2.0, 4.0, 8.0, 16.0}, {-1.0, 2.0, 4.0, 8.0, 16.0}};
  const SlopeFit f = slope_fit(ts, regret, 100);
  EXPECT_EQ(f.dropped, std::vector<std::size_t>{1});
  ASSERT_TRUE(f.valid);
  EXPECT_NEAR(f.slope, 1.0, 1e-9);
  EXPECT_FALSE(slope_fit({1, 2, 4, 8}, {{-1.0, 2.0, 4.0, 8.0}}, 0).valid);
}

TEST(Config, RejectsUnknownAndInvalidFields) {
  EXPECT_THROW(config_from_json({{"learner", "alg1"}, {"typo", 1}}), ValidationError);
  EXPECT_THROW(config_from_json({{"learner", "alg1"}, {"T", 0}}), ValidationError);
  EXPECT_THROW(config_from_json({{"learner", "alg3"}, {"gamma_rule", "huge"}}), ValidationError);
  EXPECT_THROW(config_from_json({{"learner", "alg1"}, {"eta_rule", "guess"}}), ValidationError);
  EXPECT_THROW(config_from_json({{"learner", "alg9"}}), Error);
}

TEST(Config, RoundTripsThroughJson) {
  const ExperimentConfig c = config_from_json({{"name", "x"},
                                               {"learner", "alg3"},
                                               {"instance", {{"generator", "alg3_toy"}}},
                                               {"gamma_rule", "premise_cap"},
                                               {"T", 512},
                                               {"tau", 16},
                                               {"seed", 4}});
  EXPECT_EQ(c.gamma_rule, "premise_cap");
  EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c));
}

TEST(Run, BanditBoundHoldsAndOutputsAreDeterministic) {
  const ExperimentConfig c = config_from_json({{"name", "bandit"},
                                               {"learner", "alg1"},
                                               {"instance", {{"generator", "bandit"}}},
                                               {"T", 256},
                                               {"replicates", 4},
                                               {"seed", 1}});
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  const RunSummary s = run_experiment(c, a);
  run_experiment(c, b);
  EXPECT_FALSE(s.failed);
  EXPECT_EQ(s.completed, 4u);
  ASSERT_TRUE(s.bound_holds.has_value());
  EXPECT_TRUE(*s.bound_holds);
  for (const char* f : {"summary.json", "trace.csv", "bound.json", "learner_trace.jsonl"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Run, WorkerCountDoesNotChangeResults) {
  Json j = {{"name", "w"}, {"learner", "meta"}, {"instance", {{"seed", 2}}},
            {"T", 128}, {"replicates", 4}, {"seed", 3}};
  const fs::path a = scratch("workers_1"), b = scratch("workers_3");
  j["workers"] = 1;
  run_experiment(config_from_json(j), a);
  j["workers"] = 3;
  run_experiment(config_from_json(j), b);
  EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
}

TEST(Run, Alg3GammaRules) {
  Json j = {{"name", "g"}, {"learner", "alg3"}, {"instance", {{"generator", "alg3_toy"}}},
            {"T", 256}, {"tau", 16}, {"replicates", 1}, {"seed", 5}};
  const RunSummary theorem = run_experiment(config_from_json(j), scratch("gamma_theorem"));
  j["gamma_rule"] = "premise_cap";
  const RunSummary cap = run_experiment(config_from_json(j), scratch("gamma_cap"));
  const double premise = cap.extra.at("premise_cap").get<double>();
  EXPECT_NEAR(cap.gamma, premise, 1e-15);
  EXPECT_LE(theorem.gamma, premise);
  EXPECT_EQ(cap.extra.at("dbi_star_max").get<double>(), 0.0);
}

TEST(Run, OutputDirectoryOverride) {
  ExperimentConfig c;
  c.name = "n";
  EXPECT_EQ(resolve_output_dir(c), fs::path("runs") / "n");
  c.output = "elsewhere";
  EXPECT_EQ(resolve_output_dir(c), fs::path("elsewhere"));
  setenv("DECLAB_RUN_DIR", "from_env", 1);
  EXPECT_EQ(resolve_output_dir(c), fs::path("from_env"));
  unsetenv("DECLAB_RUN_DIR");
}
