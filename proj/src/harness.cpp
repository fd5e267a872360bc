#include "declab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "declab/complexity.hpp"
#include "declab/errors.hpp"
#include "declab/learners.hpp"
#include "declab/tolerances.hpp"

namespace declab {

LearnerKind parse_learner_kind(const std::string& name) {
  if (name == "alg1") return LearnerKind::alg1;
  if (name == "alg2") return LearnerKind::alg2;
  if (name == "meta") return LearnerKind::meta;
  if (name == "alg3") return LearnerKind::alg3;
  throw Error("unknown learner kind: " + name);
}

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::alg1: return "alg1";
    case LearnerKind::alg2: return "alg2";
    case LearnerKind::meta: return "meta";
    case LearnerKind::alg3: return "alg3";
  }
  return "alg1";
}

ExperimentConfig config_from_json(const Json& j) {
  static const std::set<std::string> known = {
      "name",      "learner",    "instance", "scheme",     "eta",        "gamma",
      "tau",       "eta_rule",   "gamma_rule", "adversary", "committed", "meta_policy", "embedding",
      "d",         "delta",      "T",        "replicates", "seed",       "output",
      "trace_every", "checkpoints", "saddle", "workers",   "bootstrap"};
  if (!j.is_object()) throw ValidationError("config: expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ValidationError("config: unknown field '" + key + "'");
  }
  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    c.learner = parse_learner_kind(j.value("learner", std::string("alg1")));
    c.instance = j.value("instance", Json::object());
    c.scheme = j.value("scheme", c.scheme);
    if (j.contains("eta") && !j.at("eta").is_null()) c.eta = j.at("eta").get<double>();
    if (j.contains("gamma") && !j.at("gamma").is_null()) c.gamma = j.at("gamma").get<double>();
    if (j.contains("tau") && !j.at("tau").is_null()) c.tau = j.at("tau").get<std::size_t>();
    c.eta_rule = j.value("eta_rule", c.eta_rule);
    c.gamma_rule = j.value("gamma_rule", c.gamma_rule);
    if (j.contains("adversary")) c.adversary = adversary_from_json(j.at("adversary"));
    if (j.contains("committed")) {
      const Json& v = j.at("committed");
      c.committed = v.is_string() ? v.get<std::string>() : std::to_string(v.get<std::size_t>());
    }
    c.meta_policy = j.value("meta_policy", c.meta_policy);
    c.embedding = j.value("embedding", c.embedding);
    c.d = j.value("d", c.d);
    c.delta = j.value("delta", c.delta);
    c.T = j.value("T", c.T);
    c.replicates = j.value("replicates", c.replicates);
    c.seed = j.value("seed", c.seed);
    c.output = j.value("output", c.output);
    c.trace_every = j.value("trace_every", c.trace_every);
    c.checkpoints = j.value("checkpoints", c.checkpoints);
    if (j.contains("saddle")) c.saddle = saddle_options_from_json(j.at("saddle"));
    c.workers = j.value("workers", c.workers);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (c.T == 0 || c.replicates == 0) throw ValidationError("config: T and replicates must be positive");
  if (c.trace_every == 0) throw ValidationError("config: trace_every must be positive");
  if (c.eta_rule != "dec_slope" && c.eta_rule != "anytime") {
    throw ValidationError("config: eta_rule must be dec_slope or anytime");
  }
  if (c.gamma_rule != "theorem" && c.gamma_rule != "premise_cap") {
    throw ValidationError("config: gamma_rule must be theorem or premise_cap");
  }
  for (std::size_t t : c.checkpoints) {
    if (t == 0 || t > c.T) throw ValidationError("config: checkpoint outside [1, T]", {t});
  }
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j{{"name", c.name},
         {"learner", to_string(c.learner)},
         {"instance", c.instance},
         {"eta_rule", c.eta_rule},
         {"gamma_rule", c.gamma_rule},
         {"adversary", adversary_to_json(c.adversary)},
         {"committed", c.committed},
         {"embedding", c.embedding},
         {"d", c.d},
         {"delta", c.delta},
         {"T", c.T},
         {"replicates", c.replicates},
         {"seed", c.seed},
         {"trace_every", c.trace_every},
         {"checkpoints", c.checkpoints},
         {"saddle", saddle_options_to_json(c.saddle)},
         {"bootstrap", c.bootstrap}};
  if (!c.scheme.empty()) j["scheme"] = c.scheme;
  if (c.eta) j["eta"] = *c.eta;
  if (c.gamma) j["gamma"] = *c.gamma;
  if (c.tau) j["tau"] = *c.tau;
  if (!c.meta_policy.empty()) j["meta_policy"] = c.meta_policy;
  if (!c.output.empty()) j["output"] = c.output;
  return j;
}

namespace {

struct LineFit {
  double slope = 0.0;
  bool ok = false;
};

LineFit fit_log_log(const std::vector<std::size_t>& checkpoints, const Vec& mean) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    if (!(mean[c] > 0.0)) continue;
    const double x = std::log(static_cast<double>(checkpoints[c]));
    const double y = std::log(mean[c]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return {};
  const double dn = static_cast<double>(n);
  const double den = sxx - sx * sx / dn;
  if (!(den > 0.0)) return {};
  return {(sxy - sx * sy / dn) / den, true};
}

Vec column_means(const std::vector<Vec>& regret, const std::vector<std::size_t>& rows,
                 std::size_t n_cols) {
  Vec mean(n_cols, 0.0);
  for (std::size_t r : rows) {
    for (std::size_t c = 0; c < n_cols; ++c) mean[c] += regret[r][c];
  }
  for (auto& m : mean) m /= static_cast<double>(rows.size());
  return mean;
}

double percentile(Vec values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

SlopeFit slope_fit(const std::vector<std::size_t>& checkpoints, const std::vector<Vec>& regret,
                   std::size_t bootstrap, std::uint64_t seed) {
  SlopeFit fit;
  if (regret.empty()) return fit;
  const std::size_t n_cols = checkpoints.size();
  std::vector<std::size_t> all(regret.size());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  const Vec mean = column_means(regret, all, n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    (mean[c] > 0.0 ? fit.used : fit.dropped).push_back(checkpoints[c]);
  }
  if (fit.used.size() < 4) return fit;
  const LineFit point = fit_log_log(checkpoints, mean);
  if (!point.ok) return fit;
  fit.slope = point.slope;
  fit.ci_low = fit.ci_high = point.slope;
  fit.valid = true;
  if (bootstrap == 0) return fit;
  Rng rng(seed);
  Vec slopes;
  std::vector<std::size_t> rows(regret.size());
  for (std::size_t b = 0; b < bootstrap; ++b) {
    for (auto& r : rows) r = rng.index(regret.size());
    const LineFit f = fit_log_log(checkpoints, column_means(regret, rows, n_cols));
    if (f.ok) slopes.push_back(f.slope);
  }
  if (!slopes.empty()) {
    fit.ci_low = percentile(slopes, 0.025);
    fit.ci_high = percentile(slopes, 0.975);
  }
  return fit;
}

Json RunSummary::to_json() const {
  Json j{{"name", name},
         {"learner", learner},
         {"T", T},
         {"replicates", replicates},
         {"completed", completed},
         {"aborted", aborted},
         {"errors", errors},
         {"eta", eta},
         {"gamma", gamma},
         {"tau", tau},
         {"mean_regret", mean_regret},
         {"se_regret", se_regret},
         {"bound", {{"estimation", estimation_term},
                    {"decision", decision_term},
                    {"total", estimation_term + decision_term}}},
         {"checkpoints", checkpoints},
         {"mean_regret_at", mean_regret_at},
         {"slope", {{"estimate", slope.slope},
                    {"ci_low", slope.ci_low},
                    {"ci_high", slope.ci_high},
                    {"used", slope.used},
                    {"dropped", slope.dropped},
                    {"valid", slope.valid}}},
         {"extra", extra},
         {"failed", failed}};
  j["bound_holds"] = bound_holds ? Json(*bound_holds) : Json(nullptr);
  return j;
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv("DECLAB_RUN_DIR"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  if (!config.output.empty()) return config.output;
  return std::filesystem::path("runs") / config.name;
}

namespace {

struct TraceRow {
  std::size_t t = 0;
  double regret = 0.0;
  double rho_entropy = 0.0;
  double saddle_value = 0.0;
  double gap = 0.0;
};

struct ReplicateOutput {
  bool aborted = false;
  std::string error;
  Vec regret;  // cumulative regret after each round, index t − 1
  std::vector<TraceRow> rows;
  std::vector<Json> lines;
  Json extra = Json::object();
};

// Read-only state shared by all replicates.
struct Prepared {
  GameInstance inst;
  std::vector<std::size_t> meta_policy;
  PartitionScheme theta_scheme;
  MetaToy toy;
  std::optional<BilinearEmbedding> emb;
  OdecTables tables;
  Matrix comparator_values;  // [π][reward], under the true transition
  double eta = 0.0;
  double gamma = 0.0;
  std::size_t tau = 0;
  double loss_bound = 0.0;
  std::size_t n_committed = 1;
  double estimation = 0.0;
  double decision = 0.0;  // over the full horizon T
  Json extra = Json::object();
};

std::size_t committed_index(const ExperimentConfig& c, std::size_t n, std::size_t replicate) {
  if (c.committed == "cycle") return replicate % n;
  std::size_t idx = 0;
  try {
    idx = std::stoul(c.committed);
  } catch (const std::exception&) {
    throw ValidationError("config: committed must be \"cycle\" or an index");
  }
  if (idx >= n) throw ValidationError("config: committed index out of range", {idx});
  return idx;
}

GameInstance load_game_instance(const Json& spec) {
  if (spec.contains("file")) return game_from_json(load_json(spec.at("file").get<std::string>()));
  if (spec.contains("bandit_means")) {
    GameInstance inst;
    inst.kind = "bandit";
    inst.game = bandit_game(spec.at("bandit_means").get<std::vector<std::array<double, 2>>>());
    inst.scheme = make_standard_partitions(inst.game, PartitionKind::per_model_optimal);
    return inst;
  }
  if (!spec.contains("generator")) throw ValidationError("config: instance needs generator, file or bandit_means");
  return make_game_instance(spec.at("generator").get<std::string>(), spec.value("seed", std::uint64_t{0}));
}

HybridFamily load_family(const Json& spec) {
  if (spec.contains("file")) return family_from_json(load_json(spec.at("file").get<std::string>()));
  const std::string gen = spec.value("generator", std::string("alg3_toy"));
  const auto seed = spec.value("seed", std::uint64_t{0});
  if (gen == "alg3_toy") return alg3_toy_family();
  if (gen == "low_occupancy") return low_occupancy_family(seed);
  if (gen == "low_rank") return low_rank_family(seed);
  throw ValidationError("config: unknown family generator " + gen);
}

void apply_scheme(GameInstance& inst, const std::string& scheme) {
  if (scheme.empty()) return;
  if (scheme == "product") {
    if (inst.theta.empty()) throw ValidationError("config: product scheme needs an instance with Θ");
    inst.scheme = make_product_partitions(inst.game, inst.theta);
  } else {
    inst.scheme = make_standard_partitions(inst.game, parse_partition_kind(scheme));
    inst.theta.clear();
  }
}

PartitionScheme make_theta_scheme(const FiniteGame& game,
                                  const std::vector<std::vector<std::size_t>>& theta,
                                  const std::vector<std::size_t>& meta) {
  std::vector<std::vector<Element>> subsets;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    std::vector<Element> phi;
    for (std::size_t m : theta[k]) phi.push_back({m, meta[k]});
    subsets.push_back(std::move(phi));
  }
  return PartitionScheme(game, std::move(subsets));
}

// η from the DEC slope: c = maxmin AIR(η)/η at η = √(log|Φ|/(T c)), iterated from the
// anytime choice.
double tune_eta(const ExperimentConfig& c, const FiniteGame& game, const PartitionScheme& scheme,
                Json& extra) {
  const double log_phi = std::log(std::max<double>(2.0, static_cast<double>(scheme.num_subsets())));
  const double T = static_cast<double>(c.T);
  double eta = std::sqrt(log_phi / T);
  if (c.eta_rule == "anytime") return eta;
  Json path = Json::array({eta});
  for (int it = 0; it < 4; ++it) {
    const double air = maxmin_air(game, scheme, eta).value;
    const double slope = air / eta;
    if (!(slope > 0.0)) break;
    eta = std::sqrt(log_phi / (T * slope));
    path.push_back(eta);
  }
  extra["eta_path"] = path;
  return eta;
}

Prepared prepare(const ExperimentConfig& c) {
  Prepared p;
  const double T = static_cast<double>(c.T);
  switch (c.learner) {
    case LearnerKind::alg1: {
      p.inst = load_game_instance(c.instance);
      apply_scheme(p.inst, c.scheme);
      if (p.inst.scheme.num_subsets() == 0) throw ValidationError("config: instance has no partition");
      p.eta = c.eta ? *c.eta : tune_eta(c, p.inst.game, p.inst.scheme, p.extra);
      p.n_committed = p.inst.scheme.num_subsets();
      p.estimation = std::log(static_cast<double>(p.inst.scheme.num_subsets())) / p.eta;
      const DecResult air = maxmin_air(p.inst.game, p.inst.scheme, p.eta);
      p.decision = T * air.value;
      p.extra["maxmin_air"] = air.value;
      p.extra["maxmin_air_gap"] = air.gap;
      break;
    }
    case LearnerKind::alg2: {
      p.inst = load_game_instance(c.instance);
      if (p.inst.theta.empty()) throw ValidationError("config: alg2 needs an instance with Θ");
      const auto& game = p.inst.game;
      p.meta_policy = c.meta_policy;
      if (p.meta_policy.empty()) {
        for (const auto& group : p.inst.theta) {
          std::size_t best = 0;
          double best_value = -1.0;
          for (std::size_t pi = 0; pi < game.num_policies(); ++pi) {
            double v = 0.0;
            for (std::size_t m : group) v += game.value(m, pi);
            if (v > best_value) {
              best_value = v;
              best = pi;
            }
          }
          p.meta_policy.push_back(best);
        }
      }
      if (p.meta_policy.size() != p.inst.theta.size()) {
        throw ValidationError("config: meta_policy must name one policy per group");
      }
      p.theta_scheme = make_theta_scheme(game, p.inst.theta, p.meta_policy);
      p.eta = c.eta ? *c.eta : tune_eta(c, game, p.theta_scheme, p.extra);
      p.n_committed = p.inst.theta.size();
      p.estimation = std::log(static_cast<double>(p.inst.theta.size())) / p.eta;
      const DecResult air = maxmin_air(game, p.theta_scheme, p.eta);
      p.decision = T * air.value;
      p.extra["maxmin_info_air"] = air.value;
      p.extra["meta_policy"] = p.meta_policy;
      break;
    }
    case LearnerKind::meta: {
      p.toy = meta_toy(c.instance.value("seed", std::uint64_t{0}),
                       c.instance.value("n_rewards", std::size_t{8}));
      const Transition& t0 = p.toy.transitions.front();
      const double logA = std::log(static_cast<double>(t0.A));
      p.gamma = c.gamma ? *c.gamma : std::sqrt(logA / T);
      p.n_committed = p.toy.transitions.size();
      const double H = static_cast<double>(t0.H);
      p.estimation = H * logA / p.gamma;
      p.decision = H * p.gamma * T;
      break;
    }
    case LearnerKind::alg3: {
      HybridFamily family = load_family(c.instance);
      p.emb.emplace(parse_embedding_kind(c.embedding), std::move(family), c.d);
      const BilinearEmbedding& emb = *p.emb;
      const Alg3Tuning tune = alg3_tuning(emb, c.T, c.delta);
      p.loss_bound = tune.loss_bound;
      p.eta = c.eta ? *c.eta : tune.eta;
      p.tau = c.tau ? *c.tau : tune.tau;
      if (p.tau == 0) throw ValidationError("config: tau must be positive");
      const double K = std::max(1.0, std::floor(T / static_cast<double>(p.tau)));
      const double H = static_cast<double>(emb.horizon());
      const double n_phi = static_cast<double>(emb.num_phi());
      const double cap = 1.0 / (4.0 * p.eta + 4.0 * H * p.loss_bound * p.loss_bound);
      if (c.gamma) {
        p.gamma = *c.gamma;
      } else if (c.gamma_rule == "premise_cap") {
        p.gamma = cap;
      } else {
        p.gamma = std::min(p.eta * std::sqrt(std::log(n_phi) / K), cap);
      }
      p.tables = odec_tables(emb, emb.family().policies);
      p.n_committed = emb.family().transitions.size();
      p.estimation = static_cast<double>(p.tau) * std::log(n_phi) / (p.gamma * p.eta);
      p.decision = T * 2.0 * p.eta * static_cast<double>(emb.dim()) * H;
      p.extra["loss_bound"] = p.loss_bound;
      p.extra["premise_cap"] = cap;
      p.extra["num_phi"] = emb.num_phi();
      p.extra["theorem_tuning"] = {{"eta", tune.eta}, {"gamma", tune.gamma}, {"tau", tune.tau}};
      break;
    }
  }
  return p;
}

void trace(ReplicateOutput& out, const ExperimentConfig& c, std::size_t t, double regret,
           double entropy, double value, double gap) {
  if (t % c.trace_every == 0 || t == c.T) out.rows.push_back({t, regret, entropy, value, gap});
}

ReplicateOutput run_game_replicate(const Prepared& p, const ExperimentConfig& c, std::size_t r) {
  ReplicateOutput out;
  const std::uint64_t base = mix_seed(c.seed, r);
  const bool alg2 = c.learner == LearnerKind::alg2;
  const FiniteGame& game = p.inst.game;
  const PartitionScheme& env_scheme = alg2 ? p.theta_scheme : p.inst.scheme;
  const std::size_t committed = committed_index(c, p.n_committed, r);
  GameEnvironment env(game, env_scheme, committed, c.adversary, mix_seed(base, 2));
  LearnerState state = LearnerState::start(alg2 ? p.inst.theta.size() : p.inst.scheme.num_subsets(),
                                           mix_seed(base, 1));
  std::optional<std::size_t> obs;
  double cumulative = 0.0;
  out.regret.reserve(c.T);
  for (std::size_t t = 1; t <= c.T; ++t) {
    const std::size_t pi =
        alg2 ? alg2_step(state, p.inst.theta, game, p.eta, p.meta_policy, obs, c.saddle)
             : alg1_step(state, p.inst.scheme, game, p.eta, obs, c.saddle);
    const auto o = env.step(pi, state.last.p);
    record_round(state, o.o, o.regret_increment);
    obs = o.o;
    cumulative += o.regret_increment;
    out.regret.push_back(cumulative);
    const RoundRecord& rec = state.history.back();
    trace(out, c, t, cumulative, rec.rho_entropy, rec.saddle_value, rec.gap);
    if (r == 0) {
      out.lines.push_back({{"t", t},
                           {"pi", pi},
                           {"o", o.o},
                           {"element", o.element},
                           {"regret_increment", o.regret_increment},
                           {"rho_entropy", rec.rho_entropy},
                           {"saddle_value", rec.saddle_value},
                           {"gap", rec.gap}});
    }
  }
  out.extra["committed"] = committed;
  return out;
}

double mean_policy_entropy(const StagePolicy& pi) {
  double total = 0.0;
  for (std::size_t c = 0; c < pi.H * pi.S; ++c) {
    total += entropy(Vec(pi.prob.begin() + static_cast<std::ptrdiff_t>(c * pi.A),
                         pi.prob.begin() + static_cast<std::ptrdiff_t>((c + 1) * pi.A)));
  }
  return total / static_cast<double>(pi.H * pi.S);
}

ReplicateOutput run_meta_replicate(const Prepared& p, const ExperimentConfig& c, std::size_t r) {
  ReplicateOutput out;
  const std::uint64_t base = mix_seed(c.seed, r);
  const auto& transitions = p.toy.transitions;
  const std::size_t theta_star = committed_index(c, p.n_committed, r);
  const Transition& t0 = transitions.front();
  SimultaneousMetaPolicy meta(transitions, p.gamma);
  HybridEnvironment env(transitions, theta_star, p.toy.rewards, c.adversary,
                        FeedbackKind::full_info_models, StagePolicy::uniform(t0.S, t0.A, t0.H),
                        mix_seed(base, 2));
  Reward total{t0.S, t0.A, t0.H, Vec(t0.H * t0.S * t0.A, 0.0)};
  Vec played(transitions.size(), 0.0), component(transitions.size(), 0.0);
  out.regret.reserve(c.T);
  for (std::size_t t = 1; t <= c.T; ++t) {
    const double entropy_star = mean_policy_entropy(meta.policy(theta_star));
    const auto o = env.step(meta.policy(theta_star), {meta.policy(theta_star)}, {1.0});
    const Vec v = meta.update(*o.reward);
    for (std::size_t i = 0; i < total.R.size(); ++i) total.R[i] += o.reward->R[i];
    for (std::size_t k = 0; k < transitions.size(); ++k) {
      played[k] += v[k];
      component[k] = dp_optimal(transitions[k], total).eval.value - played[k];
    }
    out.regret.push_back(component[theta_star]);
    trace(out, c, t, component[theta_star], entropy_star, 0.0, 0.0);
    if (r == 0) {
      out.lines.push_back({{"t", t},
                           {"reward_index", o.reward_index},
                           {"played", v},
                           {"component_regret", component}});
    }
  }
  out.extra["theta_star"] = theta_star;
  out.extra["component_regret"] = component;
  return out;
}

ReplicateOutput run_alg3_replicate(const Prepared& p, const ExperimentConfig& c, std::size_t r) {
  ReplicateOutput out;
  const std::uint64_t base = mix_seed(c.seed, r);
  const BilinearEmbedding& emb = *p.emb;
  const HybridFamily& fam = emb.family();
  const std::size_t theta_star = committed_index(c, p.n_committed, r);
  const Transition& P = fam.transitions[theta_star];
  HybridEnvironment env(fam.transitions, theta_star, fam.rewards, c.adversary,
                        FeedbackKind::full_info_reward, fam.policies.front(), mix_seed(base, 2));
  Matrix values(fam.policies.size(), Vec(fam.rewards.size()));
  for (std::size_t pi = 0; pi < fam.policies.size(); ++pi) {
    for (std::size_t k = 0; k < fam.rewards.size(); ++k) {
      values[pi][k] = dp_eval(P, fam.rewards[k], fam.policies[pi]).value;
    }
  }
  std::vector<std::size_t> star_functions;
  for (std::size_t phi = 0; phi < emb.num_phi(); ++phi) {
    if (emb.functions()[phi].transition == theta_star) star_functions.push_back(phi);
  }
  Alg3Options options;
  options.eta = p.eta;
  options.gamma = p.gamma;
  options.loss_bound = p.loss_bound;
  options.saddle = c.saddle;
  Alg3State state = alg3_start(emb, p.tables, p.eta, c.saddle, mix_seed(base, 1));
  Vec cumulative(fam.policies.size(), 0.0);
  double played = 0.0, dbi_max = 0.0;
  std::size_t dbi_checks = 0;
  out.regret.reserve(c.T);
  EpochData data;
  for (std::size_t t = 1; t <= c.T; ++t) {
    const auto o = env.step(fam.policies[state.policy], fam.policies, state.p);
    for (std::size_t pi = 0; pi < cumulative.size(); ++pi) cumulative[pi] += values[pi][o.reward_index];
    played += values[state.policy][o.reward_index];
    const double regret = *std::max_element(cumulative.begin(), cumulative.end()) - played;
    out.regret.push_back(regret);
    data.policy = state.policy;
    data.trajectories.push_back(o.steps);
    data.rewards.push_back(*o.reward);
    if (data.trajectories.size() < p.tau && t < c.T) continue;

    Reward avg = data.rewards.front();
    std::fill(avg.R.begin(), avg.R.end(), 0.0);
    for (const Reward& rw : data.rewards) {
      for (std::size_t i = 0; i < avg.R.size(); ++i) avg.R[i] += rw.R[i];
    }
    for (auto& x : avg.R) x /= static_cast<double>(data.rewards.size());
    for (std::size_t phi : star_functions) {
      dbi_max = std::max(dbi_max, bilinear_divergence(emb, fam.policies[state.policy], phi, P, avg));
      ++dbi_checks;
    }
    const std::size_t played_policy = state.policy;
    if (t < c.T) alg3_epoch(state, emb, p.tables, data, options);
    const double rho_entropy = entropy(softmax(state.log_rho));
    if (t % c.trace_every < data.trajectories.size() || t == c.T) {
      out.rows.push_back({t, regret, rho_entropy, state.saddle_value, state.gap});
    }
    if (r == 0) {
      out.lines.push_back({{"epoch", state.k},
                           {"t", t},
                           {"policy", played_policy},
                           {"regret", regret},
                           {"rho_entropy", rho_entropy},
                           {"saddle_value", state.saddle_value},
                           {"gap", state.gap}});
    }
    data = EpochData{};
  }
  out.extra["theta_star"] = theta_star;
  out.extra["dbi_star_max"] = dbi_max;
  out.extra["dbi_checks"] = dbi_checks;
  return out;
}

ReplicateOutput run_replicate(const Prepared& p, const ExperimentConfig& c, std::size_t r) {
  try {
    switch (c.learner) {
      case LearnerKind::alg1:
      case LearnerKind::alg2: return run_game_replicate(p, c, r);
      case LearnerKind::meta: return run_meta_replicate(p, c, r);
      case LearnerKind::alg3: return run_alg3_replicate(p, c, r);
    }
  } catch (const Error& e) {
    ReplicateOutput out;
    out.aborted = true;
    out.error = "replicate " + std::to_string(r) + ": " + e.what();
    return out;
  }
  return {};
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::size_t> default_checkpoints(std::size_t T) {
  std::vector<std::size_t> out;
  for (int k = 6; k >= 0; --k) {
    const std::size_t t = T >> k;
    if (t >= 1 && (out.empty() || out.back() != t)) out.push_back(t);
  }
  return out;
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
  const Prepared p = prepare(c);
  std::vector<ReplicateOutput> results(c.replicates);
  std::size_t workers = c.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : c.workers;
  workers = std::min(workers, c.replicates);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t r = next++; r < c.replicates; r = next++) results[r] = run_replicate(p, c, r);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  RunSummary s;
  s.name = c.name;
  s.learner = to_string(c.learner);
  s.T = c.T;
  s.replicates = c.replicates;
  s.eta = p.eta;
  s.gamma = p.gamma;
  s.tau = p.tau;
  s.estimation_term = p.estimation;
  s.decision_term = p.decision;
  s.checkpoints = c.checkpoints.empty() ? default_checkpoints(c.T) : c.checkpoints;
  s.extra = p.extra;

  std::vector<Vec> at;
  Vec finals;
  Json per_replicate = Json::array();
  for (std::size_t r = 0; r < results.size(); ++r) {
    const ReplicateOutput& o = results[r];
    if (o.aborted) {
      ++s.aborted;
      s.errors.push_back(o.error);
      continue;
    }
    ++s.completed;
    Vec row;
    for (std::size_t t : s.checkpoints) row.push_back(o.regret[t - 1]);
    at.push_back(std::move(row));
    finals.push_back(o.regret.back());
    per_replicate.push_back(o.extra);
  }
  s.failed = static_cast<double>(s.aborted) >
             default_tolerances().abort_fraction * static_cast<double>(c.replicates);
  if (!finals.empty()) {
    double mean = 0.0;
    for (double x : finals) mean += x;
    mean /= static_cast<double>(finals.size());
    double var = 0.0;
    for (double x : finals) var += (x - mean) * (x - mean);
    const double n = static_cast<double>(finals.size());
    s.mean_regret = mean;
    s.se_regret = n > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
    s.mean_regret_at.assign(s.checkpoints.size(), 0.0);
    for (const Vec& row : at) {
      for (std::size_t k = 0; k < row.size(); ++k) s.mean_regret_at[k] += row[k] / n;
    }
    s.slope = slope_fit(s.checkpoints, at, c.bootstrap, mix_seed(c.seed, 0x5eed));
  }
  s.extra["replicates"] = per_replicate;
  if (!finals.empty()) {
    switch (c.learner) {
      case LearnerKind::alg1:
      case LearnerKind::alg2:
        s.bound_holds = s.mean_regret <= s.estimation_term + s.decision_term + 3.0 * s.se_regret;
        break;
      case LearnerKind::meta: {
        bool holds = true;
        double worst = 0.0;
        for (const Json& e : per_replicate) {
          for (double v : e.at("component_regret").get<Vec>()) worst = std::max(worst, v);
        }
        holds = worst <= s.estimation_term + s.decision_term;
        s.extra["worst_component_regret"] = worst;
        s.bound_holds = holds;
        break;
      }
      case LearnerKind::alg3: {
        double worst = 0.0;
        for (const Json& e : per_replicate) worst = std::max(worst, e.at("dbi_star_max").get<double>());
        s.extra["dbi_star_max"] = worst;
        break;
      }
    }
  }

  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir / "trace.csv");
    csv << "replicate,t,regret,rho_entropy,saddle_value,gap\n";
    for (std::size_t r = 0; r < results.size(); ++r) {
      for (const TraceRow& row : results[r].rows) {
        csv << r << ',' << row.t << ',' << fmt(row.regret) << ',' << fmt(row.rho_entropy) << ','
            << fmt(row.saddle_value) << ',' << fmt(row.gap) << '\n';
      }
    }
  }
  {
    Json rows = Json::array();
    for (std::size_t t : s.checkpoints) {
      const double frac = static_cast<double>(t) / static_cast<double>(c.T);
      rows.push_back({{"t", t}, {"bound", s.estimation_term + frac * s.decision_term}});
    }
    save_json(out_dir / "bound.json", {{"estimation", s.estimation_term},
                                       {"decision", s.decision_term},
                                       {"checkpoints", rows}});
  }
  {
    std::ofstream jsonl(out_dir / "learner_trace.jsonl");
    for (const Json& line : results.front().lines) jsonl << line.dump() << '\n';
  }
  save_json(out_dir / "config.json", config_to_json(c));
  save_json(out_dir / "summary.json", s.to_json());
  return s;
}

}  // namespace declab
