#include "declab/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "declab/errors.hpp"

namespace declab {

Vec exp_weights_step(const Vec& log_weights, const Vec& gains, double rate) {
  if (log_weights.size() != gains.size()) throw Error("exp_weights: dimension mismatch");
  double worst = -std::numeric_limits<double>::infinity();
  for (double g : gains) worst = std::max(worst, rate * g);
  if (worst > 1.0) {
    std::ostringstream msg;
    msg << "exp_weights: premise violated, max rate*gain = " << worst << " > 1";
    throw ValidationError(msg.str());
  }
  Vec out(log_weights.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = log_weights[i] + rate * gains[i];
  const double z = log_sum_exp(out);
  for (auto& x : out) x -= z;
  return out;
}

ExpWeightsRun run_exp_weights(const std::vector<Vec>& gains, double rate) {
  ExpWeightsRun run;
  if (gains.empty()) return run;
  const std::size_t n = gains.front().size();
  Vec logw(n, -std::log(static_cast<double>(n)));
  Vec cumulative(n, 0.0);
  double played = 0.0, second = 0.0;
  for (const Vec& g : gains) {
    const Vec p = softmax(logw);
    for (std::size_t i = 0; i < n; ++i) {
      played += p[i] * g[i];
      second += p[i] * g[i] * g[i];
      cumulative[i] += g[i];
    }
    logw = exp_weights_step(logw, g, rate);
  }
  run.regret = *std::max_element(cumulative.begin(), cumulative.end()) - played;
  run.bound = std::log(static_cast<double>(n)) / rate + rate * second;
  return run;
}

LearnerState LearnerState::start(std::size_t n_groups, std::uint64_t seed) {
  LearnerState s;
  s.rho = Belief::uniform(n_groups);
  s.rng = Rng(seed);
  return s;
}

namespace {

std::string round_tag(const LearnerState& state) {
  return " at round " + std::to_string(state.t + 1);
}

SaddleOptions warm_started(const LearnerState& state, SaddleOptions options, std::size_t n,
                           std::size_t m) {
  if (state.last.p.size() == n) options.p0 = state.last.p;
  if (state.last.nu.size() == m) options.y0 = state.last.nu;
  return options;
}

Belief posterior_or_smoothed(const Vec& nu, const PartitionScheme& scheme,
                             const FiniteGame& game, std::size_t pi, std::size_t o) {
  try {
    return posterior_over_partitions(Belief::from_probs(nu), scheme, game, pi, o);
  } catch (const ImpossibleObservation&) {
    // ν underflowed on every element that explains o; fall back to full support.
    return posterior_over_partitions(Belief::from_probs(smooth(nu, 1e-12)), scheme, game, pi, o);
  }
}

std::size_t solve_and_sample(LearnerState& state, const SaddleObjective& obj,
                             const SaddleOptions& options, const char* who) {
  SaddleSolution sol;
  try {
    sol = solve(obj, warm_started(state, options, obj.num_policies(), obj.num_max()));
  } catch (const Error& e) {
    throw Error(std::string(who) + ": " + e.what() + round_tag(state));
  }
  if (!sol.converged) {
    std::ostringstream msg;
    msg << who << ": saddle solver did not converge (gap " << sol.gap << ")" << round_tag(state);
    throw Error(msg.str());
  }
  state.last = std::move(sol);
  const std::size_t pi = state.rng.categorical(state.last.p);
  state.pending_policy = pi;
  return pi;
}

PartitionScheme theta_scheme(const FiniteGame& game,
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

}  // namespace

std::size_t alg1_step(LearnerState& state, const PartitionScheme& scheme, const FiniteGame& game,
                      double eta, std::optional<std::size_t> observation,
                      const SaddleOptions& options) {
  if (state.rho.size() != scheme.num_subsets()) throw Error("alg1: ρ does not cover Φ");
  if (observation) {
    if (!state.pending_policy) throw Error("alg1: observation without a played policy");
    state.rho = posterior_or_smoothed(state.last.nu, scheme, game, *state.pending_policy,
                                      *observation);
  }
  auto obj = make_air_phi(game, scheme, state.rho.probs(), eta);
  return solve_and_sample(state, *obj, options, "alg1");
}

std::size_t alg2_step(LearnerState& state, const std::vector<std::vector<std::size_t>>& theta,
                      const FiniteGame& game, double eta,
                      const std::vector<std::size_t>& meta_policy,
                      std::optional<std::size_t> observation, const SaddleOptions& options) {
  if (state.rho.size() != theta.size()) throw Error("alg2: ρ does not cover Θ");
  if (observation) {
    if (!state.pending_policy) throw Error("alg2: observation without a played policy");
    // InfoAIR beliefs are indexed by model; the Θ scheme enumerates them group by group.
    const PartitionScheme scheme = theta_scheme(game, theta, state.pending_meta);
    Vec nu(scheme.num_elements());
    for (std::size_t e = 0; e < nu.size(); ++e) nu[e] = state.last.nu[scheme.element(e).model];
    state.rho = posterior_or_smoothed(nu, scheme, game, *state.pending_policy, *observation);
  }
  auto obj = make_info_air(game, theta, meta_policy, state.rho.probs(), eta);
  state.pending_meta = meta_policy;
  return solve_and_sample(state, *obj, options, "alg2");
}

void record_round(LearnerState& state, std::size_t o, double regret_increment) {
  if (!state.pending_policy) throw Error("record_round: no policy played");
  RoundRecord r;
  r.t = state.t + 1;
  r.pi = *state.pending_policy;
  r.o = o;
  r.regret_increment = regret_increment;
  r.rho_entropy = entropy(state.rho.probs());
  r.saddle_value = state.last.value;
  r.gap = state.last.gap;
  state.history.push_back(r);
  ++state.t;
}

SimultaneousMetaPolicy::SimultaneousMetaPolicy(std::vector<Transition> transitions, double gamma)
    : transitions_(std::move(transitions)), gamma_(gamma) {
  if (transitions_.empty()) throw ValidationError("meta-policy: no candidate transitions");
  for (const Transition& t : transitions_) {
    t.validate(1e-9);
    cumulative_q_.emplace_back(t.H * t.S * t.A, 0.0);
    policies_.push_back(StagePolicy::uniform(t.S, t.A, t.H));
  }
}

Vec SimultaneousMetaPolicy::update(const Reward& reward) {
  Vec played(transitions_.size());
  for (std::size_t k = 0; k < transitions_.size(); ++k) {
    const Transition& P = transitions_[k];
    const Evaluation ev = dp_eval(P, reward, policies_[k]);
    played[k] = ev.value;
    Vec& cq = cumulative_q_[k];
    for (std::size_t i = 0; i < cq.size(); ++i) cq[i] += ev.Q[i];
    StagePolicy& pi = policies_[k];
    Vec logits(P.A);
    for (std::size_t c = 0; c < P.H * P.S; ++c) {
      for (std::size_t a = 0; a < P.A; ++a) logits[a] = gamma_ * cq[c * P.A + a];
      const Vec row = softmax(logits);
      std::copy(row.begin(), row.end(), pi.prob.begin() + static_cast<std::ptrdiff_t>(c * P.A));
    }
  }
  return played;
}

Matrix OdecTables::payoff(const Vec& rho, double divergence_scale) const {
  if (rho.size() != n_phi) throw Error("odec payoff: ρ does not cover Φ");
  Matrix a(n_policies, Vec(n_models, 0.0));
  for (std::size_t pi = 0; pi < n_policies; ++pi) {
    for (std::size_t j = 0; j < n_models; ++j) {
      double v = -value[pi * n_models + j];
      for (std::size_t phi = 0; phi < n_phi; ++phi) {
        if (rho[phi] == 0.0) continue;
        v += rho[phi] * (predicted[phi * n_models + j] -
                         divergence_scale * divergence[(pi * n_phi + phi) * n_models + j]);
      }
      a[pi][j] = v;
    }
  }
  return a;
}

OdecTables odec_tables(const BilinearEmbedding& emb, const std::vector<StagePolicy>& policies) {
  const HybridFamily& fam = emb.family();
  OdecTables t;
  t.n_policies = policies.size();
  t.n_phi = emb.num_phi();
  t.n_models = fam.transitions.size() * fam.rewards.size();
  const std::size_t nr = fam.rewards.size();
  t.value.assign(t.n_policies * t.n_models, 0.0);
  t.predicted.assign(t.n_phi * t.n_models, 0.0);
  t.divergence.assign(t.n_policies * t.n_phi * t.n_models, 0.0);
  for (std::size_t phi = 0; phi < t.n_phi; ++phi) {
    for (std::size_t r = 0; r < nr; ++r) {
      const double f = emb.predicted_value(phi, fam.rewards[r]);
      for (std::size_t i = 0; i < fam.transitions.size(); ++i) t.predicted[phi * t.n_models + i * nr + r] = f;
    }
  }
  for (std::size_t i = 0; i < fam.transitions.size(); ++i) {
    const Transition& P = fam.transitions[i];
    const std::size_t SA = P.S * P.A;
    std::vector<Vec> occ;
    for (const StagePolicy& pi : policies) occ.push_back(occupancy(P, pi));
    for (std::size_t r = 0; r < nr; ++r) {
      const std::size_t j = i * nr + r;
      for (std::size_t pi = 0; pi < t.n_policies; ++pi) {
        t.value[pi * t.n_models + j] = dp_eval(P, fam.rewards[r], policies[pi]).value;
      }
      for (std::size_t phi = 0; phi < t.n_phi; ++phi) {
        const Vec el = emb.expected_loss(phi, P, fam.rewards[r]);
        for (std::size_t pi = 0; pi < t.n_policies; ++pi) {
          double total = 0.0;
          for (std::size_t h = 0; h < P.H; ++h) {
            double mean = 0.0;
            for (std::size_t k = 0; k < SA; ++k) mean += occ[pi][h * SA + k] * el[h * SA + k];
            total += mean * mean;
          }
          t.divergence[(pi * t.n_phi + phi) * t.n_models + j] = total;
        }
      }
    }
  }
  return t;
}

std::vector<StagePolicy> odec_policies(const BilinearEmbedding& emb) {
  const auto& base = emb.family().policies;
  if (emb.kind() == EmbeddingKind::low_occupancy) return base;
  std::vector<StagePolicy> out;
  for (const StagePolicy& pi : base) {
    const StagePolicy est = emb.est_policy(pi);
    for (double alpha : {0.0, 0.125, 0.25, 0.5, 1.0}) out.push_back(mix_policy(pi, est, alpha));
  }
  return out;
}

namespace {

struct InnerValue {
  double lower = 0.0;
  double upper = 0.0;
  Vec p, nu;
};

InnerValue odec_inner(const OdecTables& t, const Vec& rho, double scale,
                      const SaddleOptions& options) {
  const BilinearObjective obj(t.payoff(rho, scale));
  const SaddleSolution sol = solve(obj, options);
  return {sol.lower, sol.upper, sol.p, sol.nu};
}

// Envelope gradient of ρ ↦ min_p max_j at the solved pair.
Vec odec_gradient(const OdecTables& t, const InnerValue& v, double scale) {
  Vec g(t.n_phi, 0.0);
  for (std::size_t pi = 0; pi < t.n_policies; ++pi) {
    if (v.p[pi] == 0.0) continue;
    for (std::size_t j = 0; j < t.n_models; ++j) {
      const double w = v.p[pi] * v.nu[j];
      if (w == 0.0) continue;
      for (std::size_t phi = 0; phi < t.n_phi; ++phi) {
        g[phi] += w * (t.predicted[phi * t.n_models + j] -
                       scale * t.divergence[(pi * t.n_phi + phi) * t.n_models + j]);
      }
    }
  }
  return g;
}

}  // namespace

OdecResult odec_bound_check(const BilinearEmbedding& emb, double eta, double tol,
                            std::uint64_t seed, int restarts) {
  if (!(eta > 0.0)) throw ValidationError("odec: η must be positive");
  const OdecTables t = odec_tables(emb, odec_policies(emb));
  const double d = static_cast<double>(emb.dim());
  const double H = static_cast<double>(emb.horizon());
  OdecResult res;
  res.bound = emb.kind() == EmbeddingKind::low_occupancy ? eta * d * H / 4.0
                                                         : H * std::sqrt(eta * d / 2.0);
  const double scale = 1.0 / eta;
  SaddleOptions options;
  options.tol = 1e-4;
  res.value = -std::numeric_limits<double>::infinity();
  res.lower = -std::numeric_limits<double>::infinity();

  std::vector<Vec> starts{uniform_vec(t.n_phi)};
  for (std::size_t phi = 0; phi < t.n_phi; ++phi) {
    Vec v(t.n_phi, 0.0);
    v[phi] = 1.0;
    starts.push_back(v);
  }
  Rng rng(seed);
  for (int r = 0; r < restarts; ++r) starts.push_back(rng.dirichlet(t.n_phi, 0.5));

  auto record = [&](const Vec& rho, const InnerValue& v) {
    if (v.upper > res.value) {
      res.value = v.upper;
      res.rho = rho;
    }
    res.lower = std::max(res.lower, v.lower);
  };
  for (const Vec& start : starts) {
    Vec rho = start;
    InnerValue cur = odec_inner(t, rho, scale, options);
    record(rho, cur);
    double step = 1.0;
    for (int it = 0; it < 40 && step > 1e-4; ++it) {
      const Vec g = odec_gradient(t, cur, scale);
      Vec logits(t.n_phi);
      for (std::size_t phi = 0; phi < t.n_phi; ++phi) {
        logits[phi] = std::log(std::max(rho[phi], 1e-300)) + step * g[phi];
      }
      const Vec cand = softmax(logits);
      const InnerValue next = odec_inner(t, cand, scale, options);
      record(cand, next);
      if (next.lower > cur.lower) {
        rho = cand;
        cur = next;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
  }
  res.passed = res.value <= res.bound + tol;
  return res;
}

Alg3Tuning alg3_tuning(const BilinearEmbedding& emb, std::size_t T, double delta) {
  if (T == 0) throw ValidationError("alg3: T must be positive");
  Alg3Tuning tune;
  tune.loss_bound = emb.loss_bound();
  const double L = tune.loss_bound;
  const double n_phi = static_cast<double>(emb.num_phi());
  const double d = static_cast<double>(emb.dim());
  const double H = static_cast<double>(emb.horizon());
  tune.eta = L / std::sqrt(d) * std::sqrt(std::log(n_phi / delta)) *
             std::pow(static_cast<double>(T), -0.25);
  tune.tau = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(T)))));
  const double K = std::max(1.0, std::floor(static_cast<double>(T) / static_cast<double>(tune.tau)));
  tune.gamma = std::min(tune.eta * std::sqrt(std::log(n_phi) / K), 1.0 / (4.0 * tune.eta + 4.0 * H * L * L));
  return tune;
}

namespace {

void alg3_solve(Alg3State& state, const OdecTables& tables, double eta,
                const SaddleOptions& options) {
  const Vec rho = softmax(state.log_rho);
  SaddleOptions opt = options;
  if (state.p.size() == tables.n_policies) opt.p0 = state.p;
  const BilinearObjective obj(tables.payoff(rho, 1.0 / (8.0 * eta)));
  const SaddleSolution sol = solve(obj, opt);
  if (!sol.converged) {
    std::ostringstream msg;
    msg << "alg3: minimax did not converge (gap " << sol.gap << ") at epoch " << state.k + 1;
    throw Error(msg.str());
  }
  state.p = sol.p;
  state.saddle_value = sol.value;
  state.gap = sol.gap;
  state.policy = state.rng.categorical(state.p);
}

}  // namespace

Alg3State alg3_start(const BilinearEmbedding& emb, const OdecTables& tables, double eta,
                     const SaddleOptions& options, std::uint64_t seed) {
  if (tables.n_phi != emb.num_phi()) throw Error("alg3: tables do not match the embedding");
  if (!(eta > 0.0)) throw ValidationError("alg3: η must be positive");
  Alg3State state;
  state.log_rho.assign(emb.num_phi(), -std::log(static_cast<double>(emb.num_phi())));
  state.rng = Rng(seed);
  alg3_solve(state, tables, eta, options);
  return state;
}

void alg3_epoch(Alg3State& state, const BilinearEmbedding& emb, const OdecTables& tables,
                const EpochData& data, const Alg3Options& options) {
  const double eta = options.eta, gamma = options.gamma;
  if (!(eta > 0.0) || !(gamma >= 0.0)) throw ValidationError("alg3: η must be positive, γ ≥ 0");
  if (data.trajectories.empty() || data.trajectories.size() != data.rewards.size()) {
    throw ValidationError("alg3: epoch needs one revealed reward per trajectory");
  }
  const std::size_t H = emb.horizon();
  if (options.check_premise) {
    const double L = options.loss_bound > 0.0 ? options.loss_bound : emb.loss_bound();
    const double cap = 1.0 / (4.0 * eta + 4.0 * static_cast<double>(H) * L * L);
    if (gamma > cap) {
      std::ostringstream msg;
      msg << "alg3: γ = " << gamma << " exceeds 1/(4η + 4HL²) = " << cap;
      throw ValidationError(msg.str());
    }
  }
  Reward avg = data.rewards.front();
  std::fill(avg.R.begin(), avg.R.end(), 0.0);
  for (const Reward& r : data.rewards) {
    for (std::size_t i = 0; i < avg.R.size(); ++i) avg.R[i] += r.R[i];
  }
  const double tau = static_cast<double>(data.rewards.size());
  for (auto& x : avg.R) x /= tau;

  Vec gains(emb.num_phi());
  for (std::size_t phi = 0; phi < emb.num_phi(); ++phi) {
    const Vec f = emb.f_table(phi, avg);
    double disc = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
      double mean = 0.0;
      for (const auto& traj : data.trajectories) {
        const auto& o = traj[h];
        mean += emb.loss(phi, f, avg, h, o[0], o[1], o[2]);
      }
      mean /= tau;
      disc += mean * mean;
    }
    gains[phi] = eta * emb.predicted_value(phi, avg) - disc;
  }
  state.log_rho = exp_weights_step(state.log_rho, gains, gamma);
  ++state.k;
  alg3_solve(state, tables, eta, options.saddle);
}

}  // namespace declab
