#include "declab/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/Dense>

#include "declab/errors.hpp"

namespace declab {

void Transition::validate(double tol) const {
  if (S == 0 || A == 0 || H == 0) throw ValidationError("transition: empty dimension");
  if (s1 >= S) throw ValidationError("transition: start state out of range");
  if (P.size() != H * S * A * S) throw ValidationError("transition: table has wrong size");
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const double* r = row(h, s, a);
        double total = 0.0;
        for (std::size_t s2 = 0; s2 < S; ++s2) {
          if (!(r[s2] >= 0.0) || !std::isfinite(r[s2])) {
            throw ValidationError("transition: negative or non-finite entry", {h, s, a, s2});
          }
          total += r[s2];
        }
        if (std::abs(total - 1.0) > tol) {
          throw ValidationError("transition: row does not sum to 1", {h, s, a});
        }
      }
    }
  }
}

Transition Transition::random(Rng& rng, std::size_t S, std::size_t A, std::size_t H,
                              double alpha) {
  Transition t{S, A, H, 0, Vec(H * S * A * S)};
  for (std::size_t k = 0; k < H * S * A; ++k) {
    const Vec row = rng.dirichlet(S, alpha);
    std::copy(row.begin(), row.end(), t.P.begin() + static_cast<std::ptrdiff_t>(k * S));
  }
  return t;
}

void Reward::validate() const {
  if (R.size() != H * S * A) throw ValidationError("reward: table has wrong size");
  for (std::size_t i = 0; i < R.size(); ++i) {
    if (!(R[i] >= 0.0 && R[i] <= 1.0)) throw ValidationError("reward: entry outside [0,1]", {i});
  }
}

Reward Reward::random(Rng& rng, std::size_t S, std::size_t A, std::size_t H, double lo,
                      double hi) {
  Reward r{S, A, H, Vec(H * S * A)};
  for (auto& x : r.R) x = rng.uniform(lo, hi) / static_cast<double>(H);
  return r;
}

void TabularMDP::validate(double tol) const {
  transition.validate(tol);
  if (reward.S != S() || reward.A != A() || reward.H != H()) {
    throw ValidationError("mdp: reward shape does not match transition");
  }
  reward.validate();
  const OptimalSolution opt = dp_optimal(transition, reward);
  for (std::size_t s = 0; s < S(); ++s) {
    if (opt.eval.V[s] > 1.0 + tol) {
      throw ValidationError("mdp: cumulative reward can exceed 1", {s});
    }
  }
}

void StagePolicy::validate(double tol) const {
  if (prob.size() != H * S * A) throw ValidationError("policy: table has wrong size");
  for (std::size_t k = 0; k < H * S; ++k) {
    double total = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      const double x = prob[k * A + a];
      if (!(x >= 0.0)) throw ValidationError("policy: negative probability", {k, a});
      total += x;
    }
    if (std::abs(total - 1.0) > tol) throw ValidationError("policy: row does not sum to 1", {k});
  }
}

StagePolicy StagePolicy::uniform(std::size_t S, std::size_t A, std::size_t H) {
  return StagePolicy{S, A, H, Vec(H * S * A, 1.0 / static_cast<double>(A))};
}

StagePolicy StagePolicy::deterministic(std::size_t S, std::size_t A, std::size_t H,
                                       const std::vector<std::size_t>& actions) {
  if (actions.size() != H * S) throw ValidationError("policy: action table has wrong size");
  StagePolicy pi{S, A, H, Vec(H * S * A, 0.0)};
  for (std::size_t k = 0; k < H * S; ++k) {
    if (actions[k] >= A) throw ValidationError("policy: action out of range", {k});
    pi.prob[k * A + actions[k]] = 1.0;
  }
  return pi;
}

std::vector<StagePolicy> StagePolicy::all_deterministic(std::size_t S, std::size_t A,
                                                        std::size_t H) {
  const std::size_t cells = H * S;
  double count = std::pow(static_cast<double>(A), static_cast<double>(cells));
  if (count > 65536.0) throw CapExceeded("all_deterministic: more than 65536 policies");
  std::vector<StagePolicy> out;
  std::vector<std::size_t> actions(cells, 0);
  while (true) {
    out.push_back(deterministic(S, A, H, actions));
    std::size_t k = cells;
    while (k > 0 && ++actions[k - 1] == A) actions[--k] = 0;
    if (k == 0) break;
  }
  return out;
}

StagePolicy mix_policy(const StagePolicy& pi, const StagePolicy& other, double alpha) {
  if (pi.prob.size() != other.prob.size()) throw Error("mix_policy: shape mismatch");
  const double w = alpha / static_cast<double>(pi.H);
  StagePolicy out = pi;
  for (std::size_t i = 0; i < out.prob.size(); ++i) {
    out.prob[i] = (1.0 - w) * pi.prob[i] + w * other.prob[i];
  }
  return out;
}

StagePolicy switch_policy(const StagePolicy& pi, const StagePolicy& other, std::size_t h) {
  if (pi.prob.size() != other.prob.size()) throw Error("switch_policy: shape mismatch");
  StagePolicy out = pi;
  const std::size_t from = h * pi.S * pi.A;
  std::copy(other.prob.begin() + static_cast<std::ptrdiff_t>(from), other.prob.end(),
            out.prob.begin() + static_cast<std::ptrdiff_t>(from));
  return out;
}

double backup(const Transition& P, const Reward& R, std::size_t h, std::size_t s, std::size_t a,
              const double* v_next) {
  const double* row = P.row(h, s, a);
  double next = 0.0;
  for (std::size_t s2 = 0; s2 < P.S; ++s2) next += row[s2] * v_next[s2];
  return R.r(h, s, a) + next;
}

Evaluation dp_eval(const Transition& P, const Reward& R, const StagePolicy& pi) {
  const std::size_t S = P.S, A = P.A, H = P.H;
  if (R.S != S || R.A != A || R.H != H) throw ValidationError("dp_eval: reward shape mismatch");
  if (pi.S != S || pi.A != A || pi.H != H) throw ValidationError("dp_eval: policy shape mismatch");
  Evaluation ev;
  ev.Q.assign(H * S * A, 0.0);
  ev.V.assign((H + 1) * S, 0.0);
  for (std::size_t h = H; h-- > 0;) {
    const double* v_next = ev.V.data() + (h + 1) * S;
    for (std::size_t s = 0; s < S; ++s) {
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        const double q = backup(P, R, h, s, a, v_next);
        ev.Q[(h * S + s) * A + a] = q;
        v += pi(h, s, a) * q;
      }
      ev.V[h * S + s] = v;
    }
  }
  ev.value = ev.V[P.s1];
  return ev;
}

Evaluation dp_eval(const TabularMDP& mdp, const StagePolicy& pi) {
  return dp_eval(mdp.transition, mdp.reward, pi);
}

OptimalSolution dp_optimal(const Transition& P, const Reward& R) {
  const std::size_t S = P.S, A = P.A, H = P.H;
  if (R.S != S || R.A != A || R.H != H) throw ValidationError("dp_optimal: reward shape mismatch");
  OptimalSolution out;
  out.greedy = StagePolicy{S, A, H, Vec(H * S * A, 0.0)};
  Evaluation& ev = out.eval;
  ev.Q.assign(H * S * A, 0.0);
  ev.V.assign((H + 1) * S, 0.0);
  for (std::size_t h = H; h-- > 0;) {
    const double* v_next = ev.V.data() + (h + 1) * S;
    for (std::size_t s = 0; s < S; ++s) {
      std::size_t best = 0;
      for (std::size_t a = 0; a < A; ++a) {
        const double q = backup(P, R, h, s, a, v_next);
        ev.Q[(h * S + s) * A + a] = q;
        if (q > ev.Q[(h * S + s) * A + best]) best = a;
      }
      out.greedy.prob[(h * S + s) * A + best] = 1.0;
      ev.V[h * S + s] = ev.Q[(h * S + s) * A + best];
    }
  }
  ev.value = ev.V[P.s1];
  return out;
}

Vec state_occupancy(const Transition& P, const StagePolicy& pi) {
  const std::size_t S = P.S, A = P.A, H = P.H;
  if (pi.S != S || pi.A != A || pi.H != H) throw ValidationError("occupancy: policy shape mismatch");
  Vec d(H * S, 0.0);
  d[P.s1] = 1.0;
  for (std::size_t h = 0; h + 1 < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      const double ds = d[h * S + s];
      if (ds == 0.0) continue;
      for (std::size_t a = 0; a < A; ++a) {
        const double w = ds * pi(h, s, a);
        if (w == 0.0) continue;
        const double* row = P.row(h, s, a);
        for (std::size_t s2 = 0; s2 < S; ++s2) d[(h + 1) * S + s2] += w * row[s2];
      }
    }
  }
  return d;
}

Vec occupancy(const Transition& P, const StagePolicy& pi) {
  const std::size_t S = P.S, A = P.A, H = P.H;
  const Vec ds = state_occupancy(P, pi);
  Vec d(H * S * A);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) d[(h * S + s) * A + a] = ds[h * S + s] * pi(h, s, a);
    }
  }
  return d;
}

double pdl_check(const TabularMDP& mdp, const StagePolicy& pi, const StagePolicy& pi_prime) {
  const std::size_t S = mdp.S(), A = mdp.A(), H = mdp.H();
  const Evaluation ev = dp_eval(mdp, pi);
  const Evaluation ev_prime = dp_eval(mdp, pi_prime);
  const Vec ds = state_occupancy(mdp.transition, pi);
  double rhs = 0.0;
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t s = 0; s < S; ++s) {
      double inner = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        inner += (pi_prime(h, s, a) - pi(h, s, a)) * ev_prime.Q[(h * S + s) * A + a];
      }
      rhs += ds[h * S + s] * inner;
    }
  }
  return std::abs(ev_prime.value - ev.value - rhs);
}

std::size_t TrajectoryCoding::size() const {
  std::size_t n = 1;
  for (std::size_t h = 0; h < H; ++h) n *= base();
  return n;
}

std::vector<TrajectoryCoding::Step> TrajectoryCoding::decode(std::size_t id) const {
  std::vector<Step> steps(H);
  const std::size_t bits = reward_bits ? 2 : 1;
  for (std::size_t h = 0; h < H; ++h) {
    std::size_t digit = id % base();
    id /= base();
    steps[h].bit = digit % bits;
    digit /= bits;
    steps[h].a = digit % A;
    steps[h].s = digit / A;
  }
  return steps;
}

std::size_t TrajectoryCoding::encode(const std::vector<Step>& steps) const {
  const std::size_t bits = reward_bits ? 2 : 1;
  std::size_t id = 0;
  for (std::size_t h = H; h-- > 0;) {
    const Step& st = steps[h];
    id = id * base() + (st.s * A + st.a) * bits + st.bit;
  }
  return id;
}

TrajectoryCoding trajectory_coding(const TabularMDP& mdp, bool reward_bits, std::size_t cap) {
  TrajectoryCoding c{mdp.S(), mdp.A(), mdp.H(), reward_bits};
  double n = std::pow(static_cast<double>(c.base()), static_cast<double>(c.H));
  if (n > static_cast<double>(cap)) {
    throw CapExceeded("trajectory space of " + std::to_string(static_cast<long long>(n)) +
                      " ids exceeds cap " + std::to_string(cap));
  }
  return c;
}

Vec trajectory_law(const TabularMDP& mdp, const StagePolicy& pi, bool reward_bits,
                   std::size_t cap) {
  const TrajectoryCoding c = trajectory_coding(mdp, reward_bits, cap);
  const std::size_t S = c.S, A = c.A, H = c.H;
  Vec law(c.size(), 0.0);
  // Depth-first over prefixes, carrying the prefix probability and the partial id.
  struct Frame {
    std::size_t h, s, id, weight;
    double prob;
  };
  std::vector<Frame> stack{{0, mdp.transition.s1, 0, 1, 1.0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    for (std::size_t a = 0; a < A; ++a) {
      const double pa = f.prob * pi(f.h, f.s, a);
      if (pa == 0.0) continue;
      const double r = mdp.reward.r(f.h, f.s, a);
      for (std::size_t bit = 0; bit < (reward_bits ? 2u : 1u); ++bit) {
        const double pb = reward_bits ? pa * (bit == 1 ? r : 1.0 - r) : pa;
        if (pb == 0.0) continue;
        const std::size_t digit = (f.s * A + a) * (reward_bits ? 2 : 1) + bit;
        const std::size_t id = f.id + digit * f.weight;
        if (f.h + 1 == H) {
          law[id] += pb;
          continue;
        }
        const double* row = mdp.transition.row(f.h, f.s, a);
        for (std::size_t s2 = 0; s2 < S; ++s2) {
          if (row[s2] == 0.0) continue;
          stack.push_back({f.h + 1, s2, id, f.weight * c.base(), pb * row[s2]});
        }
      }
    }
  }
  return law;
}

MdpGame make_mdp_game(const std::vector<TabularMDP>& models,
                      const std::vector<StagePolicy>& policies, bool reward_bits,
                      std::size_t cap) {
  if (models.empty() || policies.empty()) throw ValidationError("mdp game: empty family");
  MdpGame out;
  out.coding = trajectory_coding(models.front(), reward_bits, cap);
  std::vector<Vec> laws;
  Vec values;
  std::vector<bool> reachable(out.coding.size(), false);
  for (const TabularMDP& m : models) {
    if (m.S() != out.coding.S || m.A() != out.coding.A || m.H() != out.coding.H) {
      throw ValidationError("mdp game: models differ in shape");
    }
    for (const StagePolicy& pi : policies) {
      laws.push_back(trajectory_law(m, pi, reward_bits, cap));
      values.push_back(dp_eval(m, pi).value);
      for (std::size_t i = 0; i < reachable.size(); ++i) {
        if (laws.back()[i] > 0.0) reachable[i] = true;
      }
    }
  }
  for (std::size_t i = 0; i < reachable.size(); ++i) {
    if (reachable[i]) out.trajectory_ids.push_back(i);
  }
  const std::size_t n_obs = out.trajectory_ids.size();
  Vec obs(laws.size() * n_obs);
  for (std::size_t row = 0; row < laws.size(); ++row) {
    for (std::size_t o = 0; o < n_obs; ++o) obs[row * n_obs + o] = laws[row][out.trajectory_ids[o]];
  }
  std::vector<std::string> mids, pids, oids;
  for (std::size_t i = 0; i < models.size(); ++i) mids.push_back("mdp" + std::to_string(i));
  for (std::size_t i = 0; i < policies.size(); ++i) pids.push_back("pi" + std::to_string(i));
  for (std::size_t id : out.trajectory_ids) oids.push_back("traj" + std::to_string(id));
  out.game = FiniteGame(std::move(mids), std::move(pids), std::move(oids), std::move(obs),
                        std::move(values), 1e-9);
  return out;
}

namespace {

double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Variant of an anchor with transition (1−λ)P + λP_rand and rewards Q⋆ − P′V⋆_{h+1}, so that
// Q⋆ and V⋆ are unchanged; returns false when some reward leaves [0,1].
bool make_variant(const TabularMDP& anchor, const Evaluation& opt, const Transition& noise,
                  double lambda, TabularMDP& out) {
  const std::size_t S = anchor.S(), A = anchor.A(), H = anchor.H();
  out = anchor;
  for (std::size_t i = 0; i < out.transition.P.size(); ++i) {
    out.transition.P[i] = (1.0 - lambda) * anchor.transition.P[i] + lambda * noise.P[i];
  }
  for (std::size_t h = 0; h < H; ++h) {
    const double* v_next = opt.V.data() + (h + 1) * S;
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const double* row = out.transition.row(h, s, a);
        double next = 0.0;
        for (std::size_t s2 = 0; s2 < S; ++s2) next += row[s2] * v_next[s2];
        const double r = opt.Q[(h * S + s) * A + a] - next;
        if (r < 0.0 || r > 1.0) return false;
        out.reward.R[(h * S + s) * A + a] = r;
      }
    }
  }
  return true;
}

}  // namespace

LinearQvInstance gen_linear_qv(std::uint64_t seed, std::size_t d, std::size_t H,
                               const LinearQvSizes& sizes) {
  const std::size_t S = sizes.states, A = sizes.actions;
  if (d == 0 || H == 0 || S == 0 || A == 0 || sizes.variants == 0) {
    throw ValidationError("gen_linear_qv: empty dimension");
  }
  if (d > H * S * A) throw ValidationError("gen_linear_qv: d exceeds the number of (h,s,a) cells");
  for (int attempt = 0; attempt < sizes.max_resamples; ++attempt) {
    const std::uint64_t s_used = seed + static_cast<std::uint64_t>(attempt);
    Rng rng(s_used);
    std::vector<TabularMDP> anchors;
    std::vector<OptimalSolution> opts;
    for (std::size_t i = 0; i < d; ++i) {
      TabularMDP m{Transition::random(rng, S, A, H), Reward::random(rng, S, A, H, 0.2, 1.0)};
      opts.push_back(dp_optimal(m.transition, m.reward));
      anchors.push_back(std::move(m));
    }
    Eigen::MatrixXd feat(static_cast<Eigen::Index>(H * S * A), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < H * S * A; ++k) {
        feat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = opts[i].eval.Q[k];
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(feat);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) < 1e-6 * sv(0)) continue;

    LinearQvInstance inst;
    inst.d = d;
    inst.seed_used = s_used;
    bool ok = true;
    for (std::size_t i = 0; i < d && ok; ++i) {
      inst.models.push_back(anchors[i]);
      for (std::size_t v = 1; v < sizes.variants; ++v) {
        const Transition noise = Transition::random(rng, S, A, H);
        double lambda = sizes.mix * rng.uniform(0.5, 1.0);
        TabularMDP variant;
        bool made = false;
        for (int tries = 0; tries < 20 && !made; ++tries, lambda *= 0.5) {
          made = make_variant(anchors[i], opts[i].eval, noise, lambda, variant);
        }
        if (!made) {
          ok = false;
          break;
        }
        inst.models.push_back(std::move(variant));
      }
    }
    if (!ok) continue;

    inst.phi.assign(H * S * A * d, 0.0);
    inst.psi.assign((H + 1) * S * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < H * S * A; ++k) inst.phi[k * d + i] = opts[i].eval.Q[k];
      for (std::size_t k = 0; k < (H + 1) * S; ++k) inst.psi[k * d + i] = opts[i].eval.V[k];
    }

    // Group by Q⋆ tables and verify Q⋆ = ⟨φ, θ⟩, V⋆ = ⟨ψ, w⟩ with θ = w = e_group.
    std::vector<Vec> group_q;
    std::vector<StagePolicy> greedy;
    for (const TabularMDP& m : inst.models) {
      m.validate(1e-9);
      const OptimalSolution opt = dp_optimal(m.transition, m.reward);
      std::size_t g = 0;
      while (g < group_q.size() && max_abs_diff(group_q[g], opt.eval.Q) > 1e-9) ++g;
      if (g == group_q.size()) {
        group_q.push_back(opt.eval.Q);
        greedy.push_back(opt.greedy);
      }
      inst.group.push_back(g);
      for (std::size_t k = 0; k < H * S * A; ++k) {
        inst.residual = std::max(inst.residual, std::abs(opt.eval.Q[k] - inst.phi[k * d + g]));
      }
      for (std::size_t k = 0; k < (H + 1) * S; ++k) {
        inst.residual = std::max(inst.residual, std::abs(opt.eval.V[k] - inst.psi[k * d + g]));
      }
    }
    if (group_q.size() != d) continue;
    if (inst.residual > 1e-9) {
      throw AssertionFailure("gen_linear_qv: linearity residual " + std::to_string(inst.residual));
    }

    for (const StagePolicy& g : greedy) {
      auto it = std::find(inst.policies.begin(), inst.policies.end(), g);
      inst.group_policy.push_back(static_cast<std::size_t>(it - inst.policies.begin()));
      if (it == inst.policies.end()) inst.policies.push_back(g);
    }
    std::vector<StagePolicy> pool = StagePolicy::all_deterministic(S, A, H);
    while (inst.policies.size() < sizes.policies && !pool.empty()) {
      const std::size_t k = rng.index(pool.size());
      if (std::find(inst.policies.begin(), inst.policies.end(), pool[k]) == inst.policies.end()) {
        inst.policies.push_back(pool[k]);
      }
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    }

    inst.mdp_game = make_mdp_game(inst.models, inst.policies, sizes.reward_bits);
    std::vector<std::vector<Element>> subsets(d);
    for (std::size_t m = 0; m < inst.models.size(); ++m) {
      subsets[inst.group[m]].push_back({m, inst.group_policy[inst.group[m]]});
    }
    inst.scheme = PartitionScheme(inst.mdp_game.game, std::move(subsets));
    return inst;
  }
  throw Error("gen_linear_qv: no nondegenerate instance after " +
              std::to_string(sizes.max_resamples) + " resamples");
}

}  // namespace declab
