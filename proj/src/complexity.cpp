#include "declab/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "declab/errors.hpp"

namespace declab {

namespace {

constexpr double kTiny = 1e-300;

void check_cap(const FiniteGame& game, std::size_t cap, const char* what) {
  if (game.size() > cap) {
    throw CapExceeded(std::string(what) + ": |M|·|Π|·|O| = " + std::to_string(game.size()) +
                      " exceeds the cap of " + std::to_string(cap));
  }
}

DecResult from_ascent(const AscentResult& a) {
  DecResult r;
  r.value = a.value;
  r.gap = a.solution.gap;
  r.mu = a.reference;
  r.start_values = a.start_values;
  r.converged = a.solution.converged;
  return r;
}

// All compositions of `total` into k nonnegative parts.
void compositions(std::size_t k, int total, std::vector<int>& cur, std::vector<std::vector<int>>& out,
                  std::size_t cap) {
  if (cur.size() + 1 == k) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    if (out.size() > cap) throw CapExceeded("convexify_game: dyadic grid exceeds the cap");
    return;
  }
  for (int i = total; i >= 0; --i) {
    cur.push_back(i);
    compositions(k, total - i, cur, out, cap);
    cur.pop_back();
  }
}

std::vector<std::size_t> model_set(const std::vector<Element>& phi) {
  std::set<std::size_t> s;
  for (const Element& el : phi) s.insert(el.model);
  return {s.begin(), s.end()};
}

}  // namespace

DecPhiObjective::DecPhiObjective(const FiniteGame& game, const PartitionScheme& scheme,
                                 const Vec& mu, double eta, double smoothing)
    : n_policies_(game.num_policies()),
      n_obs_(game.num_observations()),
      n_groups_(scheme.num_subsets()),
      eta_(eta) {
  if (!(eta_ > 0.0)) throw Error("DEC(M,Φ): eta must be positive");
  if (mu.size() != game.num_models()) throw Error("DEC(M,Φ): reference must weight every model");
  const std::size_t ne = scheme.num_elements();
  element_group_.resize(ne);
  regret_.assign(n_policies_, Vec(ne));
  lik_.resize(n_policies_ * n_obs_ * ne);
  log_ref_.resize(n_policies_ * n_obs_);
  for (std::size_t e = 0; e < ne; ++e) {
    const Element& el = scheme.element(e);
    element_group_[e] = scheme.subset_of(e);
    for (std::size_t pi = 0; pi < n_policies_; ++pi) {
      regret_[pi][e] = game.value(el.model, el.policy) - game.value(el.model, pi);
      for (std::size_t o = 0; o < n_obs_; ++o) {
        lik_[(pi * n_obs_ + o) * ne + e] = game.obs(el.model, pi, o);
      }
    }
  }
  for (std::size_t pi = 0; pi < n_policies_; ++pi) {
    const Vec ref = smooth(mixture_obs(game, mu, pi), smoothing);
    for (std::size_t o = 0; o < n_obs_; ++o) log_ref_[pi * n_obs_ + o] = std::log(ref[o]);
  }
}

void DecPhiObjective::evaluate(const Vec& p, const Vec& y, Vec& g, Vec* grad) const {
  const std::size_t ne = element_group_.size();
  g.assign(n_policies_, 0.0);
  if (grad != nullptr) grad->assign(ne, 0.0);
  Vec log_mass(n_groups_, 0.0);
  {
    Vec mass(n_groups_, 0.0);
    for (std::size_t e = 0; e < ne; ++e) mass[element_group_[e]] += y[e];
    for (std::size_t k = 0; k < n_groups_; ++k) log_mass[k] = std::log(std::max(mass[k], kTiny));
  }
  Vec q(n_groups_), logr(n_groups_);
  for (std::size_t pi = 0; pi < n_policies_; ++pi) {
    const Vec& reg = regret_[pi];
    double gp = 0.0;
    for (std::size_t e = 0; e < ne; ++e) gp += y[e] * reg[e];
    const double w = p[pi];
    const bool want_grad = grad != nullptr && w > 0.0;
    double info = 0.0;
    for (std::size_t o = 0; o < n_obs_; ++o) {
      const double* l = lik_.data() + (pi * n_obs_ + o) * ne;
      const double lb = log_ref_[pi * n_obs_ + o];
      std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t e = 0; e < ne; ++e) q[element_group_[e]] += y[e] * l[e];
      for (std::size_t k = 0; k < n_groups_; ++k) {
        logr[k] = std::log(std::max(q[k], kTiny)) - log_mass[k] - lb;
        if (q[k] > 0.0) info += q[k] * logr[k];
      }
      if (want_grad) {
        const double c = w / eta_;
        for (std::size_t e = 0; e < ne; ++e) {
          if (l[e] > 0.0) (*grad)[e] -= c * l[e] * logr[element_group_[e]];
        }
      }
    }
    g[pi] = gp - info / eta_;
    if (want_grad) {
      for (std::size_t e = 0; e < ne; ++e) (*grad)[e] += w * reg[e];
    }
  }
}

Matrix dec_kl_payoff(const FiniteGame& game, const Vec& mu, double eta, double smoothing) {
  if (!(eta > 0.0)) throw Error("DEC: eta must be positive");
  const std::size_t nm = game.num_models(), np = game.num_policies();
  Matrix a(np, Vec(nm));
  for (std::size_t pi = 0; pi < np; ++pi) {
    const Vec ref = smooth(mixture_obs(game, mu, pi), smoothing);
    for (std::size_t m = 0; m < nm; ++m) {
      const double best = game.value(m, game.optimal_policy(m));
      a[pi][m] = best - game.value(m, pi) - kl(game.obs_vec(m, pi), ref).value / eta;
    }
  }
  return a;
}

DecResult dec_kl(const FiniteGame& game, double eta, const ComplexityOptions& options) {
  check_cap(game, options.cap, "dec_kl");
  auto inner = [&](const Vec& mu, const SaddleOptions& opts) {
    return solve(BilinearObjective(dec_kl_payoff(game, mu, eta)), opts);
  };
  auto next = [](const SaddleSolution& sol) { return sol.nu; };
  return from_ascent(fixed_point_ascent(game.num_models(), inner, next, options.saddle,
                                       options.ascent,
                                       simplex_grid(game.num_models(), options.ascent.grid_budget)));
}

DecResult dec_kl_phi(const FiniteGame& game, const PartitionScheme& scheme, double eta,
                     const ComplexityOptions& options) {
  check_cap(game, options.cap, "dec_kl_phi");
  auto inner = [&](const Vec& mu, const SaddleOptions& opts) {
    return solve(DecPhiObjective(game, scheme, mu, eta), opts);
  };
  auto next = [&](const SaddleSolution& sol) { return model_marginal(game, scheme, sol.nu); };
  return from_ascent(fixed_point_ascent(game.num_models(), inner, next, options.saddle,
                                       options.ascent,
                                       simplex_grid(game.num_models(), options.ascent.grid_budget)));
}

DecResult maxmin_air(const FiniteGame& game, const PartitionScheme& scheme, double eta,
                     const ComplexityOptions& options) {
  return from_ascent(
      worst_case_reference(game, scheme, eta, options.saddle, options.ascent, options.cap));
}

CPhiResult c_phi(const FiniteGame& game, const PartitionScheme& scheme, double tol) {
  CPhiResult out;
  out.value = -std::numeric_limits<double>::infinity();
  const std::size_t np = game.num_policies();
  for (std::size_t phi = 0; phi < scheme.num_subsets(); ++phi) {
    const auto& members = scheme.subsets()[phi];
    double value;
    Vec nu;
    if (members.size() == 1) {
      const Element& el = members[0];
      value = game.value(el.model, el.policy) - game.value(el.model, game.optimal_policy(el.model));
      nu = {1.0};
    } else {
      Matrix a(np, Vec(members.size()));
      for (std::size_t pi = 0; pi < np; ++pi) {
        for (std::size_t j = 0; j < members.size(); ++j) {
          const Element& el = members[j];
          a[pi][j] = game.value(el.model, el.policy) - game.value(el.model, pi);
        }
      }
      SaddleOptions opts;
      opts.tol = tol;
      SaddleSolution sol = solve(BilinearObjective(std::move(a)), opts);
      value = sol.lower;
      nu = sol.nu;
    }
    out.per_subset.push_back(value);
    if (value > out.value) {
      out.value = value;
      out.subset = phi;
      out.nu = nu;
    }
  }
  return out;
}

ConvexifiedGame convexify_game(const FiniteGame& game, const PartitionScheme& scheme, int depth,
                               std::size_t cap) {
  if (depth < 0 || depth > 20) throw Error("convexify_game: depth must lie in [0, 20]");
  const int resolution = 1 << depth;
  const std::size_t nm = game.num_models(), np = game.num_policies(), no = game.num_observations();
  std::map<std::vector<int>, std::size_t> seen;  // integer weights over all models
  ConvexifiedGame out;
  out.depth = depth;
  std::vector<std::vector<int>> grid;
  for (const auto& phi : scheme.subsets()) {
    const auto models = model_set(phi);
    grid.clear();
    std::vector<int> cur;
    compositions(models.size(), resolution, cur, grid, cap);
    for (const auto& c : grid) {
      std::vector<int> key(nm, 0);
      for (std::size_t j = 0; j < models.size(); ++j) key[models[j]] = c[j];
      if (seen.count(key) != 0) continue;
      seen.emplace(key, out.weights.size());
      Vec w(nm);
      for (std::size_t m = 0; m < nm; ++m) w[m] = static_cast<double>(key[m]) / resolution;
      out.weights.push_back(std::move(w));
      if (out.weights.size() > cap) throw CapExceeded("convexify_game: closure exceeds the cap");
    }
  }
  const std::size_t nc = out.weights.size();
  Vec obs(nc * np * no, 0.0), value(nc * np, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t pi = 0; pi < np; ++pi) {
      const Vec row = mixture_obs(game, out.weights[c], pi);
      double total = 0.0;
      for (double x : row) total += x;
      for (std::size_t o = 0; o < no; ++o) obs[(c * np + pi) * no + o] = row[o] / total;
      double v = 0.0;
      for (std::size_t m = 0; m < nm; ++m) v += out.weights[c][m] * game.value(m, pi);
      value[c * np + pi] = std::clamp(v, 0.0, 1.0);
    }
  }
  std::vector<std::string> ids(nc);
  for (std::size_t c = 0; c < nc; ++c) ids[c] = "c" + std::to_string(c);
  out.game = FiniteGame(std::move(ids), game.policy_ids(), game.observation_ids(), std::move(obs),
                        std::move(value), 1e-9);
  return out;
}

bool is_fixed_comparator(const PartitionScheme& scheme) {
  for (const auto& phi : scheme.subsets()) {
    for (const Element& el : phi) {
      if (el.policy != phi.front().policy) return false;
    }
  }
  return true;
}

bool is_product_scheme(const FiniteGame& game, const PartitionScheme& scheme) {
  if (!is_fixed_comparator(scheme)) return false;
  std::map<std::vector<std::size_t>, std::set<std::size_t>> policies_of;
  for (const auto& phi : scheme.subsets()) {
    if (!policies_of[model_set(phi)].insert(phi.front().policy).second) return false;
  }
  std::set<std::size_t> used;
  for (const auto& [theta, pols] : policies_of) {
    if (pols.size() != game.num_policies()) return false;
    for (std::size_t m : theta) {
      if (!used.insert(m).second) return false;
    }
  }
  return true;
}

bool ComplexityReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.passed; });
}

ComplexityReport verify_lemma_suite(const FiniteGame& game, const PartitionScheme& scheme,
                                    double eta, const ComplexityOptions& options) {
  ComplexityReport r;
  r.eta = eta;
  r.tol = options.saddle.tol;
  r.closure_depth = options.closure_depth;

  const DecResult dk = dec_kl(game, eta, options);
  const DecResult dphi = dec_kl_phi(game, scheme, eta, options);
  const DecResult air = maxmin_air(game, scheme, eta, options);
  const CPhiResult c = c_phi(game, scheme, options.saddle.tol);
  const ConvexifiedGame conv = convexify_game(game, scheme, options.closure_depth,
                                              options.closure_cap);
  const DecResult dconv = dec_kl(conv.game, eta, options);

  r.dec_kl = dk.value;
  r.dec_kl_phi = dphi.value;
  r.maxmin_air = air.value;
  r.c_phi = c.value;
  r.dec_convexified = dconv.value;
  r.gap_dec_kl = dk.gap;
  r.gap_dec_kl_phi = dphi.gap;
  r.gap_maxmin_air = air.gap;
  r.gap_convexified = dconv.gap;

  const double two_tol = 2.0 * r.tol;
  auto add = [&](std::string name, double lhs, double rhs, double tolerance, bool ok) {
    r.checks.push_back({std::move(name), lhs, rhs, tolerance, ok});
  };
  {
    const double t = two_tol + dphi.gap + air.gap;
    add("maxmin_air = dec_kl_phi", air.value, dphi.value, t,
        std::abs(air.value - dphi.value) <= t);
  }
  {
    const double rhs = dconv.value + std::max(0.0, c.value);
    const double t = two_tol + dphi.gap + dconv.gap;
    add("dec_kl_phi <= dec_convexified + max(0, c_phi)", dphi.value, rhs, t,
        dphi.value <= rhs + t);
  }
  if (is_product_scheme(game, scheme)) {
    const double t = two_tol + dphi.gap + dconv.gap;
    add("product scheme: dec_kl_phi = dec_convexified", dphi.value, dconv.value, t,
        std::abs(dphi.value - dconv.value) <= t);
  }
  if (c.value > 0.0) {
    add("adaptive comparator: dec_kl_phi >= c_phi", dphi.value, c.value, r.tol,
        dphi.value >= c.value - r.tol);
  }
  {
    const PartitionScheme trimmed = make_standard_partitions(game, PartitionKind::per_model_optimal);
    std::vector<std::vector<std::size_t>> singletons;
    for (std::size_t m = 0; m < game.num_models(); ++m) singletons.push_back({m});
    const PartitionScheme untrimmed = make_product_partitions(game, singletons);
    const DecResult a = dec_kl_phi(game, trimmed, eta, options);
    const DecResult b = dec_kl_phi(game, untrimmed, eta, options);
    const double t = two_tol + a.gap + b.gap;
    add("trimming: per_model_optimal = untrimmed product", a.value, b.value, t,
        std::abs(a.value - b.value) <= t);
  }
  return r;
}

BoundCheck linear_qv_bound_check(const FiniteGame& game, const PartitionScheme& scheme, int d,
                                 int horizon, double eta, const ComplexityOptions& options) {
  BoundCheck out;
  out.bound = 4.0 * eta * d * horizon * horizon;
  const DecResult exact = dec_kl_phi(game, scheme, eta, options);
  const ConvexifiedGame conv =
      convexify_game(game, scheme, options.closure_depth, options.closure_cap);
  const DecResult closed = dec_kl(conv.game, eta, options);
  out.value = std::max(exact.value, closed.value);
  out.gap = std::max(exact.gap, closed.gap);
  out.passed = out.value <= out.bound + options.saddle.tol;
  return out;
}

}  // namespace declab
