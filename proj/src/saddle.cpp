#include "declab/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "declab/errors.hpp"
#include "declab/rng.hpp"

namespace declab {

namespace {

constexpr double kTiny = 1e-300;
constexpr double kProbeMix = 1e-12;

double max_of(const Vec& v) { return *std::max_element(v.begin(), v.end()); }
double min_of(const Vec& v) { return *std::min_element(v.begin(), v.end()); }

std::size_t argmin_lowest(const Vec& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[best]) best = i;
  }
  return best;
}

double range_of(const Vec& v) { return v.empty() ? 0.0 : max_of(v) - min_of(v); }

// Multiplicative update w ∝ w·exp(s·d), done in log space.
void exp_update(const Vec& w, const Vec& d, double s, Vec& out) {
  const std::size_t n = w.size();
  out.resize(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (w[i] > 0.0 ? std::log(w[i]) : -745.0) + s * d[i];
    mx = std::max(mx, out[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(out[i] - mx);
    total += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= total;
}

// KL(a‖b) over the support of a, for strictly positive iterates.
double kl_iterates(const Vec& a, const Vec& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) total += a[i] * std::log(a[i] / std::max(b[i], kTiny));
  }
  return total;
}

Vec start_point(const Vec& warm, std::size_t n) {
  if (warm.size() != n) return uniform_vec(n);
  return smooth(normalized(warm), 1e-10);
}

struct InnerMax {
  Vec y;
  double f = 0.0;
  double upper = 0.0;  // Frank-Wolfe bound on max_y f(p, y)
};

// Entropic ascent on y ↦ f(p, y) with an adaptive step, until the bound is within `target`.
InnerMax maximize_y(const SaddleObjective& obj, const Vec& p, const Vec& y0, double target,
                    int max_iters) {
  InnerMax r;
  r.y = smooth(y0, kProbeMix);
  Vec g, grad, cand, gc, gradc;
  obj.evaluate(p, r.y, g, &grad);
  r.f = dot(p, g);
  r.upper = r.f + max_of(grad) - dot(grad, r.y);
  double step = 1.0 / std::max(range_of(grad), 1e-12);
  for (int k = 0; k < max_iters && r.upper - r.f > target; ++k) {
    exp_update(r.y, grad, step, cand);
    obj.evaluate(p, cand, gc, &gradc);
    const double fc = dot(p, gc);
    if (fc + 1e-15 >= r.f) {
      r.y.swap(cand);
      grad.swap(gradc);
      r.f = fc;
      r.upper = std::min(r.upper, r.f + max_of(grad) - dot(grad, r.y));
      step *= 1.3;
    } else {
      step *= 0.5;
      if (step < 1e-14) break;
    }
  }
  return r;
}

// Kelley's method on p ↦ max_y f(p, y): the master over the cuts g(y_k) is a matrix game, and
// its cut weights λ give the certified maximizer Σ_k λ_k y_k by concavity.
SaddleSolution cutting_plane(const SaddleObjective& obj, const SaddleOptions& options) {
  const std::size_t n = obj.num_policies();
  const std::size_t m = obj.num_max();
  Vec p = start_point(options.p0, n);
  Vec y = start_point(options.y0, m);
  Matrix cuts(n);
  std::vector<Vec> points;
  SaddleSolution sol;
  sol.lower = -std::numeric_limits<double>::infinity();
  sol.upper = std::numeric_limits<double>::infinity();
  Vec g, ybar(m);
  const int max_cuts = std::max(1, std::min(options.max_iters, 2000));
  const int inner_iters = std::max(options.refine_iters, 2000);
  for (int k = 1; k <= max_cuts; ++k) {
    sol.iters = k;
    const InnerMax im = maximize_y(obj, p, y, 0.25 * options.tol, inner_iters);
    if (im.upper < sol.upper) {
      sol.upper = im.upper;
      sol.p = p;
    }
    obj.evaluate(p, im.y, g, nullptr);
    for (std::size_t i = 0; i < n; ++i) cuts[i].push_back(g[i]);
    points.push_back(im.y);
    y = im.y;
    const SaddleSolution master = solve_matrix_game(cuts);
    std::fill(ybar.begin(), ybar.end(), 0.0);
    for (std::size_t c = 0; c < points.size(); ++c) {
      for (std::size_t j = 0; j < m; ++j) ybar[j] += master.nu[c] * points[c][j];
    }
    obj.evaluate(p, ybar, g, nullptr);
    const double lower = min_of(g);
    if (lower > sol.lower) {
      sol.lower = lower;
      sol.nu = ybar;
    }
    if (sol.upper - sol.lower <= options.tol) {
      sol.converged = true;
      break;
    }
    p = master.p;
  }
  if (sol.nu.empty()) sol.nu = y;
  sol.gap = sol.upper - sol.lower;
  sol.value = obj.value(sol.p, sol.nu);
  return sol;
}

}  // namespace

double SaddleObjective::value(const Vec& p, const Vec& y) const {
  Vec g;
  evaluate(p, y, g, nullptr);
  return dot(p, g);
}

Vec SaddleObjective::policy_values(const Vec& y) const {
  Vec g;
  evaluate(Vec(num_policies(), 0.0), y, g, nullptr);
  return g;
}

Vec SaddleObjective::gradient(const Vec& p, const Vec& y) const {
  Vec g, grad;
  evaluate(p, y, g, &grad);
  return grad;
}

BilinearObjective::BilinearObjective(Matrix a) : a_(std::move(a)) {
  if (a_.empty() || a_[0].empty()) throw Error("bilinear objective: empty payoff matrix");
  cols_ = a_[0].size();
  for (const auto& row : a_) {
    if (row.size() != cols_) throw Error("bilinear objective: ragged payoff matrix");
  }
}

void BilinearObjective::evaluate(const Vec& p, const Vec& y, Vec& g, Vec* grad) const {
  g.assign(a_.size(), 0.0);
  for (std::size_t i = 0; i < a_.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += a_[i][j] * y[j];
    g[i] = s;
  }
  if (grad != nullptr) {
    grad->assign(cols_, 0.0);
    for (std::size_t i = 0; i < a_.size(); ++i) {
      if (p[i] == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) (*grad)[j] += p[i] * a_[i][j];
    }
  }
}

PosteriorObjective::PosteriorObjective(const FiniteGame& game,
                                       std::vector<std::size_t> element_model,
                                       std::vector<std::size_t> element_group, Matrix regret,
                                       Vec rho, double eta)
    : n_policies_(game.num_policies()),
      n_obs_(game.num_observations()),
      element_model_(std::move(element_model)),
      element_group_(std::move(element_group)),
      regret_(std::move(regret)),
      rho_(std::move(rho)),
      eta_(eta) {
  if (!(eta_ > 0.0)) throw Error("saddle problem: eta must be positive");
  const std::size_t ne = element_model_.size();
  if (ne == 0) throw Error("saddle problem: empty element set");
  for (std::size_t e = 0; e < ne; ++e) {
    if (element_group_[e] >= rho_.size()) throw Error("saddle problem: ρ does not cover subsets");
  }
  for (double r : rho_) {
    if (!(r > 0.0)) throw Error("saddle problem: ρ must have full support after smoothing");
  }
  lik_.resize(n_policies_ * n_obs_ * ne);
  for (std::size_t pi = 0; pi < n_policies_; ++pi) {
    for (std::size_t o = 0; o < n_obs_; ++o) {
      for (std::size_t e = 0; e < ne; ++e) {
        lik_[(pi * n_obs_ + o) * ne + e] = game.obs(element_model_[e], pi, o);
      }
    }
  }
}

void PosteriorObjective::evaluate(const Vec& p, const Vec& y, Vec& g, Vec* grad) const {
  const std::size_t ne = element_model_.size();
  const std::size_t ng = rho_.size();
  g.assign(n_policies_, 0.0);
  if (grad != nullptr) grad->assign(ne, 0.0);
  Vec q(ng), logr(ng);
  for (std::size_t pi = 0; pi < n_policies_; ++pi) {
    const Vec& reg = regret_[pi];
    double gp = 0.0;
    for (std::size_t e = 0; e < ne; ++e) gp += y[e] * reg[e];
    const double w = p[pi];
    const bool want_grad = grad != nullptr && w > 0.0;
    double info = 0.0;
    for (std::size_t o = 0; o < n_obs_; ++o) {
      const double* l = lik_.data() + (pi * n_obs_ + o) * ne;
      std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t e = 0; e < ne; ++e) q[element_group_[e]] += y[e] * l[e];
      double m = 0.0;
      for (std::size_t k = 0; k < ng; ++k) m += q[k];
      if (!(m > 0.0)) continue;
      for (std::size_t k = 0; k < ng; ++k) {
        logr[k] = std::log(std::max(q[k], kTiny) / (m * rho_[k]));
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

PosteriorObjective::Terms PosteriorObjective::terms(const Vec& p, const Vec& y) const {
  const std::size_t ne = element_model_.size();
  const std::size_t ng = rho_.size();
  Terms t;
  Vec marginal(ng, 0.0);
  for (std::size_t e = 0; e < ne; ++e) marginal[element_group_[e]] += y[e];
  Vec q(ng);
  for (std::size_t pi = 0; pi < n_policies_; ++pi) {
    if (p[pi] == 0.0) continue;
    double reg = 0.0;
    for (std::size_t e = 0; e < ne; ++e) reg += y[e] * regret_[pi][e];
    double info = 0.0;
    for (std::size_t o = 0; o < n_obs_; ++o) {
      const double* l = lik_.data() + (pi * n_obs_ + o) * ne;
      std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t e = 0; e < ne; ++e) q[element_group_[e]] += y[e] * l[e];
      double m = 0.0;
      for (double v : q) m += v;
      if (!(m > 0.0)) continue;
      for (std::size_t k = 0; k < ng; ++k) {
        if (q[k] > 0.0) info += q[k] * std::log(q[k] / (m * marginal[k]));
      }
    }
    t.regret += p[pi] * reg;
    t.information_gain += p[pi] * info;
  }
  t.regularization = kl(marginal, rho_).value;
  t.value = value(p, y);
  return t;
}

std::unique_ptr<PosteriorObjective> make_air_phi(const FiniteGame& game,
                                                 const PartitionScheme& scheme, const Vec& rho,
                                                 double eta, double smoothing) {
  if (rho.size() != scheme.num_subsets()) throw Error("AIR^Φ: ρ must be a belief over Φ");
  const std::size_t ne = scheme.num_elements();
  std::vector<std::size_t> model(ne), group(ne);
  Matrix regret(game.num_policies(), Vec(ne));
  for (std::size_t e = 0; e < ne; ++e) {
    const Element& el = scheme.element(e);
    model[e] = el.model;
    group[e] = scheme.subset_of(e);
    for (std::size_t pi = 0; pi < game.num_policies(); ++pi) {
      regret[pi][e] = game.value(el.model, el.policy) - game.value(el.model, pi);
    }
  }
  return std::make_unique<PosteriorObjective>(game, std::move(model), std::move(group),
                                              std::move(regret), smooth(rho, smoothing), eta);
}

std::unique_ptr<PosteriorObjective> make_info_air(const FiniteGame& game,
                                                  const std::vector<std::vector<std::size_t>>& theta,
                                                  const std::vector<std::size_t>& meta_policy,
                                                  const Vec& rho, double eta, double smoothing) {
  if (theta.size() != meta_policy.size() || rho.size() != theta.size()) {
    throw Error("InfoAIR: Θ, π^Θ and ρ sizes disagree");
  }
  const std::size_t nm = game.num_models();
  std::vector<std::size_t> group(nm, PartitionScheme::npos);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (meta_policy[k] >= game.num_policies()) throw Error("InfoAIR: meta-policy out of range");
    for (std::size_t m : theta[k]) {
      if (m >= nm || group[m] != PartitionScheme::npos) {
        throw ValidationError("InfoAIR: Θ must partition the models", {k});
      }
      group[m] = k;
    }
  }
  std::vector<std::size_t> model(nm);
  Matrix regret(game.num_policies(), Vec(nm));
  for (std::size_t m = 0; m < nm; ++m) {
    if (group[m] == PartitionScheme::npos) throw ValidationError("InfoAIR: model not in Θ", {m});
    model[m] = m;
    const std::size_t comparator = meta_policy[group[m]];
    for (std::size_t pi = 0; pi < game.num_policies(); ++pi) {
      regret[pi][m] = game.value(m, comparator) - game.value(m, pi);
    }
  }
  return std::make_unique<PosteriorObjective>(game, std::move(model), std::move(group),
                                              std::move(regret), smooth(rho, smoothing), eta);
}

std::unique_ptr<SaddleObjective> make_objective(const SaddleProblem& problem) {
  switch (problem.kind) {
    case ObjectiveKind::air_phi:
      if (problem.game == nullptr || problem.scheme == nullptr) {
        throw Error("AIR^Φ problem needs a game and a partition scheme");
      }
      return make_air_phi(*problem.game, *problem.scheme, problem.rho, problem.eta,
                          problem.smoothing);
    case ObjectiveKind::info_air:
      if (problem.game == nullptr) throw Error("InfoAIR problem needs a game");
      return make_info_air(*problem.game, problem.theta, problem.meta_policy, problem.rho,
                           problem.eta, problem.smoothing);
    case ObjectiveKind::bilinear:
      return std::make_unique<BilinearObjective>(problem.payoff);
  }
  throw Error("unknown objective kind");
}

AirTerms eval_air_phi(const Vec& p, const Vec& nu, const SaddleProblem& problem) {
  if (problem.kind == ObjectiveKind::bilinear) throw Error("eval_air_phi on a bilinear problem");
  auto obj = make_objective(problem);
  return static_cast<const PosteriorObjective&>(*obj).terms(p, nu);
}

SaddleMethod parse_saddle_method(const std::string& name) {
  if (name == "mwu") return SaddleMethod::mwu;
  if (name == "best_response") return SaddleMethod::best_response;
  if (name == "extragradient") return SaddleMethod::extragradient;
  if (name == "cutting_plane") return SaddleMethod::cutting_plane;
  throw Error("unknown saddle method: " + name);
}

double frank_wolfe_bound(const SaddleObjective& obj, const Vec& p, const Vec& z) {
  Vec g, grad;
  obj.evaluate(p, z, g, &grad);
  return dot(p, g) + max_of(grad) - dot(grad, z);
}

GapCertificate certify_gap(const SaddleObjective& obj, const Vec& p, const Vec& y,
                           int refine_iters, double target) {
  GapCertificate cert;
  Vec g, grad;
  obj.evaluate(p, y, g, nullptr);
  cert.lower = min_of(g);
  cert.best_response_policy = argmin_lowest(g);

  Vec z = smooth(y, kProbeMix);
  obj.evaluate(p, z, g, &grad);
  double fz = dot(p, g);
  cert.upper = fz + max_of(grad) - dot(grad, z);
  cert.best_response_y = z;
  double step = 1.0 / std::max(range_of(grad), 1e-12);
  Vec cand, gc, gradc;
  for (int k = 0; k < refine_iters && cert.upper - cert.lower > target; ++k) {
    exp_update(z, grad, step, cand);
    obj.evaluate(p, cand, gc, &gradc);
    const double fc = dot(p, gc);
    if (fc + 1e-15 >= fz) {
      z.swap(cand);
      g.swap(gc);
      grad.swap(gradc);
      fz = fc;
      step *= 1.3;
      const double u = fz + max_of(grad) - dot(grad, z);
      if (u < cert.upper) {
        cert.upper = u;
        cert.best_response_y = z;
      }
    } else {
      step *= 0.5;
      if (step < 1e-14) break;
    }
  }
  cert.gap = cert.upper - cert.lower;
  return cert;
}

SaddleSolution solve_matrix_game(const Matrix& a) {
  if (a.empty() || a[0].empty()) throw Error("matrix game: empty payoff");
  const std::size_t n = a.size(), m = a[0].size();
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& row : a) {
    if (row.size() != m) throw Error("matrix game: ragged payoff");
    for (double v : row) lo = std::min(lo, v);
  }
  // With B = A − min A + 1 > 0: max Σx s.t. Bᵀx ≤ 1, x ≥ 0 gives p = x/Σx and value 1/Σx.
  const double shift = 1.0 - lo;
  const std::size_t cols = n + m;
  std::vector<Vec> tab(m, Vec(cols + 1, 0.0));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) tab[j][i] = a[i][j] + shift;
    tab[j][n + j] = 1.0;
    tab[j][cols] = 1.0;
  }
  Vec cost(cols + 1, 0.0);  // reduced costs of the maximization, stored negated
  for (std::size_t i = 0; i < n; ++i) cost[i] = -1.0;
  std::vector<std::size_t> basis(m);
  for (std::size_t j = 0; j < m; ++j) basis[j] = n + j;
  constexpr double eps = 1e-12;
  for (std::size_t it = 0; it < 50 * (n + m) + 1000; ++it) {
    std::size_t enter = cols;
    for (std::size_t c = 0; c < cols; ++c) {
      if (cost[c] < -eps) {
        enter = c;  // Bland: lowest index
        break;
      }
    }
    if (enter == cols) break;
    std::size_t leave = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (tab[j][enter] > eps) {
        const double ratio = tab[j][cols] / tab[j][enter];
        if (ratio < best - eps || (ratio <= best + eps && leave < m && basis[j] < basis[leave])) {
          best = ratio;
          leave = j;
        }
      }
    }
    if (leave == m) throw Error("matrix game: unbounded program");
    const double piv = tab[leave][enter];
    for (auto& v : tab[leave]) v /= piv;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == leave || tab[j][enter] == 0.0) continue;
      const double f = tab[j][enter];
      for (std::size_t c = 0; c <= cols; ++c) tab[j][c] -= f * tab[leave][c];
    }
    const double f = cost[enter];
    for (std::size_t c = 0; c <= cols; ++c) cost[c] -= f * tab[leave][c];
    basis[leave] = enter;
  }
  Vec x(n, 0.0), y(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (basis[j] < n) x[basis[j]] = std::max(0.0, tab[j][cols]);
  }
  for (std::size_t j = 0; j < m; ++j) y[j] = std::max(0.0, cost[n + j]);
  SaddleSolution sol;
  sol.p = normalized(x);
  sol.nu = normalized(y);
  const BilinearObjective obj(a);
  const GapCertificate c = certify_gap(obj, sol.p, sol.nu, 0);
  Vec g;
  obj.evaluate(sol.p, sol.nu, g, nullptr);
  sol.lower = c.lower;
  sol.upper = c.upper;
  sol.gap = c.gap;
  sol.value = dot(sol.p, g);
  sol.iters = 1;
  return sol;
}

SaddleSolution solve(const SaddleProblem& problem, const SaddleOptions& options) {
  return solve(*make_objective(problem), options);
}

SaddleSolution solve(const SaddleObjective& obj, const SaddleOptions& options) {
  if (!(options.tol > 0.0)) throw Error("saddle solve: tol must be positive");
  if (const auto* bil = dynamic_cast<const BilinearObjective*>(&obj)) {
    SaddleSolution sol = solve_matrix_game(bil->matrix());
    sol.converged = sol.gap <= options.tol;
    return sol;
  }
  if (options.method == SaddleMethod::cutting_plane) return cutting_plane(obj, options);
  const std::size_t n = obj.num_policies();
  const std::size_t m = obj.num_max();
  Vec p = start_point(options.p0, n);
  Vec y = start_point(options.y0, m);

  Vec g, grad;
  obj.evaluate(p, y, g, &grad);
  const double g0 = std::max({range_of(g), range_of(grad), 1e-12});

  Vec avg_p(n, 0.0), avg_y(m, 0.0);
  double weight_sum = 0.0;
  double alpha_p = options.step_scale / g0;
  double alpha_y = alpha_p;

  double best_lower = -std::numeric_limits<double>::infinity();
  double best_upper = std::numeric_limits<double>::infinity();
  Vec best_p = p, best_y = y;

  auto consider = [&](const Vec& pc, const Vec& yc, double target) {
    GapCertificate c = certify_gap(obj, pc, yc, options.refine_iters, target);
    if (c.lower > best_lower) {
      best_lower = c.lower;
      best_y = yc;
    }
    if (c.upper < best_upper) {
      best_upper = c.upper;
      best_p = pc;
    }
    // The refined best response is also a candidate for the maximizer.
    Vec gb;
    obj.evaluate(pc, c.best_response_y, gb, nullptr);
    const double lb = min_of(gb);
    if (lb > best_lower) {
      best_lower = lb;
      best_y = c.best_response_y;
    }
  };

  Vec ph, yh, gh, gradh, pn, yn, gs, grads;
  int next_check = 10;
  int t = 0;
  bool converged = false;
  for (t = 1; t <= options.max_iters; ++t) {
    switch (options.method) {
      case SaddleMethod::extragradient: {
        // Mirror-prox with a step per block, each backtracked on
        // α⟨F(w) − F(z), w − z⁺⟩ ≤ KL(w‖z) + KL(z⁺‖w) restricted to that block.
        for (int tries = 0;; ++tries) {
          exp_update(p, g, -alpha_p, ph);
          exp_update(y, grad, alpha_y, yh);
          obj.evaluate(ph, yh, gh, &gradh);
          exp_update(p, gh, -alpha_p, pn);
          exp_update(y, gradh, alpha_y, yn);
          double lhs_p = 0.0, lhs_y = 0.0;
          for (std::size_t i = 0; i < n; ++i) lhs_p += (gh[i] - g[i]) * (ph[i] - pn[i]);
          for (std::size_t j = 0; j < m; ++j) lhs_y -= (gradh[j] - grad[j]) * (yh[j] - yn[j]);
          const bool ok_p = alpha_p * lhs_p <= kl_iterates(ph, p) + kl_iterates(pn, ph) + 1e-15;
          const bool ok_y = alpha_y * lhs_y <= kl_iterates(yh, y) + kl_iterates(yn, yh) + 1e-15;
          if ((ok_p && ok_y) || tries == 60) break;
          // g is linear in p, so a p-block failure comes from the move in y. A y-block
          // failure is charged to the larger of the self and cross parts of the change in ∇.
          bool shrink_p = false, shrink_y = !ok_p;
          if (!ok_y) {
            obj.evaluate(p, yh, gs, &grads);
            double self = 0.0, cross = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
              self = std::max(self, std::abs(grads[j] - grad[j]));
              cross = std::max(cross, std::abs(gradh[j] - grads[j]));
            }
            (cross > self ? shrink_p : shrink_y) = true;
          }
          if (shrink_p) alpha_p *= 0.5;
          if (shrink_y) alpha_y *= 0.5;
        }
        const double w = std::min(alpha_p, alpha_y);
        for (std::size_t i = 0; i < n; ++i) avg_p[i] += w * ph[i];
        for (std::size_t j = 0; j < m; ++j) avg_y[j] += w * yh[j];
        weight_sum += w;
        p.swap(pn);
        y.swap(yn);
        alpha_p *= 1.25;
        alpha_y *= 1.25;
        break;
      }
      case SaddleMethod::mwu: {
        const double alpha = options.step_scale / (g0 * std::sqrt(static_cast<double>(t)));
        for (std::size_t i = 0; i < n; ++i) avg_p[i] += p[i];
        for (std::size_t j = 0; j < m; ++j) avg_y[j] += y[j];
        weight_sum += 1.0;
        exp_update(p, g, -alpha, pn);
        exp_update(y, grad, alpha, yn);
        p.swap(pn);
        y.swap(yn);
        break;
      }
      case SaddleMethod::cutting_plane:
        break;
      case SaddleMethod::best_response: {
        const double alpha = options.step_scale / (g0 * std::sqrt(static_cast<double>(t)));
        Vec pb(n, 0.0);
        pb[argmin_lowest(g)] = 1.0;
        obj.evaluate(pb, y, gh, &gradh);
        for (std::size_t i = 0; i < n; ++i) avg_p[i] += pb[i];
        for (std::size_t j = 0; j < m; ++j) avg_y[j] += y[j];
        weight_sum += 1.0;
        exp_update(y, gradh, alpha, yn);
        y.swap(yn);
        break;
      }
    }
    obj.evaluate(p, y, g, &grad);
    if (t == next_check || t == options.max_iters) {
      Vec ap(avg_p), ay(avg_y);
      for (auto& v : ap) v /= weight_sum;
      for (auto& v : ay) v /= weight_sum;
      const double target = 0.5 * options.tol;
      consider(ap, ay, target);
      if (best_upper - best_lower > options.tol) consider(p, y, target);
      if (best_upper - best_lower <= options.tol) {
        converged = true;
        break;
      }
      next_check = std::max(next_check + 10, static_cast<int>(next_check * 1.5));
    }
  }

  SaddleSolution sol;
  sol.p = best_p;
  sol.nu = best_y;
  sol.lower = best_lower;
  sol.upper = best_upper;
  sol.gap = best_upper - best_lower;
  sol.value = obj.value(best_p, best_y);
  sol.iters = std::min(t, options.max_iters);
  sol.converged = converged;
  return sol;
}

AscentResult fixed_point_ascent(std::size_t dim, const InnerSolve& inner, const NextReference& next,
                                const SaddleOptions& options, const AscentOptions& ascent,
                                const std::vector<Vec>& seeds) {
  if (dim == 0) throw Error("fixed_point_ascent: empty reference simplex");
  AscentResult out;
  out.value = -std::numeric_limits<double>::infinity();

  auto record = [&](const Vec& ref, const SaddleSolution& sol) {
    if (sol.lower > out.value) {
      out.value = sol.lower;
      out.upper = sol.upper;
      out.reference = ref;
      out.solution = sol;
    }
  };

  std::vector<Vec> starts;
  starts.push_back(uniform_vec(dim));
  Rng rng(ascent.seed);
  for (int s = 1; s < ascent.multistarts; ++s) starts.push_back(rng.dirichlet(dim, 1.0));

  if (!seeds.empty() && ascent.grid_refine > 0) {
    SaddleOptions screen = options;
    screen.tol = std::max(options.tol, ascent.screen_tol);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      SaddleSolution sol = inner(seeds[i], screen);
      record(seeds[i], sol);
      scored.emplace_back(-sol.lower, i);
    }
    std::stable_sort(scored.begin(), scored.end());
    const std::size_t take = std::min<std::size_t>(scored.size(), ascent.grid_refine);
    for (std::size_t i = 0; i < take; ++i) starts.push_back(seeds[scored[i].second]);
  }

  // Log-space over-relaxation of the fixed point: ω doubles after every improving step and
  // falls back to the plain update when a step loses value.
  auto extrapolate = [](const Vec& from, const Vec& to, double omega) {
    Vec out(to.size(), 0.0);
    Vec logs(to.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < to.size(); ++k) {
      if (to[k] > 0.0 && from[k] > 0.0) {
        logs[k] = std::log(from[k]) + omega * (std::log(to[k]) - std::log(from[k]));
      } else if (to[k] > 0.0) {
        logs[k] = std::log(to[k]);
      }
    }
    const double z = log_sum_exp(logs);
    for (std::size_t k = 0; k < to.size(); ++k) out[k] = std::exp(logs[k] - z);
    return out;
  };

  for (const Vec& start : starts) {
    Vec ref = start;
    SaddleOptions opts = options;
    double best = -std::numeric_limits<double>::infinity();
    double omega = 1.0;
    Vec fallback;
    int stall = 0;
    for (int it = 0; it < ascent.max_outer; ++it) {
      SaddleSolution sol = inner(ref, opts);
      ++out.outer_iters;
      record(ref, sol);
      if (omega > 1.0 && sol.lower < best) {
        omega = 1.0;
        ref = fallback;
        continue;
      }
      stall = sol.lower - best < 0.01 * options.tol ? stall + 1 : 0;
      best = std::max(best, sol.lower);
      Vec following = next(sol);
      double moved = 0.0;
      for (std::size_t k = 0; k < dim; ++k) moved = std::max(moved, std::abs(following[k] - ref[k]));
      if (moved < 1e-9 || stall >= 3) break;
      omega = std::min(2.0 * omega, 32.0);
      Vec proposal = extrapolate(ref, following, omega);
      fallback = std::move(following);
      ref = std::move(proposal);
      opts.p0 = sol.p;
      opts.y0 = sol.nu;
    }
    out.start_values.push_back(best);
  }
  return out;
}

WorstCaseReference worst_case_reference(const FiniteGame& game, const PartitionScheme& scheme,
                                        double eta, const SaddleOptions& options,
                                        const AscentOptions& ascent, std::size_t cap) {
  const std::size_t size = scheme.num_subsets() * scheme.num_elements() * game.num_policies();
  if (size > cap) {
    throw CapExceeded("worst_case_reference: |Φ|·|Ψ|·|Π| = " + std::to_string(size) +
                      " exceeds the cap; use the complexity module's dec_kl_phi instead");
  }
  auto inner = [&](const Vec& rho, const SaddleOptions& opts) {
    return solve(*make_air_phi(game, scheme, rho, eta), opts);
  };
  auto next = [&](const SaddleSolution& sol) {
    Vec rho(scheme.num_subsets(), 0.0);
    for (std::size_t e = 0; e < scheme.num_elements(); ++e) rho[scheme.subset_of(e)] += sol.nu[e];
    return rho;
  };
  // Seeds: model-mixture grid points spread evenly over each model's elements, then a grid
  // over the subsets themselves.
  std::vector<std::size_t> per_model(game.num_models(), 0);
  for (const Element& el : scheme.elements()) ++per_model[el.model];
  std::vector<Vec> seeds;
  for (const Vec& mu : simplex_grid(game.num_models(), ascent.grid_budget)) {
    Vec rho(scheme.num_subsets(), 0.0);
    for (std::size_t e = 0; e < scheme.num_elements(); ++e) {
      const std::size_t m = scheme.element(e).model;
      rho[scheme.subset_of(e)] += mu[m] / static_cast<double>(per_model[m]);
    }
    double total = 0.0;
    for (double r : rho) total += r;
    if (total > 0.0) seeds.push_back(normalized(rho));
  }
  for (Vec rho : simplex_grid(scheme.num_subsets(), ascent.grid_budget)) {
    for (double& r : rho) r = 0.98 * r + 0.02 / static_cast<double>(rho.size());
    seeds.push_back(std::move(rho));
  }
  return fixed_point_ascent(scheme.num_subsets(), inner, next, options, ascent, seeds);
}

}  // namespace declab
