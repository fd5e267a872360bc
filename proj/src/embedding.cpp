#include "declab/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/Dense>

#include "declab/errors.hpp"

namespace declab {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Rank-d factorization M ≈ L Rᵀ with L = U_dΣ_d, R = V_d; returns the max reconstruction error.
double factor_rank(const MatrixXd& m, std::size_t d, Vec& left, Vec& right) {
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index k = std::min<Index>(static_cast<Index>(d), svd.singularValues().size());
  MatrixXd l = MatrixXd::Zero(m.rows(), static_cast<Index>(d));
  MatrixXd r = MatrixXd::Zero(m.cols(), static_cast<Index>(d));
  l.leftCols(k) = svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal();
  r.leftCols(k) = svd.matrixV().leftCols(k);
  const double err = (m - l * r.transpose()).cwiseAbs().maxCoeff();
  left.assign(static_cast<std::size_t>(l.size()), 0.0);
  right.assign(static_cast<std::size_t>(r.size()), 0.0);
  for (Index i = 0; i < l.rows(); ++i) {
    for (Index c = 0; c < l.cols(); ++c) left[static_cast<std::size_t>(i) * d + c] = l(i, c);
  }
  for (Index i = 0; i < r.rows(); ++i) {
    for (Index c = 0; c < r.cols(); ++c) right[static_cast<std::size_t>(i) * d + c] = r(i, c);
  }
  return err;
}

}  // namespace

void HybridFamily::validate() const {
  if (transitions.empty() || rewards.empty() || policies.empty()) {
    throw ValidationError("hybrid family: empty transition, reward or policy set");
  }
  const Transition& t0 = transitions.front();
  for (const Transition& t : transitions) {
    if (t.S != t0.S || t.A != t0.A || t.H != t0.H || t.s1 != t0.s1) {
      throw ValidationError("hybrid family: transitions differ in shape or start state");
    }
    t.validate(1e-9);
  }
  for (const Reward& r : rewards) {
    if (r.S != t0.S || r.A != t0.A || r.H != t0.H) {
      throw ValidationError("hybrid family: reward shape mismatch");
    }
    r.validate();
    for (const Transition& t : transitions) TabularMDP{t, r}.validate(1e-9);
  }
  for (const StagePolicy& p : policies) {
    if (p.S != t0.S || p.A != t0.A || p.H != t0.H) {
      throw ValidationError("hybrid family: policy shape mismatch");
    }
    p.validate(1e-9);
  }
}

EmbeddingKind parse_embedding_kind(const std::string& name) {
  if (name == "low_rank") return EmbeddingKind::low_rank;
  if (name == "low_occupancy") return EmbeddingKind::low_occupancy;
  throw Error("unknown embedding kind: " + name);
}

std::string to_string(EmbeddingKind kind) {
  return kind == EmbeddingKind::low_rank ? "low_rank" : "low_occupancy";
}

BilinearEmbedding::BilinearEmbedding(EmbeddingKind kind, HybridFamily family, std::size_t d,
                                     double tol)
    : kind_(kind), family_(std::move(family)), d_(d) {
  family_.validate();
  if (d_ == 0) throw ValidationError("embedding: rank must be positive");
  const Transition& t0 = family_.transitions.front();
  S_ = t0.S;
  A_ = t0.A;
  H_ = t0.H;
  for (std::size_t i = 0; i < family_.policies.size(); ++i) {
    std::vector<std::vector<Vec>> seen;
    for (std::size_t j = 0; j < family_.transitions.size(); ++j) {
      std::vector<Vec> tables;
      for (const Reward& r : family_.rewards) {
        tables.push_back(dp_eval(family_.transitions[j], r, family_.policies[i]).Q);
      }
      bool duplicate = false;
      for (const auto& other : seen) {
        bool same = true;
        for (std::size_t k = 0; k < tables.size() && same; ++k) {
          same = max_abs_diff(tables[k], other[k]) <= 1e-12;
        }
        duplicate = duplicate || same;
      }
      if (duplicate) continue;
      seen.push_back(std::move(tables));
      functions_.push_back({i, j});
    }
  }
  factor();
  check_identities(tol);
}

void BilinearEmbedding::factor() {
  const std::size_t n_pol = family_.policies.size();
  left_.assign(family_.transitions.size(), std::vector<Vec>(H_));
  right_.assign(family_.transitions.size(), std::vector<Vec>(H_));
  double worst = 0.0;
  for (std::size_t j = 0; j < family_.transitions.size(); ++j) {
    const Transition& P = family_.transitions[j];
    if (kind_ == EmbeddingKind::low_occupancy) {
      std::vector<Vec> occ;
      for (const StagePolicy& pi : family_.policies) occ.push_back(occupancy(P, pi));
      for (std::size_t h = 0; h < H_; ++h) {
        MatrixXd m(static_cast<Index>(n_pol), static_cast<Index>(S_ * A_));
        for (std::size_t i = 0; i < n_pol; ++i) {
          for (std::size_t k = 0; k < S_ * A_; ++k) {
            m(static_cast<Index>(i), static_cast<Index>(k)) = occ[i][h * S_ * A_ + k];
          }
        }
        worst = std::max(worst, factor_rank(m, d_, left_[j][h], right_[j][h]));
      }
    } else {
      for (std::size_t h = 1; h < H_; ++h) {
        MatrixXd m(static_cast<Index>(S_ * A_), static_cast<Index>(S_));
        for (std::size_t k = 0; k < S_ * A_; ++k) {
          for (std::size_t s2 = 0; s2 < S_; ++s2) {
            m(static_cast<Index>(k), static_cast<Index>(s2)) = P.P[((h - 1) * S_ * A_ + k) * S_ + s2];
          }
        }
        worst = std::max(worst, factor_rank(m, d_, left_[j][h], right_[j][h]));
      }
    }
  }
  if (worst > 1e-9) {
    throw AssertionFailure("embedding: family is not rank " + std::to_string(d_) +
                           " (max factorization residual " + std::to_string(worst) + ")");
  }
}

Vec BilinearEmbedding::f_table(std::size_t phi, const Reward& R) const {
  const HybridFunction& f = functions_.at(phi);
  return dp_eval(family_.transitions[f.transition], R, family_.policies[f.policy]).Q;
}

double BilinearEmbedding::predicted_value(std::size_t phi, const Reward& R) const {
  const HybridFunction& f = functions_.at(phi);
  return dp_eval(family_.transitions[f.transition], R, family_.policies[f.policy]).value;
}

Vec BilinearEmbedding::residual(std::size_t phi, const Transition& P, const Reward& R) const {
  const StagePolicy& pi = family_.policies[functions_.at(phi).policy];
  const Vec f = f_table(phi, R);
  Vec out(H_ * S_ * A_, 0.0);
  Vec v_next(S_, 0.0);
  for (std::size_t h = H_; h-- > 0;) {
    for (std::size_t s = 0; s < S_; ++s) {
      for (std::size_t a = 0; a < A_; ++a) {
        const std::size_t k = (h * S_ + s) * A_ + a;
        out[k] = f[k] - backup(P, R, h, s, a, v_next.data());
      }
    }
    // Same accumulation order as dp_eval, so a consistent f has an exactly zero residual.
    for (std::size_t s = 0; s < S_; ++s) {
      double v = 0.0;
      for (std::size_t a = 0; a < A_; ++a) v += pi(h, s, a) * f[(h * S_ + s) * A_ + a];
      v_next[s] = v;
    }
  }
  return out;
}

double BilinearEmbedding::loss(std::size_t phi, const Vec& f, const Reward& R, std::size_t h,
                               std::size_t s, std::size_t a, std::size_t s2) const {
  const StagePolicy& pi = family_.policies[functions_.at(phi).policy];
  double next = 0.0;
  if (h + 1 < H_) {
    for (std::size_t a2 = 0; a2 < A_; ++a2) next += pi(h + 1, s2, a2) * f[((h + 1) * S_ + s2) * A_ + a2];
  }
  const double base = f[(h * S_ + s) * A_ + a] - R.r(h, s, a) - next;
  if (kind_ == EmbeddingKind::low_rank) return static_cast<double>(A_) * pi(h, s, a) * base;
  return base;
}

Vec BilinearEmbedding::expected_loss(std::size_t phi, const Transition& P, const Reward& R) const {
  Vec out = residual(phi, P, R);
  if (kind_ == EmbeddingKind::low_rank) {
    const StagePolicy& pi = family_.policies[functions_.at(phi).policy];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= static_cast<double>(A_) * pi.prob[k];
  }
  return out;
}

StagePolicy BilinearEmbedding::est_policy(const StagePolicy& pi) const {
  return kind_ == EmbeddingKind::low_rank ? StagePolicy::uniform(S_, A_, H_) : pi;
}

Vec BilinearEmbedding::X(std::size_t h, std::size_t policy, std::size_t transition) const {
  Vec x(d_, 0.0);
  if (kind_ == EmbeddingKind::low_occupancy) {
    const Vec& l = left_.at(transition).at(h);
    std::copy(l.begin() + static_cast<std::ptrdiff_t>(policy * d_),
              l.begin() + static_cast<std::ptrdiff_t>((policy + 1) * d_), x.begin());
    return x;
  }
  if (h == 0) {
    x[0] = 1.0;
    return x;
  }
  const Vec d = occupancy(family_.transitions.at(transition), family_.policies.at(policy));
  const Vec& l = left_[transition][h];
  for (std::size_t k = 0; k < S_ * A_; ++k) {
    const double w = d[(h - 1) * S_ * A_ + k];
    for (std::size_t c = 0; c < d_; ++c) x[c] += w * l[k * d_ + c];
  }
  return x;
}

Vec BilinearEmbedding::W(std::size_t h, std::size_t phi, const Reward& R,
                         std::size_t transition) const {
  const Vec resid = residual(phi, family_.transitions.at(transition), R);
  Vec w(d_, 0.0);
  if (kind_ == EmbeddingKind::low_occupancy) {
    const Vec& r = right_[transition][h];
    for (std::size_t k = 0; k < S_ * A_; ++k) {
      for (std::size_t c = 0; c < d_; ++c) w[c] += r[k * d_ + c] * resid[h * S_ * A_ + k];
    }
    return w;
  }
  const StagePolicy& pi = family_.policies[functions_[phi].policy];
  for (std::size_t s = 0; s < S_; ++s) {
    double inner = 0.0;
    for (std::size_t a = 0; a < A_; ++a) inner += pi(h, s, a) * resid[(h * S_ + s) * A_ + a];
    if (h == 0) {
      if (s == family_.transitions.front().s1) w[0] += inner;
      continue;
    }
    const Vec& r = right_[transition][h];
    for (std::size_t c = 0; c < d_; ++c) w[c] += r[s * d_ + c] * inner;
  }
  return w;
}

void BilinearEmbedding::check_identities(double tol) {
  const std::size_t n_pol = family_.policies.size();
  const std::size_t n_tr = family_.transitions.size();
  const std::size_t n_r = family_.rewards.size();
  const std::size_t SA = S_ * A_;
  // Occupancy of π ∘_h est(π) at stage h, per (π, P, h).
  std::vector<Vec> roll(n_pol * n_tr * H_);
  for (std::size_t i = 0; i < n_pol; ++i) {
    const StagePolicy est = est_policy(family_.policies[i]);
    for (std::size_t j = 0; j < n_tr; ++j) {
      for (std::size_t h = 0; h < H_; ++h) {
        const Vec d = occupancy(family_.transitions[j], switch_policy(family_.policies[i], est, h));
        roll[(i * n_tr + j) * H_ + h] = Vec(d.begin() + static_cast<std::ptrdiff_t>(h * SA),
                                           d.begin() + static_cast<std::ptrdiff_t>((h + 1) * SA));
      }
    }
  }
  double worst = 0.0;
  for (std::size_t phi = 0; phi < functions_.size(); ++phi) {
    for (std::size_t r = 0; r < n_r; ++r) {
      const Reward& R = family_.rewards[r];
      for (std::size_t j = 0; j < n_tr; ++j) {
        const Vec el = expected_loss(phi, family_.transitions[j], R);
        std::vector<Vec> w(H_);
        for (std::size_t h = 0; h < H_; ++h) w[h] = W(h, phi, R, j);
        for (std::size_t i = 0; i < n_pol; ++i) {
          double telescoped = 0.0;
          for (std::size_t h = 0; h < H_; ++h) {
            const double lhs = dot(X(h, i, j), w[h]);
            const Vec& d = roll[(i * n_tr + j) * H_ + h];
            double rhs = 0.0;
            for (std::size_t k = 0; k < SA; ++k) rhs += d[k] * el[h * SA + k];
            worst = std::max(worst, std::abs(lhs - rhs));
            telescoped += std::abs(lhs);
          }
          if (functions_[phi].policy == i) {
            const double gap =
                std::abs(predicted_value(phi, R) - dp_eval(family_.transitions[j], R, family_.policies[i]).value);
            worst = std::max(worst, gap - telescoped);
          }
        }
      }
    }
  }
  identity_residual_ = worst;
  if (worst > tol) {
    throw AssertionFailure("embedding: bilinear identity violated (max residual " +
                           std::to_string(worst) + ")");
  }
}

double BilinearEmbedding::loss_bound() const {
  double L = 0.0;
  for (std::size_t phi = 0; phi < functions_.size(); ++phi) {
    for (const Reward& R : family_.rewards) {
      const Vec f = f_table(phi, R);
      for (std::size_t h = 0; h < H_; ++h) {
        for (std::size_t s = 0; s < S_; ++s) {
          for (std::size_t a = 0; a < A_; ++a) {
            for (std::size_t s2 = 0; s2 < S_; ++s2) {
              L = std::max(L, std::abs(loss(phi, f, R, h, s, a, s2)));
            }
          }
        }
      }
    }
  }
  return L;
}

double bilinear_divergence(const BilinearEmbedding& emb, const StagePolicy& pi, std::size_t phi,
                           const Transition& P, const Reward& R) {
  const Vec d = occupancy(P, pi);
  const Vec el = emb.expected_loss(phi, P, R);
  const std::size_t SA = P.S * P.A;
  double total = 0.0;
  for (std::size_t h = 0; h < P.H; ++h) {
    double mean = 0.0;
    for (std::size_t k = 0; k < SA; ++k) mean += d[h * SA + k] * el[h * SA + k];
    total += mean * mean;
  }
  return total;
}

}  // namespace declab
