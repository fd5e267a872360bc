#include "declab/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "declab/errors.hpp"

namespace declab {

namespace {

void require_same_dim(const Vec& p, const Vec& q, const char* op) {
  if (p.size() != q.size()) {
    throw Error(std::string(op) + ": dimension mismatch (" + std::to_string(p.size()) + " vs " +
                std::to_string(q.size()) + ")");
  }
}

}  // namespace

void check_prob_vec(const Vec& p, double tol, const char* what) {
  if (p.empty()) throw ValidationError(std::string(what) + ": empty probability vector");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) {
      throw ValidationError(std::string(what) + ": negative or non-finite entry", {i});
    }
    total += p[i];
  }
  if (std::abs(total - 1.0) > tol) {
    throw ValidationError(std::string(what) + ": sums to " + std::to_string(total));
  }
}

KlValue kl(const Vec& p, const Vec& q) {
  require_same_dim(p, q, "kl");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return KlValue{std::numeric_limits<double>::infinity(), true};
    total += p[i] * std::log(p[i] / q[i]);
  }
  return KlValue{std::max(total, 0.0), false};
}

double kl_smoothed(const Vec& p, const Vec& q, double eps) {
  return kl(p, smooth(q, eps)).value;
}

double hellinger_sq(const Vec& p, const Vec& q) {
  require_same_dim(p, q, "hellinger_sq");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(std::max(p[i], 0.0)) - std::sqrt(std::max(q[i], 0.0));
    total += d * d;
  }
  return std::clamp(0.5 * total, 0.0, 1.0);
}

double tv(const Vec& p, const Vec& q) {
  require_same_dim(p, q, "tv");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return std::clamp(0.5 * total, 0.0, 1.0);
}

double entropy(const Vec& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

double log_sum_exp(const Vec& x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

Vec softmax(const Vec& logits) {
  const double z = log_sum_exp(logits);
  if (!std::isfinite(z)) throw Error("softmax of all -inf logits");
  Vec out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = std::exp(logits[i] - z);
  return out;
}

Vec normalized(const Vec& w) {
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) throw Error("normalized: nonpositive total mass");
  Vec out(w);
  for (auto& x : out) x /= total;
  return out;
}

Vec uniform_vec(std::size_t n) { return Vec(n, 1.0 / static_cast<double>(n)); }

Vec smooth(const Vec& q, double eps) {
  const double denom = 1.0 + eps * static_cast<double>(q.size());
  Vec out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = (q[i] + eps) / denom;
  return out;
}

Vec mix(const Vec& a, const Vec& b, double lambda) {
  require_same_dim(a, b, "mix");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = lambda * a[i] + (1.0 - lambda) * b[i];
  return out;
}

double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace {

double grid_count(std::size_t n, int r) {
  // C(r + n - 1, n - 1)
  double c = 1.0;
  for (std::size_t i = 1; i < n; ++i) c = c * static_cast<double>(r + i) / static_cast<double>(i);
  return c;
}

void fill_grid(std::size_t n, int remaining, int r, std::vector<int>& cur, std::vector<Vec>& out) {
  if (cur.size() + 1 == n) {
    cur.push_back(remaining);
    Vec v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(cur[i]) / r;
    out.push_back(std::move(v));
    cur.pop_back();
    return;
  }
  for (int i = remaining; i >= 0; --i) {
    cur.push_back(i);
    fill_grid(n, remaining - i, r, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<Vec> simplex_grid(std::size_t n, std::size_t budget) {
  std::vector<Vec> out;
  if (n == 0 || static_cast<double>(n) > static_cast<double>(budget)) return out;
  int r = 1;
  while (r < 64 && grid_count(n, r + 1) <= static_cast<double>(budget)) ++r;
  std::vector<int> cur;
  fill_grid(n, r, r, cur, out);
  return out;
}

}  // namespace declab
