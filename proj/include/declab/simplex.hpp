#pragma once

#include <cstddef>
#include <vector>

namespace declab {

using Vec = std::vector<double>;

// KL divergence with +∞ represented explicitly instead of as a float.
struct KlValue {
  double value = 0.0;
  bool infinite = false;

  bool operator<=(double bound) const { return !infinite && value <= bound; }
};

void check_prob_vec(const Vec& p, double tol, const char* what);

KlValue kl(const Vec& p, const Vec& q);
// KL against q smoothed with `eps` uniform mass; always finite.
double kl_smoothed(const Vec& p, const Vec& q, double eps);
// Squared Hellinger distance, normalized to lie in [0,1].
double hellinger_sq(const Vec& p, const Vec& q);
double tv(const Vec& p, const Vec& q);

double entropy(const Vec& p);
double log_sum_exp(const Vec& x);
Vec softmax(const Vec& logits);
Vec normalized(const Vec& w);
Vec uniform_vec(std::size_t n);
// (q + eps) / (1 + n·eps)
Vec smooth(const Vec& q, double eps);
Vec mix(const Vec& a, const Vec& b, double lambda);  // λa + (1−λ)b
double dot(const Vec& a, const Vec& b);
// Points of Δ(n) with coordinates in (1/r)ℤ for the largest r ≥ 1 keeping the count within
// `budget`; empty when even the vertices exceed it.
std::vector<Vec> simplex_grid(std::size_t n, std::size_t budget);

}  // namespace declab
