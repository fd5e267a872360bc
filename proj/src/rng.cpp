#include "declab/rng.hpp"

#include "declab/errors.hpp"

namespace declab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL));
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw Error("Rng::index on empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

double Rng::normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

double Rng::gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

std::vector<double> Rng::dirichlet(std::size_t n, double alpha) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = gamma(alpha);
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

std::size_t Rng::categorical(const std::vector<double>& probs) {
  const double u = uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  for (std::size_t i = probs.size(); i > 0; --i) {
    if (probs[i - 1] > 0.0) return i - 1;
  }
  throw Error("categorical draw from an all-zero vector");
}

}  // namespace declab
