#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace declab {

// Seeded generator that derives independent child streams by key.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  Rng split(std::uint64_t stream) const;

  double uniform();
  double uniform(double lo, double hi);
  std::size_t index(std::size_t n);
  double normal();
  double gamma(double shape);
  std::vector<double> dirichlet(std::size_t n, double alpha = 1.0);
  std::size_t categorical(const std::vector<double>& probs);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace declab
