#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace declab {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invariant violation in user-supplied data; `indices` names the offending items.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::size_t> indices = {})
      : Error(what), indices_(std::move(indices)) {}
  const std::vector<std::size_t>& indices() const { return indices_; }

 private:
  std::vector<std::size_t> indices_;
};

class ImpossibleObservation : public Error {
 public:
  ImpossibleObservation(std::size_t policy, std::size_t observation)
      : Error("impossible observation (policy " + std::to_string(policy) +
              ", observation " + std::to_string(observation) + ")"),
        policy_(policy),
        observation_(observation) {}
  std::size_t policy() const { return policy_; }
  std::size_t observation() const { return observation_; }

 private:
  std::size_t policy_;
  std::size_t observation_;
};

class CapExceeded : public Error {
 public:
  explicit CapExceeded(const std::string& what) : Error(what) {}
};

// A verified lemma or bound did not hold.
class AssertionFailure : public Error {
 public:
  explicit AssertionFailure(const std::string& what) : Error(what) {}
};

}  // namespace declab
