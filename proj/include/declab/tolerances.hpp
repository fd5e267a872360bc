#pragma once

#include <cstddef>

namespace declab {

// Every numeric tolerance used by library checks, tests and the CLI.
struct ToleranceProfile {
  double prob_row_sum = 1e-12;      // obs_dist rows at construction
  double prob_row_sum_load = 1e-9;  // rows read from JSON
  double belief_sum = 1e-10;
  double kl_smoothing = 1e-12;      // uniform mass mixed into solver-facing references
  double saddle_tol = 1e-3;
  int saddle_max_iters = 50000;
  double lemma_tol = 2e-3;          // equality checks between complexity programs
  double bound_tol = 1e-3;          // theorem bound slack
  double embedding_identity = 1e-9;
  double linear_qv_residual = 1e-9;
  double linear_qv_grouping = 1e-9;
  double pdl_residual = 1e-10;
  double occupancy_identity = 1e-12;
  double grid_match = 2e-2;
  int dec_multistarts = 32;
  int closure_depth = 3;
  std::size_t solver_cap = 10000;   // |M|·|Π|·|O|
  std::size_t grid_cap = 512;
  std::size_t trajectory_cap = 1u << 16;
  std::size_t closure_cap = 4096;
  std::size_t alg3_enumeration_cap = 4096;
  double abort_fraction = 0.10;
};

inline const ToleranceProfile& default_tolerances() {
  static const ToleranceProfile profile{};
  return profile;
}

}  // namespace declab
