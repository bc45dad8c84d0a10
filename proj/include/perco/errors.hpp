#pragma once

#include <stdexcept>

namespace perco {

// Bad user input (CLI maps this to exit code 1).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation needs sigma digits beyond the stored prefix.
struct depth_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A kernel violated symmetry, the power-law lower bound, or J >= H.
struct kernel_contract_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Objects built against different sigma decompositions were mixed.
struct mismatch_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Instance exceeds the exact-enumeration budget.
struct size_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Estimator invoked with too few replicates.
struct insufficient_samples_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Root bracketing / bisection failed (CLI maps this to exit code 2).
struct bisection_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace perco
