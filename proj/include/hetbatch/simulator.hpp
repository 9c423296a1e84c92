#pragma once

// Batch dispatch to a builtin testbed or an external command.
//
// External protocol: the command reads a header-bearing CSV (x1..xd, native
// scale) on stdin and prints one numeric response per line on stdout, in input
// order. BATCHDESIGN_SEED carries the per-batch seed. A nonzero exit marks the
// whole attempt failed; missing or non-numeric lines mark single runs failed.

#include "hetbatch/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hetbatch
{
struct BatchOutcome
{
  Vector y;                  ///< NaN where a run is missing
  int attempts = 0;
  Index missing = 0;
  std::vector<std::string> log; ///< human-readable notes about failures and retries
};

/// One attempt at the whole batch. Coded inputs are mapped to [lower, upper].
Vector simulate_once(const SimulatorRef& sim, const Matrix& coded, const Vector& lower, const Vector& upper,
                     std::uint64_t seed, int jobs = 1);

/// Runs the batch, retries the missing subset once, and throws SimulatorError when
/// fewer than half of the runs come back.
BatchOutcome simulate_batch(const SimulatorRef& sim, const Matrix& coded, const Vector& lower, const Vector& upper,
                            std::uint64_t seed, int jobs = 1);

/// Response transform with a running floor: y = log max(v, floor / 2) where floor is
/// the smallest positive raw response seen so far (updated in place).
class ResponseTransform
{
public:
  explicit ResponseTransform(Transform kind = Transform::none, double min_positive = 0.0)
      : kind_(kind), min_positive_(min_positive)
  {
  }
  /// Transforms a batch of raw responses; NaN entries stay NaN.
  Vector apply(const Vector& raw);
  double min_positive() const { return min_positive_; }

private:
  Transform kind_;
  double min_positive_;
};

Matrix to_native(const Matrix& coded, const Vector& lower, const Vector& upper);
Matrix to_coded(const Matrix& native, const Vector& lower, const Vector& upper);
} // namespace hetbatch
