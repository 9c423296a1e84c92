#pragma once

// Box-constrained limited-memory quasi-Newton minimizer.
//
// Projected L-BFGS: variables pinned at a bound with the gradient pushing
// outward are frozen for the iteration, the two-loop recursion builds a search
// direction on the remaining ones, and a backtracking Armijo search runs along
// the projected path. Fully deterministic for a given start point.

#include "hetbatch/types.hpp"

#include <functional>
#include <string>

namespace hetbatch
{
struct BoxQnOptions
{
  int max_iter = 200;
  double pgtol = 1e-8; ///< stop when the projected gradient inf-norm falls below this
  double ftol = 1e-10; ///< stop when the relative objective decrease falls below this
  int memory = 10;
  int max_linesearch = 30;
};

struct BoxQnResult
{
  Vector x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

/// Objective returning f(x) and writing the gradient into grad.
/// Returning a non-finite value marks x as infeasible; the line search backs off.
using BoxObjective = std::function<double(const Vector& x, Vector& grad)>;

BoxQnResult minimize_box(const BoxObjective& fun, const Vector& x0, const Vector& lower, const Vector& upper,
                         const BoxQnOptions& opts = {});
} // namespace hetbatch
