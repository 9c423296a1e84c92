#pragma once

#include "hetbatch/types.hpp"

#include <span>
#include <vector>

namespace hetbatch
{
/// One simulator evaluation on coded inputs.
struct Run
{
  Vector x;
  double y = 0.0;
};

/// Replicate-aware training data. Unique rows are kept in first-appearance order.
struct DesignSet
{
  Matrix unique_x;                            ///< n x d coded inputs
  Eigen::VectorXi counts;                     ///< replicate count a_i >= 1
  Vector mean_y;                              ///< per-location average response
  Vector ss_y;                                ///< per-location sum of squared deviations
  std::vector<std::vector<double>> responses; ///< raw replicate values, for re-aggregation and bootstrap

  Index n() const { return unique_x.rows(); }
  Index dim() const { return unique_x.cols(); }
  Index total_runs() const { return counts.sum(); }
  Vector counts_d() const { return counts.cast<double>(); }

  /// Index of the unique row equal to x within the duplicate tolerance, or -1.
  Index find(const Eigen::Ref<const Vector>& x) const;
};

/// Two coded points are the same site when every coordinate differs by at most this.
inline constexpr double kDuplicateTolerance = 1e-12;

DesignSet aggregate(std::span<const Run> runs);

/// Appends runs to an existing design, merging exact duplicates with existing uniques.
DesignSet merge_runs(const DesignSet& base, std::span<const Run> runs);

/// Builds a design from unique rows and their raw replicate values.
DesignSet make_design(Matrix unique_x, std::vector<std::vector<double>> responses);

/// Inverse of aggregate: every replicate as a separate run, unique-row order preserved.
std::vector<Run> expand(const DesignSet& data);
} // namespace hetbatch
