#pragma once

// Greedy merging of an optimized batch into replicates, and change-point
// selection of how far to merge.

#include "hetbatch/imspe.hpp"

#include <string>
#include <vector>

namespace hetbatch
{
/// One location of a candidate batch.
struct BatchSite
{
  Vector x;              ///< coded location; bit-identical to the design row when snapped
  int multiplicity = 1;  ///< number of new runs requested here
  Index existing = -1;   ///< index of the existing unique site it replicates, or -1
  bool fused = false;    ///< formed by merging two or more batch points
};

struct MergeCandidate
{
  std::vector<BatchSite> batch;
  Index unique_new = 0; ///< m_s: sites not at an existing location
  double distance = 0.0; ///< d_s: length of the merge that produced this candidate
  double imspe = 0.0;
};

struct MergeTrace
{
  std::vector<MergeCandidate> candidates; ///< s = 0..M
  Index batch_size() const { return static_cast<Index>(candidates.size()) - 1; }
  Vector imspe_values() const;
};

/// IMSPE after adding a candidate batch; snapped sites act as extra replicates.
double candidate_imspe(const ImspeWorkspace& ws, const HetGPModel& model, const std::vector<BatchSite>& batch);

MergeTrace merge_sequence(const ImspeWorkspace& ws, const HetGPModel& model, const Matrix& xtil);
MergeTrace merge_sequence(const HetGPModel& model, const Matrix& xtil);

struct ChangepointFit
{
  Index s_hat = 0;
  Index best_break = 0;
  bool fallback = false;
  Vector mse; ///< pooled in-sample MSE per break b = 0..M
};

/// Two-segment fit: constant for s <= b, polynomial of degree min(4, points - 1) for s > b.
ChangepointFit changepoint_fit(const Vector& imspe_by_s);
Index changepoint_select(const Vector& imspe_by_s);

std::vector<BatchSite> select_batch(const MergeTrace& trace, Index s_hat);

/// CSV with columns s, m_s, d_s, imspe.
std::string trace_csv(const MergeTrace& trace);
} // namespace hetbatch
