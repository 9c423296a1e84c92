#pragma once

// Sequential batch design loop: initial maximin-LHS with replicates, then
// repeated fit -> optimize -> backtrack -> simulate cycles.
//
// Output directory layout (rewritten atomically after every batch):
//   runs.csv            x1..xd (coded), y, batch_index, multiplicity_origin
//   history.csv         batch_index, N, n, s_hat, I_N, rmspe, score, wall_seconds
//   traces/batch_XXX.csv  s, m_s, d_s, imspe
//   state.json          config, runs, history, model snapshot; read by resume

#include "hetbatch/backtrack.hpp"
#include "hetbatch/config.hpp"
#include "hetbatch/hetgp.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hetbatch
{
struct RunRecord
{
  Vector x; ///< coded
  double y = 0.0;
  int batch = 0;
  std::string origin; ///< init | new | fused | replicate
};

struct BatchRecord
{
  int batch_index = 0;
  Index N = 0;
  Index n = 0;
  Index s_hat = 0;
  double imspe = 0.0; ///< I_N after the batch's refit
  double rmspe = 0.0;
  double score = 0.0;
  double wall_seconds = 0.0;
  double fit_seconds = 0.0;
  Index missing = 0;
};

struct CampaignState
{
  CampaignConfig config;
  HetGPModel model;
  std::vector<RunRecord> runs;
  std::vector<BatchRecord> history;
  std::vector<MergeTrace> traces;          ///< one per acquisition batch (empty for the maximin strategy)
  std::vector<std::vector<BatchSite>> selected; ///< sites requested in each acquisition batch
  double min_positive = 0.0;

  int completed_batches() const { return history.empty() ? -1 : history.back().batch_index; }
};

struct CampaignOptions
{
  bool persist = true;
  int stop_after = -1;            ///< stop once this batch index is complete (simulated interruption)
  std::ostream* log = nullptr;
  std::function<void(const CampaignState&)> on_batch; ///< called after every completed batch
};

CampaignState run_campaign(const CampaignConfig& cfg, const CampaignOptions& opts = {});

/// Continues a persisted campaign. `n_batches`, when given, replaces the stored batch count.
CampaignState resume_campaign(const std::string& output_dir, const CampaignOptions& opts = {},
                              std::optional<int> n_batches = std::nullopt);

CampaignState load_state(const std::string& output_dir);

std::string runs_csv(const CampaignState& state);
std::string history_csv(const std::vector<BatchRecord>& history);

/// Rows of a bench comparison.
struct BenchRow
{
  int repetition = 0;
  std::string strategy;
  BatchRecord record;
};

/// R repetitions of every strategy; repetitions share initial designs across strategies.
std::vector<BenchRow> run_bench(const CampaignConfig& cfg, int repetitions, const std::vector<Strategy>& strategies,
                                int jobs, std::ostream* log = nullptr);
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Seed of bench repetition r.
std::uint64_t bench_seed(std::uint64_t base, int repetition);
} // namespace hetbatch
