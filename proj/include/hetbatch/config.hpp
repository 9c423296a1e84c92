#pragma once

// Campaign configuration as `key = value` text. Blank lines and lines starting
// with '#' are ignored; unknown keys are errors. See README for the key list.

#include "hetbatch/hetgp.hpp"
#include "hetbatch/imspe.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hetbatch
{
enum class Strategy
{
  backtracking,
  no_backtracking,
  maximin
};

enum class Transform
{
  none,
  log_floor
};

struct SimulatorRef
{
  std::string builtin; ///< testbed name; empty when `command` is used
  std::string command; ///< shell command speaking the batch CSV protocol
  Transform transform = Transform::none;

  bool is_builtin() const { return !builtin.empty(); }
};

struct CampaignConfig
{
  Index d = 1;
  Index n0 = 12;
  int reps_min = 1; ///< initial replicates per site drawn uniformly from [reps_min, reps_max]
  int reps_max = 3;
  Index M = 24;
  int n_batches = 20;
  std::uint64_t seed = 1;
  SimulatorRef simulator{"toy1d", "", Transform::none};
  Index metrics_test_size = 500;
  std::string output_dir = "campaign_out";
  Vector lower; ///< native-scale bounds for the external protocol; default [0,1]^d
  Vector upper;
  Strategy strategy = Strategy::backtracking;
  int init_candidates = 100; ///< maximin-LHS candidates for the initial design
  bool record_wall_time = true;
  int jobs = 1;

  FitConfig fit;    ///< latent-noise bounds come from noise_min/noise_max
  double noise_min = 1e-6;
  double noise_max = 1e2;
  int fit_starts_update = 2; ///< starts per refit after the initial fit (warm start included)
  AcquisitionConfig acquisition;

  // one-shot subcommands
  std::string run_log;  ///< run-log CSV for `fit`
  std::string model;    ///< snapshot path for `propose`, `sens`, `diag`
  int sens_grid = 101;
  int sens_n_mc = 10000;
  int sens_bootstrap = 100;
  std::string sens_target = "both"; ///< mean | noise | both
  int bench_repetitions = 10;

  Index budget() const { return n0 * reps_max + M * n_batches; }
};

/// Parses config text; `origin` names the source in error messages.
CampaignConfig parse_config(const std::string& text, const std::string& origin = "config");
CampaignConfig load_config(const std::string& path);

/// Applies one `key=value` override.
void apply_setting(CampaignConfig& cfg, const std::string& key, const std::string& value);
void apply_override(CampaignConfig& cfg, const std::string& assignment);

/// Checks cross-field constraints (n0 >= d + 2, bounds, ...).
void validate(CampaignConfig& cfg);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const CampaignConfig& cfg);

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& s);
std::vector<std::string> config_keys();
} // namespace hetbatch
