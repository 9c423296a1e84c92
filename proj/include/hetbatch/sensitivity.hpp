#pragma once

// Main effects and first-order / total Sobol indices of a fitted surrogate
// under independent uniform inputs on [0,1]^d.
//
// Pick-freeze with base samples A, B and A_B^j (A with column j taken from B):
//   V   = sample variance of f(A) and f(B) pooled
//   S_j = mean( f(B) (f(A_B^j) - f(A)) ) / V          (Saltelli 2010)
//   T_j = mean( (f(A) - f(A_B^j))^2 ) / (2 V)          (Jansen)
//   I_j = T_j - S_j

#include "hetbatch/design_set.hpp"
#include "hetbatch/hetgp.hpp"
#include "hetbatch/lhs.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hetbatch
{
enum class SensTarget
{
  mean,
  noise
};

SensTarget parse_target(const std::string& name);
std::string target_name(SensTarget t);

/// A scalar surface evaluated row-wise on an m x d matrix.
using Surface = std::function<Vector(const Matrix&)>;

Surface model_surface(const HetGPModel& model, SensTarget target);

struct MainEffect
{
  Index input = 0;
  Vector grid;
  Vector value;
};

/// ME_j(g) averaged over one n_mc-point LHS shared by every grid value.
MainEffect main_effects(const Surface& f, Index d, Index j, const Vector& grid, int n_mc, std::uint64_t seed);
MainEffect main_effects(const HetGPModel& model, Index j, const Vector& grid, int n_mc, SensTarget target,
                        std::uint64_t seed = 0);

struct SobolIndices
{
  Vector S, T;         ///< clamped to [0, 1]
  Vector S_raw, T_raw;
  double variance = 0.0;
  bool degenerate = false; ///< total variance below 1e-12; every index is 0
  Vector interaction() const { return T - S; }
};

SobolIndices sobol_indices(const Surface& f, Index d, int n_mc, std::uint64_t seed);
SobolIndices sobol_indices(const HetGPModel& model, int n_mc, SensTarget target, std::uint64_t seed);

struct SensitivityConfig
{
  int grid = 101;
  int n_mc = 10000;
  int bootstrap = 100;
  SensTarget target = SensTarget::mean;
  std::uint64_t seed = 0;
  int jobs = 1;
  FitConfig fit;
};

struct BootstrapSample
{
  Vector S, T, I;
};

struct SensitivityReport
{
  SensTarget target = SensTarget::mean;
  std::vector<MainEffect> main_effects;
  SobolIndices indices;
  std::vector<BootstrapSample> bootstrap;
  Vector prop_I_positive;
};

/// Main effects and indices of one fitted model, no bootstrap.
SensitivityReport analyze(const HetGPModel& model, const SensitivityConfig& cfg);

/// Resamples unique sites with their replicate blocks. Redraws (up to 10 times)
/// when fewer than d + 2 distinct sites or no replicated site are drawn.
DesignSet bootstrap_resample(const DesignSet& data, Rng& rng);

/// Fits the full run log, reports its main effects and indices, then refits
/// cfg.bootstrap block resamples and records S, T, I for each.
SensitivityReport bootstrap_indices(const std::vector<Run>& runs, const SensitivityConfig& cfg);

std::string main_effects_csv(const SensitivityReport& r);
std::string indices_csv(const SensitivityReport& r);
std::string bootstrap_csv(const SensitivityReport& r);
/// One row per target, one column per input: proportion of positive I.
std::string proportions_csv(const std::vector<SensitivityReport>& reports);
} // namespace hetbatch
