#pragma once

// Heteroskedastic GP surrogate with replicate (Woodbury) algebra.
//
// Mean process on standardized responses:  Y_N ~ N(0, tau2 (C_N + Lambda_N))
// evaluated through the n unique sites with K_n = C_n + diag(Lambda / a).
// Noise process: latent log-nuggets z = log Delta_n with
//   z ~ N(beta0 1, tau2_noise (C_noise + g_noise A^{-1}))
// and smoothed log-nuggets
//   log Lambda(x) = beta0 + c_noise(x, X) (C_noise + g_noise A^{-1})^{-1} (z - beta0 1).
// beta0 is the GLS plug-in; tau2 and tau2_noise are profiled out.
//
// Noise scale convention: predicted noise variance = nu * exp(log Lambda(x)),
// where nu = tau2 * scale^2 is tau2 expressed in response units.

#include "hetbatch/design_set.hpp"
#include "hetbatch/kernel.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>

namespace hetbatch
{
struct HetGPParams
{
  Vector theta;         ///< mean-process lengthscales
  Vector theta_noise;   ///< noise-process lengthscales
  double g_noise = 0.1; ///< nugget of the noise process
  Vector log_delta;     ///< latent log-nuggets, one per unique site
};

struct FitConfig
{
  int n_starts = 5;
  int max_iter = 200;
  double theta_min = 1e-2;
  double theta_max = 10.0;
  double g_min = 1e-6;
  double g_max = 1.0;
  double log_delta_min = std::log(1e-6);
  double log_delta_max = std::log(1e2);
  bool allow_homoskedastic = false;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct Standardization
{
  double center = 0.0;
  double scale = 1.0;
};

Standardization standardize(const DesignSet& data);

struct Prediction
{
  Vector mean;     ///< predictive mean, response units
  Vector var_mean; ///< nugget-free predictive variance, clamped at 0
  Vector noise;    ///< predicted noise variance r(x)
};

/// Breakdown of the joint log-likelihood at a parameter point.
struct LikelihoodValue
{
  double total = 0.0;
  double mean_part = 0.0;
  double noise_part = 0.0;
  double tau2 = 0.0;       ///< standardized scale
  double tau2_noise = 0.0;
};

class HetGPModel
{
public:
  /// Builds every cached factorization for the given data and parameters.
  /// Homoskedastic models carry a constant log_delta and no noise-process prior.
  static HetGPModel from_params(DesignSet data, HetGPParams params, bool homoskedastic = false);

  Prediction predict(const Matrix& X) const;
  /// Predictive mean only, response units.
  Vector predict_mean(const Matrix& X) const;
  /// Predicted noise variance r(x) only.
  Vector predict_noise(const Matrix& X) const;
  /// Smoothed log-nugget log Lambda(x), dimensionless.
  Vector log_noise(const Matrix& X) const;
  /// d log Lambda(x) / d x_p.
  double dlog_noise(const Eigen::Ref<const Vector>& x, Index p) const;

  const DesignSet& design() const { return data_; }
  const HetGPParams& params() const { return params_; }
  bool homoskedastic() const { return homoskedastic_; }
  Index dim() const { return data_.dim(); }
  Index n() const { return data_.n(); }

  Kernel kernel_mean() const { return Kernel(params_.theta); }
  Kernel kernel_noise() const { return Kernel(params_.theta_noise); }
  const Standardization& standardization() const { return std_; }
  double tau2() const { return lik_.tau2; }
  double tau2_noise() const { return lik_.tau2_noise; }
  double beta_noise() const { return beta_noise_; }
  /// tau2 in squared response units.
  double nu() const { return lik_.tau2 * std_.scale * std_.scale; }
  const LikelihoodValue& likelihood() const { return lik_; }
  const Vector& smoothed_log_lambda() const { return log_lambda_; }
  /// K_n^{-1} with K_n = C_n + diag(Lambda / a).
  const Matrix& K_inverse() const { return K_inv_; }
  const Eigen::LLT<Matrix>& K_cholesky() const { return K_llt_; }
  /// Hash of parameters and design; stamps derived workspaces.
  std::uint64_t fingerprint() const { return fingerprint_; }

private:
  DesignSet data_;
  HetGPParams params_;
  bool homoskedastic_ = false;
  Standardization std_;
  LikelihoodValue lik_;
  double beta_noise_ = 0.0;
  Vector log_lambda_;
  Eigen::LLT<Matrix> K_llt_;
  Matrix K_inv_;
  Vector alpha_;       ///< K^{-1} ybar (standardized)
  Vector alpha_noise_; ///< K_noise^{-1} (z - beta0)
  std::uint64_t fingerprint_ = 0;
};

/// Joint log-likelihood of (params) for the data, on internally standardized responses.
LikelihoodValue loglik(const HetGPParams& params, const DesignSet& data, bool homoskedastic = false);

/// Gradient of loglik with respect to the packed vector
/// [log theta, log theta_noise, log g_noise, log_delta] (heteroskedastic)
/// or [log theta, log g] with g = exp(log_delta[0]) (homoskedastic).
Vector loglik_gradient(const HetGPParams& params, const DesignSet& data, bool homoskedastic = false);

/// Maximum-likelihood fit. A warm start, when given, is tried first.
HetGPModel fit(const DesignSet& data, const FitConfig& cfg, const std::optional<HetGPParams>& warm = std::nullopt);

/// Pools new runs into the design and refits, seeding one start with the current parameters.
HetGPModel update(const HetGPModel& model, std::span<const Run> new_runs, const FitConfig& cfg);

/// Factorization with the 1e-8, 1e-6, 1e-4 diagonal jitter ladder.
Eigen::LLT<Matrix> factor_spd(const Matrix& K);
} // namespace hetbatch
