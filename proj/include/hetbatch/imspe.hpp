#pragma once

// Integrated mean-squared prediction error over [0,1]^d and its batch form.
//
//   I_N     = E - nu tr(K_n^{-1} W_n),  E = nu (the Gaussian kernel has c(x,x) = 1)
//   I_{N+M} = I_N - nu [ tr(Sigma g^T W_n g) + 2 tr(g^T w(X, Xt)) + tr(Sigma^{-1} w(Xt, Xt)) ]
//
// with Sigma = c(Xt,Xt) + diag(r(Xt)/m) - c(X,Xt)^T K_n^{-1} c(X,Xt) and
// g = -K_n^{-1} c(X,Xt) Sigma^{-1}, where r is the smoothed relative noise and
// m the per-row multiplicity (1 for fresh batch points).

#include "hetbatch/hetgp.hpp"

#include <cstdint>

namespace hetbatch
{
/// Design-dependent quantities shared by every batch evaluation.
struct ImspeWorkspace
{
  std::uint64_t fingerprint = 0;
  Kernel kernel;
  Matrix W;               ///< W_n
  double nu = 0.0;        ///< tau2 in response units
  double trace_KinvW = 0.0;
  double imspe = 0.0;     ///< I_N

  static ImspeWorkspace build(const HetGPModel& model);
  void check(const HetGPModel& model) const;
};

double imspe_current(const HetGPModel& model);

/// I_{N+M} for batch rows `xtil` (M x d). `multiplicity`, when non-empty, divides each row's noise.
double imspe_batch(const ImspeWorkspace& ws, const HetGPModel& model, const Matrix& xtil,
                   const Vector& multiplicity = Vector());

/// K_{n+M}^{-1} assembled from K_n^{-1}, g and Sigma:
///   [ K_n^{-1} + g Sigma g^T   g        ]
///   [ g^T                      Sigma^{-1} ]
Matrix partitioned_inverse(const HetGPModel& model, const Matrix& xtil, const Vector& multiplicity = Vector());

/// Gradient of I_{N+M} over every batch coordinate, M x d.
Matrix imspe_batch_grad(const ImspeWorkspace& ws, const HetGPModel& model, const Matrix& xtil,
                        const Vector& multiplicity = Vector());

/// Value and (optionally) gradient in one pass.
double imspe_value_grad(const ImspeWorkspace& ws, const HetGPModel& model, const Matrix& xtil,
                        const Vector& multiplicity, Matrix* grad);

struct AcquisitionConfig
{
  int n_starts = 10;
  int max_iter = 200;
  double pgtol = 1e-8;
  double ftol = 1e-10;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct BatchProposal
{
  Matrix xtil;              ///< M x d, coded
  double imspe = 0.0;       ///< I_{N+M} at xtil
  double best_initial = 0.0; ///< lowest IMSPE among the start points
  int start_index = -1;
  int iterations = 0;
  bool converged = false;
};

BatchProposal optimize_batch(const HetGPModel& model, Index M, const AcquisitionConfig& cfg);
} // namespace hetbatch
