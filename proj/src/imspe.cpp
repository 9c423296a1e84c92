#include "hetbatch/imspe.hpp"

#include "hetbatch/lbfgsb.hpp"
#include "hetbatch/lhs.hpp"
#include "hetbatch/parallel.hpp"

#include <limits>
#include <vector>

namespace hetbatch
{
namespace
{
// Coincident batch rows are nudged apart by this much before factorization.
constexpr double kDuplicateNudge = 1e-10;

Matrix separate_duplicates(const Matrix& xtil)
{
  Matrix out = xtil;
  for (Index j = 1; j < out.rows(); ++j)
    for (Index i = 0; i < j; ++i)
      if (((out.row(j) - out.row(i)).array().abs() <= kDuplicateTolerance).all())
      {
        out(j, 0) += out(j, 0) + kDuplicateNudge <= 1.0 ? kDuplicateNudge : -kDuplicateNudge;
        break;
      }
  return out;
}

/// Per-dimension factors w_k(A_ik, B_jk).
std::vector<Matrix> w_factors(const Matrix& A, const Matrix& B, const Kernel& kernel)
{
  std::vector<Matrix> out(static_cast<size_t>(A.cols()));
  for (Index k = 0; k < A.cols(); ++k)
  {
    Matrix& f = out[static_cast<size_t>(k)];
    f.resize(A.rows(), B.rows());
    for (Index j = 0; j < B.rows(); ++j)
      for (Index i = 0; i < A.rows(); ++i)
        f(i, j) = w_scalar(A(i, k), B(j, k), kernel.lengthscales[k]);
  }
  return out;
}

Matrix product_of(const std::vector<Matrix>& factors, Index skip = -1)
{
  Matrix out = Matrix::Ones(factors.front().rows(), factors.front().cols());
  for (size_t k = 0; k < factors.size(); ++k)
    if (static_cast<Index>(k) != skip)
      out.array() *= factors[k].array();
  return out;
}
} // namespace

ImspeWorkspace ImspeWorkspace::build(const HetGPModel& model)
{
  ImspeWorkspace ws;
  ws.fingerprint = model.fingerprint();
  ws.kernel = model.kernel_mean();
  const Matrix& X = model.design().unique_x;
  ws.W = w_matrix(X, X, ws.kernel);
  ws.nu = model.nu();
  ws.trace_KinvW = (model.K_inverse().array() * ws.W.array()).sum();
  ws.imspe = ws.nu * (1.0 - ws.trace_KinvW);
  return ws;
}

void ImspeWorkspace::check(const HetGPModel& model) const
{
  if (model.fingerprint() != fingerprint)
    throw InputError("IMSPE workspace was built for a different model");
}

double imspe_current(const HetGPModel& model) { return ImspeWorkspace::build(model).imspe; }

Matrix partitioned_inverse(const HetGPModel& model, const Matrix& xtil, const Vector& multiplicity)
{
  const Index n = model.n(), M = xtil.rows();
  if (xtil.cols() != model.dim())
    throw InputError("partitioned_inverse: batch dimension does not match the model");
  const Kernel kernel = model.kernel_mean();
  const Matrix& X = model.design().unique_x;
  const Matrix& Kinv = model.K_inverse();
  Vector r = model.log_noise(xtil).array().exp();
  if (multiplicity.size() != 0)
    r.array() /= multiplicity.array();
  const Matrix kx = cov(X, xtil, kernel);
  const Matrix Kk = Kinv * kx;
  Matrix Sigma = cov(xtil, kernel);
  Sigma.diagonal() += r;
  Sigma.noalias() -= kx.transpose() * Kk;
  Sigma = 0.5 * (Sigma + Sigma.transpose());
  const Matrix Sinv = factor_spd(Sigma).solve(Matrix::Identity(M, M));
  const Matrix g = -Kk * Sinv;

  Matrix out(n + M, n + M);
  out.topLeftCorner(n, n) = Kinv + g * Sigma * g.transpose();
  out.topRightCorner(n, M) = g;
  out.bottomLeftCorner(M, n) = g.transpose();
  out.bottomRightCorner(M, M) = Sinv;
  return out;
}

double imspe_value_grad(const ImspeWorkspace& ws, const HetGPModel& model, const Matrix& xtil_in,
                        const Vector& multiplicity, Matrix* grad)
{
  ws.check(model);
  const Index n = model.n(), M = xtil_in.rows(), d = model.dim();
  if (xtil_in.cols() != d)
    throw InputError("imspe_batch: batch dimension does not match the model");
  if (M == 0)
    return ws.imspe;
  if (multiplicity.size() != 0 && multiplicity.size() != M)
    throw InputError("imspe_batch: multiplicity length does not match batch size");
  const Matrix xtil = separate_duplicates(xtil_in);
  const Matrix& X = model.design().unique_x;
  const Matrix& Kinv = model.K_inverse();

  Vector r = model.log_noise(xtil).array().exp();
  if (multiplicity.size() != 0)
    r.array() /= multiplicity.array();

  const Matrix kx = cov(X, xtil, ws.kernel); // n x M
  Matrix Sigma = cov(xtil, ws.kernel);
  Sigma.diagonal() += r;
  const Matrix Kk = Kinv * kx;
  Sigma.noalias() -= kx.transpose() * Kk;
  Sigma = 0.5 * (Sigma + Sigma.transpose());
  const Eigen::LLT<Matrix> llt = factor_spd(Sigma);
  const Matrix Sinv = llt.solve(Matrix::Identity(M, M));
  const Matrix g = -Kk * Sinv; // n x M

  const std::vector<Matrix> fx = w_factors(X, xtil, ws.kernel);
  const std::vector<Matrix> fxx = w_factors(xtil, xtil, ws.kernel);
  const Matrix wx = product_of(fx);
  const Matrix wxx = product_of(fxx);
  const Matrix Wg = ws.W * g; // n x M

  const Matrix gWg = g.transpose() * Wg;
  const double decrement =
      (Sigma.array() * gWg.array()).sum() + 2.0 * (g.array() * wx.array()).sum() + (Sinv.array() * wxx.array()).sum();
  const double value = ws.imspe - ws.nu * decrement;
  if (!grad)
    return value;

  // Rows n+i of K_{n+M}^{-1} W_{n+M} K_{n+M}^{-1}, split into existing and batch columns.
  const Matrix P1 = Wg.transpose() + Sinv * wx.transpose(); // M x n
  const Matrix P2 = g.transpose() * wx + Sinv * wxx;        // M x M
  const Matrix B1 = P1 * Kinv + (P1 * g) * Sigma * g.transpose() + P2 * g.transpose();
  const Matrix B2 = P1 * g + P2 * Sinv;

  grad->resize(M, d);
  for (Index p = 0; p < d; ++p)
  {
    const Matrix wx_rest = product_of(fx, p);
    const Matrix wxx_rest = product_of(fxx, p);
    const double theta = ws.kernel.lengthscales[p];
    for (Index i = 0; i < M; ++i)
    {
      const Vector xi = xtil.row(i).transpose();
      const Vector dc_old = dcov_dcoord(xi, X, ws.kernel, p);
      const Vector dc_new = dcov_dcoord(xi, xtil, ws.kernel, p);
      double dK_term = 2.0 * B1.row(i).dot(dc_old);
      double dW_term = 0.0;
      for (Index j = 0; j < n; ++j)
        dW_term += 2.0 * g(j, i) * dw_scalar(xi[p], X(j, p), theta) * wx_rest(j, i);
      for (Index j = 0; j < M; ++j)
      {
        if (j == i)
          continue;
        dK_term += 2.0 * B2(i, j) * dc_new[j];
        dW_term += 2.0 * Sinv(i, j) * dw_scalar(xi[p], xtil(j, p), theta) * wxx_rest(j, i);
      }
      const double dr = r[i] * model.dlog_noise(xi, p);
      dK_term += B2(i, i) * dr;
      dW_term += Sinv(i, i) * 2.0 * dw_scalar(xi[p], xi[p], theta) * wxx_rest(i, i);
      (*grad)(i, p) = ws.nu * (dK_term - dW_term);
    }
  }
  return value;
}

double imspe_batch(const ImspeWorkspace& ws, const HetGPModel& model, const Matrix& xtil, const Vector& multiplicity)
{
  return imspe_value_grad(ws, model, xtil, multiplicity, nullptr);
}

Matrix imspe_batch_grad(const ImspeWorkspace& ws, const HetGPModel& model, const Matrix& xtil,
                        const Vector& multiplicity)
{
  Matrix grad;
  imspe_value_grad(ws, model, xtil, multiplicity, &grad);
  return grad;
}

BatchProposal optimize_batch(const HetGPModel& model, Index M, const AcquisitionConfig& cfg)
{
  if (M < 1)
    throw InputError("optimize_batch: batch size must be at least 1");
  const Index d = model.dim();
  const ImspeWorkspace ws = ImspeWorkspace::build(model);
  const int starts = std::max(cfg.n_starts, 1);

  // Highest-noise existing site, used to seed one row of the first start.
  Index noisiest = 0;
  model.smoothed_log_lambda().maxCoeff(&noisiest);

  struct Outcome
  {
    BoxQnResult result;
    double initial = std::numeric_limits<double>::infinity();
  };
  std::vector<Outcome> outcomes(static_cast<size_t>(starts));

  parallel_for(starts, cfg.jobs, [&](int s) {
    Rng rng(derive_seed(cfg.seed, 0xBA7C4, static_cast<std::uint64_t>(s)));
    Matrix x0 = random_lhs(M, d, rng);
    if (s == 0)
    {
      std::normal_distribution<double> jitter(0.0, 0.01);
      for (Index k = 0; k < d; ++k)
        x0(0, k) = std::clamp(model.design().unique_x(noisiest, k) + jitter(rng), 0.0, 1.0);
    }
    auto objective = [&](const Vector& v, Vector& grad) -> double {
      const Matrix xt = Eigen::Map<const Matrix>(v.data(), M, d);
      Matrix G;
      try
      {
        const double val = imspe_value_grad(ws, model, xt, Vector(), &G);
        grad = Eigen::Map<const Vector>(G.data(), M * d);
        return val;
      }
      catch (const NumericalError&)
      {
        grad.setZero(M * d);
        return std::numeric_limits<double>::infinity();
      }
    };
    Vector g0(M * d);
    Outcome& out = outcomes[static_cast<size_t>(s)];
    const Vector v0 = Eigen::Map<const Vector>(x0.data(), M * d);
    out.initial = objective(v0, g0);
    BoxQnOptions opts;
    opts.max_iter = cfg.max_iter;
    opts.pgtol = cfg.pgtol;
    opts.ftol = cfg.ftol;
    out.result = minimize_box(objective, v0, Vector::Zero(M * d), Vector::Ones(M * d), opts);
  });

  BatchProposal prop;
  prop.best_initial = std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s)
  {
    const Outcome& o = outcomes[static_cast<size_t>(s)];
    prop.best_initial = std::min(prop.best_initial, o.initial);
    if (o.result.x.size() == M * d && o.result.f < best)
    {
      best = o.result.f;
      prop.start_index = s;
    }
  }
  if (prop.start_index < 0)
    throw NumericalError("optimize_batch: no start produced a finite IMSPE");
  const Outcome& win = outcomes[static_cast<size_t>(prop.start_index)];
  prop.xtil = Eigen::Map<const Matrix>(win.result.x.data(), M, d);
  prop.imspe = win.result.f;
  prop.iterations = win.result.iterations;
  prop.converged = win.result.converged;
  return prop;
}
} // namespace hetbatch
