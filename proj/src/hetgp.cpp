#include "hetbatch/hetgp.hpp"

#include "hetbatch/lbfgsb.hpp"
#include "hetbatch/lhs.hpp"
#include "hetbatch/parallel.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <numbers>
#include <string>

namespace hetbatch
{
namespace
{
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
// Added to the profiled noise-process variance: n pseudo-observations of unit
// variance on the standardized log scale. Without it a flat latent field sends
// the prior density to infinity and fits collapse onto a constant noise level.
constexpr double kNoiseVarianceFloor = 1.0;

struct StdData
{
  const Matrix* X = nullptr;
  Vector a;    // replicate counts as doubles
  Vector ybar; // standardized means
  Vector ss;   // standardized within-site sums of squares
  double N = 0.0;
};

StdData standardized(const DesignSet& data, const Standardization& s)
{
  StdData out;
  out.X = &data.unique_x;
  out.a = data.counts_d();
  out.ybar = (data.mean_y.array() - s.center) / s.scale;
  out.ss = data.ss_y / (s.scale * s.scale);
  out.N = out.a.sum();
  return out;
}

double log_det(const Eigen::LLT<Matrix>& llt) { return 2.0 * llt.matrixLLT().diagonal().array().log().sum(); }

/// sum_ij M_ij * C_ij * (X_ik - X_jk)^2 / theta_k
double weighted_distance_trace(const Matrix& M, const Matrix& C, const Matrix& X, Index k, double theta_k)
{
  const Index n = X.rows();
  double acc = 0.0;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
    {
      const double diff = X(i, k) - X(j, k);
      acc += M(i, j) * C(i, j) * diff * diff;
    }
  return acc / theta_k;
}

/// Everything the likelihood and predictions need at one parameter point.
struct HetState
{
  // noise process
  Matrix C_noise;
  Eigen::LLT<Matrix> Kg_llt;
  Matrix Kg_inv;
  Vector s;
  double beta = 0.0;
  Vector alpha_g;
  double q = 0.0;
  Vector log_lambda;
  // mean process
  Matrix C;
  Eigen::LLT<Matrix> K_llt;
  Matrix K_inv;
  Vector alpha;
  double Q = 0.0;
  LikelihoodValue lik;
};

HetState evaluate(const StdData& d, const HetGPParams& p, bool homo)
{
  const Matrix& X = *d.X;
  const Index n = X.rows();
  HetState st;
  if (homo)
  {
    st.log_lambda = Vector::Constant(n, p.log_delta[0]);
    st.beta = p.log_delta[0];
    st.alpha_g = Vector::Zero(n);
  }
  else
  {
    st.C_noise = cov(X, Kernel(p.theta_noise));
    Matrix Kg = st.C_noise;
    Kg.diagonal() += (p.g_noise / d.a.array()).matrix();
    st.Kg_llt = factor_spd(Kg);
    st.Kg_inv = st.Kg_llt.solve(Matrix::Identity(n, n));
    st.s = st.Kg_inv.rowwise().sum();
    st.beta = st.s.dot(p.log_delta) / st.s.sum();
    const Vector e = p.log_delta.array() - st.beta;
    st.alpha_g = st.Kg_inv * e;
    st.q = e.dot(st.alpha_g);
    st.log_lambda = p.log_delta.array() - p.g_noise * st.alpha_g.array() / d.a.array();
  }

  const Vector lambda = st.log_lambda.array().exp();
  st.C = cov(X, Kernel(p.theta));
  Matrix K = st.C;
  K.diagonal() += (lambda.array() / d.a.array()).matrix();
  st.K_llt = factor_spd(K);
  st.K_inv = st.K_llt.solve(Matrix::Identity(n, n));
  st.alpha = st.K_inv * d.ybar;
  st.Q = (d.ss.array() / lambda.array()).sum() + d.ybar.dot(st.alpha);

  const double N = d.N;
  st.lik.tau2 = st.Q / N;
  st.lik.mean_part = -0.5 * N * kLog2Pi - 0.5 * N * std::log(st.lik.tau2) - 0.5 * N -
                     0.5 * ((d.a.array() - 1.0) * st.log_lambda.array() + d.a.array().log()).sum() -
                     0.5 * log_det(st.K_llt);
  if (!homo)
  {
    const double nd = static_cast<double>(n);
    const double qe = st.q + nd * kNoiseVarianceFloor;
    st.lik.tau2_noise = qe / nd;
    st.lik.noise_part = -0.5 * nd * kLog2Pi - 0.5 * nd * std::log(st.lik.tau2_noise) - 0.5 * nd -
                        0.5 * log_det(st.Kg_llt);
  }
  st.lik.total = st.lik.mean_part + st.lik.noise_part;
  return st;
}

Vector gradient(const StdData& d, const HetGPParams& p, bool homo, const HetState& st)
{
  const Matrix& X = *d.X;
  const Index n = X.rows(), dim = X.cols();
  const double N = d.N;
  const Vector lambda = st.log_lambda.array().exp();
  const Vector lam_a = lambda.array() / d.a.array();

  // dL1 / dlog Lambda_i
  const Vector u = (N / (2.0 * st.Q)) * (d.ss.array() / lambda.array() + st.alpha.array().square() * lam_a.array()) -
                   0.5 * (d.a.array() - 1.0) - 0.5 * st.K_inv.diagonal().array() * lam_a.array();

  Vector grad(homo ? dim + 1 : 2 * dim + 1 + n);
  const Matrix M1 = st.K_inv - (N / st.Q) * st.alpha * st.alpha.transpose();
  for (Index k = 0; k < dim; ++k)
    grad[k] = -0.5 * weighted_distance_trace(M1, st.C, X, k, p.theta[k]);

  if (homo)
  {
    grad[dim] = u.sum();
    return grad;
  }

  const double g = p.g_noise;
  const double nd = static_cast<double>(n);
  const double qe = st.q + nd * kNoiseVarianceFloor;
  const double s_sum = st.s.sum();
  auto apply_G = [&](const Vector& v) -> Vector { return st.Kg_inv * v - st.s * (st.s.dot(v) / s_sum); };

  const Vector u_a = u.array() / d.a.array();
  const Vector h = apply_G(u_a);
  const Vector ag_a = st.alpha_g.array() / d.a.array();

  // noise lengthscales: g h^T dCg alpha_g + (n / 2q) alpha_g^T dCg alpha_g - 1/2 tr(Kg^{-1} dCg)
  const Matrix M2 = st.Kg_inv - g * (h * st.alpha_g.transpose() + st.alpha_g * h.transpose()) -
                    (nd / qe) * st.alpha_g * st.alpha_g.transpose();
  for (Index k = 0; k < dim; ++k)
    grad[dim + k] = -0.5 * weighted_distance_trace(M2, st.C_noise, X, k, p.theta_noise[k]);

  grad[2 * dim] = g * (-u.dot(ag_a) + g * h.dot(ag_a) + (nd / (2.0 * qe)) * st.alpha_g.dot(ag_a) -
                       0.5 * (st.Kg_inv.diagonal().array() / d.a.array()).sum());

  grad.tail(n) = u - g * h - (nd / qe) * st.alpha_g;
  return grad;
}

std::uint64_t hash_bytes(std::uint64_t h, const void* data, size_t len)
{
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i)
    h = (h ^ bytes[i]) * 0x100000001B3ULL;
  return h;
}

std::uint64_t hash_vector(std::uint64_t h, const Vector& v)
{
  return hash_bytes(h, v.data(), static_cast<size_t>(v.size()) * sizeof(double));
}

// Packing of the optimization vector.
Vector pack(const HetGPParams& p, bool homo)
{
  const Index d = p.theta.size();
  if (homo)
  {
    Vector v(d + 1);
    v.head(d) = p.theta.array().log();
    v[d] = p.log_delta[0];
    return v;
  }
  const Index n = p.log_delta.size();
  Vector v(2 * d + 1 + n);
  v.head(d) = p.theta.array().log();
  v.segment(d, d) = p.theta_noise.array().log();
  v[2 * d] = std::log(p.g_noise);
  v.tail(n) = p.log_delta;
  return v;
}

HetGPParams unpack(const Vector& v, Index d, Index n, bool homo)
{
  HetGPParams p;
  p.theta = v.head(d).array().exp();
  if (homo)
  {
    p.theta_noise = p.theta;
    p.g_noise = 1.0;
    p.log_delta = Vector::Constant(n, v[d]);
    return p;
  }
  p.theta_noise = v.segment(d, d).array().exp();
  p.g_noise = std::exp(v[2 * d]);
  p.log_delta = v.tail(n);
  return p;
}

void bounds(const FitConfig& cfg, Index d, Index n, bool homo, Vector& lo, Vector& hi)
{
  const Index size = homo ? d + 1 : 2 * d + 1 + n;
  lo.resize(size);
  hi.resize(size);
  lo.head(d).setConstant(std::log(cfg.theta_min));
  hi.head(d).setConstant(std::log(cfg.theta_max));
  if (homo)
  {
    lo[d] = cfg.log_delta_min;
    hi[d] = cfg.log_delta_max;
    return;
  }
  lo.segment(d, d).setConstant(std::log(cfg.theta_min));
  hi.segment(d, d).setConstant(std::log(cfg.theta_max));
  lo[2 * d] = std::log(cfg.g_min);
  hi[2 * d] = std::log(cfg.g_max);
  lo.tail(n).setConstant(cfg.log_delta_min);
  hi.tail(n).setConstant(cfg.log_delta_max);
}

struct StartResult
{
  HetGPParams params;
  double value = -std::numeric_limits<double>::infinity();
};

StartResult optimize_from(const StdData& sd, const HetGPParams& start, bool homo, const FitConfig& cfg)
{
  const Index d = start.theta.size(), n = sd.X->rows();
  Vector lo, hi;
  bounds(cfg, d, n, homo, lo, hi);
  auto objective = [&](const Vector& v, Vector& grad) -> double {
    const HetGPParams p = unpack(v, d, n, homo);
    try
    {
      const HetState st = evaluate(sd, p, homo);
      if (!std::isfinite(st.lik.total))
        return std::numeric_limits<double>::infinity();
      grad = -gradient(sd, p, homo, st);
      if (!grad.allFinite())
        return std::numeric_limits<double>::infinity();
      return -st.lik.total;
    }
    catch (const NumericalError&)
    {
      grad.setZero(v.size());
      return std::numeric_limits<double>::infinity();
    }
  };
  BoxQnOptions opts;
  opts.max_iter = cfg.max_iter;
  opts.pgtol = 1e-6;
  opts.ftol = 1e-9;
  const BoxQnResult r = minimize_box(objective, pack(start, homo), lo, hi, opts);
  StartResult out;
  out.params = unpack(r.x, d, n, homo);
  out.value = std::isfinite(r.f) ? -r.f : -std::numeric_limits<double>::infinity();
  return out;
}

StartResult best_of(const StdData& sd, const std::vector<HetGPParams>& starts, bool homo, const FitConfig& cfg)
{
  std::vector<StartResult> results(starts.size());
  parallel_for(static_cast<int>(starts.size()), cfg.jobs, [&](int i) {
    results[static_cast<size_t>(i)] = optimize_from(sd, starts[static_cast<size_t>(i)], homo, cfg);
  });
  // Deterministic choice: best value, ties to the lowest start index.
  size_t best = 0;
  for (size_t i = 1; i < results.size(); ++i)
    if (results[i].value > results[best].value)
      best = i;
  if (!std::isfinite(results[best].value))
    throw NumericalError("fit: every start produced a non-finite likelihood");
  return results[best];
}

/// Space-filling unit-cube sample, mapped later onto log-bound space.
Matrix log_space_starts(int count, Index dims, Rng& rng) { return random_lhs(std::max(count, 1), dims, rng); }

double lerp_log(double u, double lo, double hi) { return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))); }

HetGPParams homoskedastic_fit(const StdData& sd, const FitConfig& cfg, const Vector* theta_hint, Rng& rng)
{
  const Index d = sd.X->cols(), n = sd.X->rows();
  std::vector<HetGPParams> starts;
  auto make = [&](Vector theta, double g) {
    HetGPParams p;
    p.theta = theta.cwiseMax(cfg.theta_min).cwiseMin(cfg.theta_max);
    p.theta_noise = p.theta;
    p.g_noise = 1.0;
    p.log_delta = Vector::Constant(n, std::clamp(std::log(g), cfg.log_delta_min, cfg.log_delta_max));
    starts.push_back(p);
  };
  if (theta_hint)
    make(*theta_hint, 0.1);
  make(Vector::Constant(d, lerp_log(0.5, cfg.theta_min, cfg.theta_max)), 0.1);
  const int extra = std::max(0, std::min(cfg.n_starts, 3) - static_cast<int>(starts.size()));
  if (extra > 0)
  {
    const Matrix U = log_space_starts(extra, d + 1, rng);
    for (int s = 0; s < extra; ++s)
    {
      Vector theta(d);
      for (Index k = 0; k < d; ++k)
        theta[k] = lerp_log(U(s, k), cfg.theta_min, cfg.theta_max);
      make(theta, std::exp(cfg.log_delta_min + U(s, d) * (cfg.log_delta_max - cfg.log_delta_min)));
    }
  }
  return best_of(sd, starts, true, cfg).params;
}

/// Latent log-nuggets from replicate variances, falling back to the homoskedastic nugget.
Vector initial_log_delta(const StdData& sd, const HetGPParams& homo, double tau2_homo, const FitConfig& cfg)
{
  const Index n = sd.X->rows();
  Vector z(n);
  const double lo = cfg.log_delta_min + 1e-3, hi = cfg.log_delta_max - 1e-3;
  for (Index i = 0; i < n; ++i)
  {
    if (sd.a[i] >= 2.0 && sd.ss[i] > 0.0)
      z[i] = std::log(sd.ss[i] / (sd.a[i] - 1.0) / tau2_homo);
    else
      z[i] = homo.log_delta[0];
    z[i] = std::clamp(z[i], lo, hi);
  }
  return z;
}
} // namespace

Standardization standardize(const DesignSet& data)
{
  Standardization s;
  const Vector a = data.counts_d();
  const double N = a.sum();
  s.center = a.dot(data.mean_y) / N;
  double ss = data.ss_y.sum() + (a.array() * (data.mean_y.array() - s.center).square()).sum();
  const double sd = N > 1.0 ? std::sqrt(ss / (N - 1.0)) : 0.0;
  s.scale = sd > 1e-12 ? sd : 1.0;
  return s;
}

Eigen::LLT<Matrix> factor_spd(const Matrix& K)
{
  static constexpr double ladder[] = {0.0, 1e-8, 1e-6, 1e-4};
  for (double jitter : ladder)
  {
    Eigen::LLT<Matrix> llt;
    if (jitter == 0.0)
      llt.compute(K);
    else
    {
      Matrix Kj = K;
      Kj.diagonal().array() += jitter;
      llt.compute(Kj);
    }
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite() &&
        (llt.matrixLLT().diagonal().array() > 0.0).all())
      return llt;
  }
  throw NumericalError("Cholesky factorization failed after jitter 1e-4");
}

LikelihoodValue loglik(const HetGPParams& params, const DesignSet& data, bool homoskedastic)
{
  const StdData sd = standardized(data, standardize(data));
  return evaluate(sd, params, homoskedastic).lik;
}

Vector loglik_gradient(const HetGPParams& params, const DesignSet& data, bool homoskedastic)
{
  const StdData sd = standardized(data, standardize(data));
  const HetState st = evaluate(sd, params, homoskedastic);
  return gradient(sd, params, homoskedastic, st);
}

HetGPModel HetGPModel::from_params(DesignSet data, HetGPParams params, bool homoskedastic)
{
  const Index n = data.n(), d = data.dim();
  if (params.theta.size() != d || params.theta_noise.size() != d || params.log_delta.size() != n)
    throw InputError("HetGPModel: parameter dimensions do not match the design");
  HetGPModel m;
  m.data_ = std::move(data);
  m.params_ = std::move(params);
  m.homoskedastic_ = homoskedastic;
  m.std_ = standardize(m.data_);
  const StdData sd = standardized(m.data_, m.std_);
  HetState st = evaluate(sd, m.params_, homoskedastic);
  m.lik_ = st.lik;
  m.beta_noise_ = st.beta;
  m.log_lambda_ = std::move(st.log_lambda);
  m.K_llt_ = std::move(st.K_llt);
  m.K_inv_ = std::move(st.K_inv);
  m.alpha_ = std::move(st.alpha);
  m.alpha_noise_ = std::move(st.alpha_g);

  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = hash_vector(h, m.params_.theta);
  h = hash_vector(h, m.params_.theta_noise);
  h = hash_bytes(h, &m.params_.g_noise, sizeof(double));
  h = hash_vector(h, m.params_.log_delta);
  h = hash_bytes(h, m.data_.unique_x.data(), static_cast<size_t>(m.data_.unique_x.size()) * sizeof(double));
  h = hash_vector(h, m.data_.mean_y);
  h = hash_bytes(h, m.data_.counts.data(), static_cast<size_t>(m.data_.counts.size()) * sizeof(int));
  m.fingerprint_ = h;
  return m;
}

Vector HetGPModel::log_noise(const Matrix& X) const
{
  if (X.cols() != dim())
    throw InputError("predict: input dimension mismatch");
  if (homoskedastic_)
    return Vector::Constant(X.rows(), beta_noise_);
  return (cov(X, data_.unique_x, kernel_noise()) * alpha_noise_).array() + beta_noise_;
}

double HetGPModel::dlog_noise(const Eigen::Ref<const Vector>& x, Index p) const
{
  if (homoskedastic_)
    return 0.0;
  return dcov_dcoord(x, data_.unique_x, kernel_noise(), p).dot(alpha_noise_);
}

Prediction HetGPModel::predict(const Matrix& X) const
{
  if (X.cols() != dim())
    throw InputError("predict: input dimension mismatch");
  const Matrix k = cov(X, data_.unique_x, kernel_mean()); // m x n
  Prediction out;
  out.mean = (k * alpha_).array() * std_.scale + std_.center;
  const Matrix v = K_llt_.matrixL().solve(k.transpose()); // n x m
  out.var_mean = (nu() * (1.0 - v.colwise().squaredNorm().transpose().array())).cwiseMax(0.0);
  out.noise = nu() * log_noise(X).array().exp();
  return out;
}

Vector HetGPModel::predict_mean(const Matrix& X) const
{
  if (X.cols() != dim())
    throw InputError("predict: input dimension mismatch");
  return (cov(X, data_.unique_x, kernel_mean()) * alpha_).array() * std_.scale + std_.center;
}

Vector HetGPModel::predict_noise(const Matrix& X) const { return nu() * log_noise(X).array().exp(); }

HetGPModel fit(const DesignSet& data, const FitConfig& cfg, const std::optional<HetGPParams>& warm)
{
  const Index n = data.n(), d = data.dim();
  if (n < d + 2)
    throw InputError("fit: need at least d + 2 = " + std::to_string(d + 2) + " unique sites, have " +
                     std::to_string(n));
  const bool replicated = (data.counts.array() >= 2).any();
  if (!replicated && !cfg.allow_homoskedastic)
    throw InputError("fit: no replicated sites, so the noise field is unidentifiable; add replicates "
                     "or enable allow_homoskedastic");

  const Standardization s = standardize(data);
  const StdData sd = standardized(data, s);
  Rng rng(cfg.seed);

  if (!replicated)
  {
    const Vector* hint = warm ? &warm->theta : nullptr;
    return HetGPModel::from_params(data, homoskedastic_fit(sd, cfg, hint, rng), true);
  }

  std::vector<HetGPParams> starts;
  if (warm)
  {
    if (warm->theta.size() != d || warm->theta_noise.size() != d || warm->log_delta.size() != n)
      throw InputError("fit: warm start does not match the design dimensions");
    HetGPParams w = *warm;
    w.theta = w.theta.cwiseMax(cfg.theta_min).cwiseMin(cfg.theta_max);
    w.theta_noise = w.theta_noise.cwiseMax(cfg.theta_min).cwiseMin(cfg.theta_max);
    w.g_noise = std::clamp(w.g_noise, cfg.g_min, cfg.g_max);
    w.log_delta = w.log_delta.cwiseMax(cfg.log_delta_min).cwiseMin(cfg.log_delta_max);
    starts.push_back(std::move(w));
  }
  const int fresh = std::max(0, cfg.n_starts - static_cast<int>(starts.size()));
  if (fresh > 0)
  {
    const Vector* hint = warm ? &warm->theta : nullptr;
    const HetGPParams homo = homoskedastic_fit(sd, cfg, hint, rng);
    const double tau2_homo = evaluate(sd, homo, true).lik.tau2;
    const Vector z0 = initial_log_delta(sd, homo, tau2_homo, cfg);

    HetGPParams first;
    first.theta = homo.theta;
    first.theta_noise = homo.theta;
    first.g_noise = std::clamp(0.1, cfg.g_min, cfg.g_max);
    first.log_delta = z0;
    starts.push_back(first);

    const Matrix U = log_space_starts(fresh - 1, 2 * d + 1, rng);
    for (int k = 0; k + 1 < fresh; ++k)
    {
      HetGPParams p;
      p.theta.resize(d);
      p.theta_noise.resize(d);
      for (Index j = 0; j < d; ++j)
      {
        p.theta[j] = lerp_log(U(k, j), cfg.theta_min, cfg.theta_max);
        p.theta_noise[j] = lerp_log(U(k, d + j), cfg.theta_min, cfg.theta_max);
      }
      p.g_noise = lerp_log(U(k, 2 * d), cfg.g_min, cfg.g_max);
      p.log_delta = z0;
      starts.push_back(std::move(p));
    }
  }
  return HetGPModel::from_params(data, best_of(sd, starts, false, cfg).params, false);
}

HetGPModel update(const HetGPModel& model, std::span<const Run> new_runs, const FitConfig& cfg)
{
  if (new_runs.empty())
    return model;
  DesignSet pooled = merge_runs(model.design(), new_runs);
  const Index n_old = model.n(), n_new = pooled.n();
  HetGPParams warm = model.params();
  Vector z(n_new);
  z.head(n_old) = warm.log_delta;
  if (n_new > n_old)
  {
    const Matrix fresh = pooled.unique_x.bottomRows(n_new - n_old);
    z.tail(n_new - n_old) = model.log_noise(fresh);
  }
  warm.log_delta = z;
  if (model.homoskedastic())
    warm.log_delta.setConstant(model.params().log_delta[0]);
  return fit(pooled, cfg, warm);
}
} // namespace hetbatch
