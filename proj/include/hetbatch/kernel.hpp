#pragma once

// Separable Gaussian kernel on coded inputs in [0,1]^d, plus the closed-form
// integrals of kernel products over the unit cube used by IMSPE.
//
//   c(x, z)  = exp(-sum_k (x_k - z_k)^2 / theta_k)
//   w_k(a,b) = int_0^1 c_k(a, t) c_k(b, t) dt
//   w(x, z)  = prod_k w_k(x_k, z_k)
//
// erf comes from std::erf (libm), accurate to a few ulp.

#include "hetbatch/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <string>

namespace hetbatch
{
template <typename T>
struct KernelSpec
{
  using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  VectorT lengthscales;

  KernelSpec() = default;
  explicit KernelSpec(VectorT theta) : lengthscales(std::move(theta)) { validate(); }

  Index dim() const { return lengthscales.size(); }

  void validate() const
  {
    if (lengthscales.size() == 0)
      throw InputError("kernel: empty lengthscale vector");
    for (Index k = 0; k < lengthscales.size(); ++k)
      if (!(lengthscales[k] > T(0)) || !std::isfinite(lengthscales[k]))
        throw InputError("kernel: lengthscales must be finite and strictly positive");
  }
};

using Kernel = KernelSpec<Scalar>;

namespace detail
{
template <typename T>
void check_theta(T theta)
{
  if (!(theta > T(0)))
    throw InputError("kernel: theta must be strictly positive");
}

template <typename D1, typename D2, typename T>
void check_dims(const Eigen::MatrixBase<D1>& X1, const Eigen::MatrixBase<D2>& X2, const KernelSpec<T>& spec)
{
  if (X1.cols() != spec.dim() || X2.cols() != spec.dim())
    throw InputError("kernel: input dimension " + std::to_string(X1.cols()) + "/" + std::to_string(X2.cols()) +
                     " does not match lengthscale dimension " + std::to_string(spec.dim()));
}
} // namespace detail

/// Cross-covariance matrix, entry (i,j) = c(X1_i, X2_j).
template <typename D1, typename D2, typename T = typename D1::Scalar>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> cov(const Eigen::MatrixBase<D1>& X1, const Eigen::MatrixBase<D2>& X2,
                                                     const KernelSpec<T>& spec)
{
  detail::check_dims(X1, X2, spec);
  const Index n1 = X1.rows(), n2 = X2.rows(), d = X1.cols();
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> K(n1, n2);
  for (Index j = 0; j < n2; ++j)
    for (Index i = 0; i < n1; ++i)
    {
      T s = 0;
      for (Index k = 0; k < d; ++k)
      {
        const T diff = X1(i, k) - X2(j, k);
        s += diff * diff / spec.lengthscales[k];
      }
      K(i, j) = std::exp(-s);
    }
  return K;
}

/// Symmetric covariance of a point set with itself; unit diagonal exactly.
template <typename D, typename T = typename D::Scalar>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> cov(const Eigen::MatrixBase<D>& X, const KernelSpec<T>& spec)
{
  detail::check_dims(X, X, spec);
  const Index n = X.rows(), d = X.cols();
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> K(n, n);
  for (Index j = 0; j < n; ++j)
  {
    K(j, j) = T(1);
    for (Index i = j + 1; i < n; ++i)
    {
      T s = 0;
      for (Index k = 0; k < d; ++k)
      {
        const T diff = X(i, k) - X(j, k);
        s += diff * diff / spec.lengthscales[k];
      }
      K(i, j) = K(j, i) = std::exp(-s);
    }
  }
  return K;
}

/// d c(x, X_i) / d x_p for every row i of X.
template <typename Dx, typename DX, typename T = typename DX::Scalar>
Eigen::Matrix<T, Eigen::Dynamic, 1> dcov_dcoord(const Eigen::MatrixBase<Dx>& x, const Eigen::MatrixBase<DX>& X,
                                                const KernelSpec<T>& spec, Index p)
{
  if (x.size() != spec.dim() || X.cols() != spec.dim())
    throw InputError("dcov_dcoord: dimension mismatch");
  if (p < 0 || p >= spec.dim())
    throw InputError("dcov_dcoord: coordinate index out of range");
  const Index n = X.rows(), d = X.cols();
  Eigen::Matrix<T, Eigen::Dynamic, 1> out(n);
  for (Index i = 0; i < n; ++i)
  {
    T s = 0;
    for (Index k = 0; k < d; ++k)
    {
      const T diff = x(k) - X(i, k);
      s += diff * diff / spec.lengthscales[k];
    }
    out[i] = std::exp(-s) * (T(-2) * (x(p) - X(i, p)) / spec.lengthscales[p]);
  }
  return out;
}

/// One-dimensional kernel-product integral over [0,1].
template <typename T>
T w_scalar(T a, T b, T theta)
{
  detail::check_theta(theta);
  using std::erf;
  using std::exp;
  using std::sqrt;
  const T root = sqrt(T(2) * theta);
  const T diff = a - b;
  const T sum = a + b;
  return sqrt(T(2) * std::numbers::pi_v<T> * theta) / T(4) * exp(-diff * diff / (T(2) * theta)) *
         (erf((T(2) - sum) / root) + erf(sum / root));
}

/// d w_scalar(x, xi, theta) / dx.
template <typename T>
T dw_scalar(T x, T xi, T theta)
{
  detail::check_theta(theta);
  using std::erf;
  using std::exp;
  using std::sqrt;
  const T pi = std::numbers::pi_v<T>;
  const T two_theta = T(2) * theta;
  const T root = sqrt(two_theta);
  const T diff = x - xi;
  const T sum = x + xi;
  const T lead = sqrt(pi / (T(8) * theta)) * exp(-diff * diff / two_theta);
  const T erf_part = diff * (erf((sum - T(2)) / root) - erf(sum / root));
  const T exp_part = sqrt(two_theta / pi) * (exp(-sum * sum / two_theta) - exp(-(sum - T(2)) * (sum - T(2)) / two_theta));
  return lead * (erf_part + exp_part);
}

/// Matrix of w(X1_i, X2_j) = prod_k w_k.
template <typename D1, typename D2, typename T = typename D1::Scalar>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> w_matrix(const Eigen::MatrixBase<D1>& X1,
                                                          const Eigen::MatrixBase<D2>& X2, const KernelSpec<T>& spec)
{
  detail::check_dims(X1, X2, spec);
  const Index n1 = X1.rows(), n2 = X2.rows(), d = X1.cols();
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> W =
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Ones(n1, n2);
  for (Index k = 0; k < d; ++k)
    for (Index j = 0; j < n2; ++j)
      for (Index i = 0; i < n1; ++i)
        W(i, j) *= w_scalar<T>(X1(i, k), X2(j, k), spec.lengthscales[k]);
  return W;
}
} // namespace hetbatch
