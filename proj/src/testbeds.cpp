#include "hetbatch/testbeds.hpp"

#include <cmath>
#include <numbers>

namespace hetbatch
{
namespace
{
void check_dim(const Eigen::Ref<const Vector>& x, Index d, const char* who)
{
  if (x.size() != d)
    throw InputError(std::string(who) + ": expected dimension " + std::to_string(d));
}
} // namespace

double toy1d_mean(double x) { return (6.0 * x - 2.0) * (6.0 * x - 2.0) * std::sin(12.0 * x - 4.0); }

double toy1d_noise(double x)
{
  const double s = 1.1 + std::sin(2.0 * std::numbers::pi * x);
  return s * s;
}

double toy1d(double x, Rng& rng)
{
  std::normal_distribution<double> eps(0.0, 1.0);
  return toy1d_mean(x) + std::sqrt(toy1d_noise(x)) * eps(rng);
}

double toy2d_mean(const Eigen::Ref<const Vector>& x)
{
  check_dim(x, 2, "toy2d");
  const double a1 = 6.0 * x[0] - 4.1, a2 = 6.0 * x[1] - 4.1;
  const double a3 = 6.0 * x[0] - 1.7, a4 = 6.0 * x[1] - 1.7;
  return 20.0 * (a1 * std::exp(-a1 * a1 - a2 * a2) + a3 * std::exp(-a3 * a3 - a4 * a4));
}

double toy2d_noise(const Eigen::Ref<const Vector>& x)
{
  check_dim(x, 2, "toy2d");
  constexpr double var = 0.02;
  const double q = ((x[0] - 0.7) * (x[0] - 0.7) + (x[1] - 0.7) * (x[1] - 0.7)) / var;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * var) + kToy2dNoiseFloor;
}

double toy2d(const Eigen::Ref<const Vector>& x, Rng& rng)
{
  std::normal_distribution<double> eps(0.0, 1.0);
  return toy2d_mean(x) + std::sqrt(toy2d_noise(x)) * eps(rng);
}

double Testbed::mean(const Eigen::Ref<const Vector>& x) const
{
  if (kind == Kind::toy1d)
  {
    check_dim(x, 1, "toy1d");
    return toy1d_mean(x[0]);
  }
  return toy2d_mean(x);
}

double Testbed::noise(const Eigen::Ref<const Vector>& x) const
{
  if (kind == Kind::toy1d)
  {
    check_dim(x, 1, "toy1d");
    return toy1d_noise(x[0]);
  }
  return toy2d_noise(x);
}

double Testbed::sample(const Eigen::Ref<const Vector>& x, Rng& rng) const
{
  if (kind == Kind::toy1d)
  {
    check_dim(x, 1, "toy1d");
    return toy1d(x[0], rng);
  }
  return toy2d(x, rng);
}

Vector Testbed::mean_values(const Matrix& X) const
{
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i)
    out[i] = mean(Vector(X.row(i).transpose()));
  return out;
}

Vector Testbed::noise_values(const Matrix& X) const
{
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i)
    out[i] = noise(Vector(X.row(i).transpose()));
  return out;
}

Testbed testbed(const std::string& name)
{
  if (name == "toy1d")
    return Testbed{Testbed::Kind::toy1d};
  if (name == "toy2d")
    return Testbed{Testbed::Kind::toy2d};
  throw InputError("unknown testbed '" + name + "' (expected toy1d or toy2d)");
}

std::vector<std::string> testbed_names() { return {"toy1d", "toy2d"}; }
} // namespace hetbatch
