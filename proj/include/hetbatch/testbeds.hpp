#pragma once

// Builtin stochastic test functions on coded inputs.
//
//   toy1d: f(x) = (6x - 2)^2 sin(12x - 4),  r(x) = (1.1 + sin(2 pi x))^2
//   toy2d: f(x) = 20 [a1 exp(-a1^2 - a2^2) + a3 exp(-a3^2 - a4^2)],
//          a1,2 = 6 x1,2 - 4.1,  a3,4 = 6 x1,2 - 1.7,
//          r(x) = N2(x; (0.7, 0.7), 0.02 I) + 1e-6

#include "hetbatch/lhs.hpp"

#include <string>
#include <vector>

namespace hetbatch
{
double toy1d_mean(double x);
double toy1d_noise(double x);
double toy1d(double x, Rng& rng);

double toy2d_mean(const Eigen::Ref<const Vector>& x);
double toy2d_noise(const Eigen::Ref<const Vector>& x);
double toy2d(const Eigen::Ref<const Vector>& x, Rng& rng);

/// Noise floor added to the toy2d density.
inline constexpr double kToy2dNoiseFloor = 1e-6;

struct Testbed
{
  enum class Kind
  {
    toy1d,
    toy2d
  };
  Kind kind = Kind::toy1d;

  Index dim() const { return kind == Kind::toy1d ? 1 : 2; }
  std::string name() const { return kind == Kind::toy1d ? "toy1d" : "toy2d"; }
  double mean(const Eigen::Ref<const Vector>& x) const;
  double noise(const Eigen::Ref<const Vector>& x) const;
  double sample(const Eigen::Ref<const Vector>& x, Rng& rng) const;

  Vector mean_values(const Matrix& X) const;
  Vector noise_values(const Matrix& X) const;
};

/// Looks up "toy1d" or "toy2d".
Testbed testbed(const std::string& name);
std::vector<std::string> testbed_names();
} // namespace hetbatch
