#include "hetbatch/lbfgsb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace hetbatch
{
namespace
{
Vector project(const Vector& x, const Vector& lo, const Vector& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

struct Pair
{
  Vector s, y;
  double rho;
};

Vector two_loop(const std::deque<Pair>& mem, const Vector& q0)
{
  Vector q = q0;
  std::vector<double> alpha(mem.size());
  for (size_t k = mem.size(); k-- > 0;)
  {
    alpha[k] = mem[k].rho * mem[k].s.dot(q);
    q -= alpha[k] * mem[k].y;
  }
  if (!mem.empty())
  {
    const Pair& last = mem.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (size_t k = 0; k < mem.size(); ++k)
  {
    const double beta = mem[k].rho * mem[k].y.dot(q);
    q += (alpha[k] - beta) * mem[k].s;
  }
  return q;
}
} // namespace

BoxQnResult minimize_box(const BoxObjective& fun, const Vector& x0, const Vector& lower, const Vector& upper,
                         const BoxQnOptions& opts)
{
  const Index n = x0.size();
  if (lower.size() != n || upper.size() != n)
    throw InputError("minimize_box: bound dimension mismatch");
  if ((lower.array() > upper.array()).any())
    throw InputError("minimize_box: lower bound exceeds upper bound");

  BoxQnResult res;
  res.x = project(x0, lower, upper);
  Vector g(n);
  res.f = fun(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.f))
  {
    res.message = "objective not finite at the start point";
    return res;
  }

  std::deque<Pair> mem;
  Vector xt(n), gt(n);
  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations)
  {
    const Vector pg = project(res.x - g, lower, upper) - res.x;
    if (pg.lpNorm<Eigen::Infinity>() <= opts.pgtol)
    {
      res.converged = true;
      res.message = "projected gradient below tolerance";
      return res;
    }

    // Freeze variables held at a bound by the gradient.
    Eigen::Array<bool, Eigen::Dynamic, 1> free_var(n);
    for (Index i = 0; i < n; ++i)
      free_var[i] = !((res.x[i] <= lower[i] && g[i] > 0.0) || (res.x[i] >= upper[i] && g[i] < 0.0));
    const Vector gf = free_var.select(g, Vector::Zero(n));

    Vector dir = -two_loop(mem, gf);
    dir = free_var.select(dir, Vector::Zero(n));
    if (!(gf.dot(dir) < -1e-12 * gf.norm() * dir.norm()))
    {
      mem.clear();
      dir = -gf;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt)
    {
      double step = mem.empty() ? std::min(1.0, 1.0 / std::max(dir.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;
      for (int ls = 0; ls < opts.max_linesearch; ++ls)
      {
        xt = project(res.x + step * dir, lower, upper);
        const double ft = fun(xt, gt);
        ++res.evaluations;
        const double decrease = g.dot(xt - res.x);
        if (std::isfinite(ft) && ft <= res.f + 1e-4 * decrease)
        {
          accepted = true;
          const Vector s = xt - res.x;
          const Vector y = gt - g;
          const double sy = s.dot(y);
          if (sy > 1e-10 * y.squaredNorm() && sy > 0.0)
          {
            mem.push_back(Pair{s, y, 1.0 / sy});
            if (static_cast<int>(mem.size()) > opts.memory)
              mem.pop_front();
          }
          const double fprev = res.f;
          res.x = xt;
          res.f = ft;
          g = gt;
          if (fprev - ft <= opts.ftol * std::max({std::abs(fprev), std::abs(ft), 1.0}))
          {
            ++res.iterations;
            res.converged = true;
            res.message = "relative reduction below tolerance";
            return res;
          }
          break;
        }
        step *= (std::isfinite(ft) ? 0.5 : 0.1);
      }
      if (!accepted)
      {
        if (mem.empty())
          break;
        mem.clear();
        dir = -gf;
      }
    }
    if (!accepted)
    {
      res.message = "line search failed";
      return res;
    }
  }
  res.message = "iteration limit reached";
  return res;
}
} // namespace hetbatch
