#include "hetbatch/lhs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace hetbatch
{
Matrix random_lhs(Index n, Index d, Rng& rng)
{
  if (n < 1 || d < 1)
    throw InputError("random_lhs: n and d must be positive");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix X(n, d);
  std::vector<Index> perm(static_cast<size_t>(n));
  for (Index k = 0; k < d; ++k)
  {
    std::iota(perm.begin(), perm.end(), Index{0});
    // Fisher-Yates with our own draws so the sample does not depend on the library's shuffle.
    for (Index i = n - 1; i > 0; --i)
    {
      std::uniform_int_distribution<Index> pick(0, i);
      std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(pick(rng))]);
    }
    for (Index i = 0; i < n; ++i)
      X(i, k) = (static_cast<double>(perm[static_cast<size_t>(i)]) + unif(rng)) / static_cast<double>(n);
  }
  return X;
}

double min_pairwise_distance(const Matrix& X)
{
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = i + 1; j < X.rows(); ++j)
      best = std::min(best, (X.row(i) - X.row(j)).squaredNorm());
  return std::sqrt(best);
}

Matrix maximin_lhs(Index n, Index d, std::uint64_t seed, int n_candidates)
{
  if (n < 2)
    throw InputError("maximin_lhs: need at least 2 points");
  Rng rng(seed);
  Matrix best;
  double best_dist = -1.0;
  for (int c = 0; c < std::max(n_candidates, 1); ++c)
  {
    Matrix X = random_lhs(n, d, rng);
    const double dist = min_pairwise_distance(X);
    if (dist > best_dist)
    {
      best_dist = dist;
      best = std::move(X);
    }
  }
  return best;
}

Matrix sequential_maximin(const Matrix& existing, Index m, std::uint64_t seed, Index n_candidates)
{
  const Index d = existing.cols();
  if (n_candidates <= 0)
    n_candidates = std::max<Index>(100 * m, 1000);
  Rng rng(seed);
  const Matrix cand = random_lhs(n_candidates, d, rng);
  Vector nearest(n_candidates);
  for (Index c = 0; c < n_candidates; ++c)
  {
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < existing.rows(); ++i)
      best = std::min(best, (cand.row(c) - existing.row(i)).squaredNorm());
    nearest[c] = best;
  }
  Matrix out(m, d);
  for (Index j = 0; j < m; ++j)
  {
    Index arg = 0;
    nearest.maxCoeff(&arg);
    out.row(j) = cand.row(arg);
    for (Index c = 0; c < n_candidates; ++c)
      nearest[c] = std::min(nearest[c], (cand.row(c) - out.row(j)).squaredNorm());
  }
  return out;
}
} // namespace hetbatch
