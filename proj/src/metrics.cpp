#include "hetbatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace hetbatch
{
double rmspe(const Vector& predicted, const Vector& truth)
{
  if (truth.size() == 0)
    throw InputError("rmspe: empty test set");
  if (predicted.size() != truth.size())
    throw InputError("rmspe: size mismatch");
  return std::sqrt((predicted - truth).squaredNorm() / static_cast<double>(truth.size()));
}

double rmspe(const HetGPModel& model, const Matrix& test_x, const Vector& truth)
{
  if (test_x.rows() == 0)
    throw InputError("rmspe: empty test set");
  return rmspe(model.predict(test_x).mean, truth);
}

double score(const Vector& mu, const Vector& s2, const Vector& y)
{
  if (y.size() == 0)
    throw InputError("score: empty test set");
  if (mu.size() != y.size() || s2.size() != y.size())
    throw InputError("score: size mismatch");
  if (!(s2.array() > 0.0).all())
    throw NumericalError("score: non-positive predictive variance");
  return (-s2.array().log() - (y - mu).array().square() / s2.array()).mean();
}

double score(const HetGPModel& model, const Matrix& test_x, const Vector& test_y)
{
  if (test_x.rows() == 0)
    throw InputError("score: empty test set");
  const Prediction p = model.predict(test_x);
  return score(p.mean, p.var_mean + p.noise, test_y);
}

DistanceDiag pairwise_distance_diag(const Matrix& old_x, const Matrix& new_x)
{
  if (old_x.rows() == 0 || new_x.rows() == 0)
    throw InputError("pairwise_distance_diag: empty point set");
  if (old_x.cols() != new_x.cols())
    throw InputError("pairwise_distance_diag: dimension mismatch");
  DistanceDiag out;
  for (Index i = 0; i < old_x.rows(); ++i)
    for (Index j = i + 1; j < old_x.rows(); ++j)
      out.old_old.push_back((old_x.row(i) - old_x.row(j)).norm());
  for (Index i = 0; i < new_x.rows(); ++i)
    for (Index j = i + 1; j < new_x.rows(); ++j)
      out.new_new.push_back((new_x.row(i) - new_x.row(j)).norm());
  for (Index i = 0; i < new_x.rows(); ++i)
    for (Index j = 0; j < old_x.rows(); ++j)
      out.new_old.push_back((new_x.row(i) - old_x.row(j)).norm());
  return out;
}

std::string distances_csv(const DistanceDiag& diag)
{
  std::ostringstream os;
  os << std::setprecision(17) << "set,distance\n";
  for (double v : diag.old_old)
    os << "old_old," << v << '\n';
  for (double v : diag.new_new)
    os << "new_new," << v << '\n';
  for (double v : diag.new_old)
    os << "new_old," << v << '\n';
  return os.str();
}

double median(std::vector<double> v)
{
  if (v.empty())
    throw InputError("median: empty sample");
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}
} // namespace hetbatch
