#include "hetbatch/backtrack.hpp"

#include <Eigen/QR>

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace hetbatch
{
namespace
{
constexpr int kMaxDegree = 4;
// Breaks whose MSE differ by less than this fraction of the trace variance tie.
constexpr double kTieTolerance = 1e-12;

Index snap_target(const DesignSet& data, const Vector& x)
{
  for (Index k = 0; k < data.n(); ++k)
    if (((data.unique_x.row(k).transpose() - x).array().abs() <= kDuplicateTolerance).all())
      return k;
  return -1;
}

/// Places `site` on existing row k, pooling with an earlier snap to the same row.
void snap(std::vector<BatchSite>& batch, size_t i, Index k, const DesignSet& data)
{
  for (size_t j = 0; j < batch.size(); ++j)
    if (j != i && batch[j].existing == k)
    {
      batch[j].multiplicity += batch[i].multiplicity;
      batch[j].fused = batch[j].fused || batch[i].fused;
      batch.erase(batch.begin() + static_cast<std::ptrdiff_t>(i));
      return;
    }
  batch[i].existing = k;
  batch[i].x = data.unique_x.row(k).transpose();
}

Vector polynomial_fitted(const Vector& s, const Vector& y)
{
  const Index m = s.size();
  const int degree = static_cast<int>(std::min<Index>(kMaxDegree, m - 1));
  const double mid = s.mean();
  const double half = std::max(1.0, 0.5 * (s.maxCoeff() - s.minCoeff()));
  Matrix V(m, degree + 1);
  for (Index i = 0; i < m; ++i)
  {
    const double t = (s[i] - mid) / half;
    double pw = 1.0;
    for (int k = 0; k <= degree; ++k, pw *= t)
      V(i, k) = pw;
  }
  return V * V.colPivHouseholderQr().solve(y);
}

double polynomial_sse(const Vector& s, const Vector& y)
{
  return s.size() <= 1 ? 0.0 : (polynomial_fitted(s, y) - y).squaredNorm();
}
} // namespace

Vector MergeTrace::imspe_values() const
{
  Vector v(static_cast<Index>(candidates.size()));
  for (size_t s = 0; s < candidates.size(); ++s)
    v[static_cast<Index>(s)] = candidates[s].imspe;
  return v;
}

double candidate_imspe(const ImspeWorkspace& ws, const HetGPModel& model, const std::vector<BatchSite>& batch)
{
  const Index rows = static_cast<Index>(batch.size());
  Matrix X(rows, model.dim());
  Vector mult(rows);
  for (Index i = 0; i < rows; ++i)
  {
    X.row(i) = batch[static_cast<size_t>(i)].x.transpose();
    mult[i] = batch[static_cast<size_t>(i)].multiplicity;
  }
  return imspe_batch(ws, model, X, mult);
}

MergeTrace merge_sequence(const ImspeWorkspace& ws, const HetGPModel& model, const Matrix& xtil)
{
  const DesignSet& data = model.design();
  const Index M = xtil.rows();
  if (M < 1)
    throw InputError("merge_sequence: empty batch");
  if (xtil.cols() != model.dim())
    throw InputError("merge_sequence: batch dimension does not match the model");

  std::vector<BatchSite> batch;
  for (Index i = 0; i < M; ++i)
    batch.push_back(BatchSite{xtil.row(i).transpose(), 1, -1, false});

  MergeTrace trace;
  trace.candidates.push_back(MergeCandidate{batch, M, 0.0, candidate_imspe(ws, model, batch)});

  for (Index s = 1; s <= M; ++s)
  {
    double best = std::numeric_limits<double>::infinity();
    size_t bi = batch.size(), bj = 0;
    Index bk = -1;
    for (size_t i = 0; i < batch.size(); ++i)
    {
      if (batch[i].existing >= 0)
        continue;
      // existing sites first, so an exact tie resolves to a replicate
      for (Index k = 0; k < data.n(); ++k)
      {
        const double dist = (batch[i].x - data.unique_x.row(k).transpose()).norm();
        if (dist < best)
        {
          best = dist;
          bi = i;
          bk = k;
        }
      }
      for (size_t j = i + 1; j < batch.size(); ++j)
      {
        if (batch[j].existing >= 0)
          continue;
        const double dist = (batch[i].x - batch[j].x).norm();
        if (dist < best)
        {
          best = dist;
          bi = i;
          bj = j;
          bk = -1;
        }
      }
    }

    if (bi == batch.size())
      break; // every site already sits on the existing design
    if (bk >= 0)
      snap(batch, bi, bk, data);
    else
    {
      BatchSite& a = batch[bi];
      const BatchSite& b = batch[bj];
      a.x = 0.5 * (a.x + b.x);
      a.multiplicity += b.multiplicity;
      a.fused = true;
      batch.erase(batch.begin() + static_cast<std::ptrdiff_t>(bj));
      const Index k = snap_target(data, a.x);
      if (k >= 0)
        snap(batch, bi, k, data);
    }

    Index unique_new = 0;
    for (const BatchSite& site : batch)
      unique_new += site.existing < 0 ? 1 : 0;
    trace.candidates.push_back(MergeCandidate{batch, unique_new, best, candidate_imspe(ws, model, batch)});
  }
  return trace;
}

MergeTrace merge_sequence(const HetGPModel& model, const Matrix& xtil)
{
  return merge_sequence(ImspeWorkspace::build(model), model, xtil);
}

ChangepointFit changepoint_fit(const Vector& imspe_by_s)
{
  const Index len = imspe_by_s.size();
  if (len < 2)
    throw InputError("changepoint_select: need at least two trace values");
  if (!imspe_by_s.allFinite())
    throw InputError("changepoint_select: non-finite IMSPE value");
  const Index M = len - 1;
  const Vector y = imspe_by_s.array() - imspe_by_s.mean();
  const double tol = kTieTolerance * std::max(y.squaredNorm() / static_cast<double>(len), 1e-300);

  ChangepointFit out;
  out.mse.resize(len);
  double best = std::numeric_limits<double>::infinity();
  for (Index b = 0; b <= M; ++b)
  {
    const Vector left = y.head(b + 1);
    double sse = (left.array() - left.mean()).square().sum();
    if (b < M)
    {
      const Index m = M - b;
      const Vector s = Vector::LinSpaced(m, static_cast<double>(b + 1), static_cast<double>(M));
      sse += polynomial_sse(s, y.tail(m));
    }
    out.mse[b] = sse / static_cast<double>(len);
    best = std::min(best, out.mse[b]);
  }
  for (Index b = M; b >= 0; --b)
    if (out.mse[b] <= best + tol)
    {
      out.best_break = b;
      break;
    }

  const Index b = out.best_break;
  out.s_hat = b;
  if (b < M)
  {
    const Index m = M - b;
    const Vector s = Vector::LinSpaced(m, static_cast<double>(b + 1), static_cast<double>(M));
    const Vector fitted = polynomial_fitted(s, y.tail(m));
    const double level = y.head(b + 1).mean();
    if ((fitted.array() < level).all())
    {
      Index arg = 0;
      y.tail(m).minCoeff(&arg);
      out.s_hat = b + 1 + arg;
      out.fallback = true;
    }
  }
  return out;
}

Index changepoint_select(const Vector& imspe_by_s) { return changepoint_fit(imspe_by_s).s_hat; }

std::vector<BatchSite> select_batch(const MergeTrace& trace, Index s_hat)
{
  if (s_hat < 0 || s_hat >= static_cast<Index>(trace.candidates.size()))
    throw InputError("select_batch: s_hat out of range");
  return trace.candidates[static_cast<size_t>(s_hat)].batch;
}

std::string trace_csv(const MergeTrace& trace)
{
  std::ostringstream os;
  os << std::setprecision(17) << "s,m_s,d_s,imspe\n";
  for (size_t s = 0; s < trace.candidates.size(); ++s)
  {
    const MergeCandidate& c = trace.candidates[s];
    os << s << ',' << c.unique_new << ',' << c.distance << ',' << c.imspe << '\n';
  }
  return os.str();
}
} // namespace hetbatch
