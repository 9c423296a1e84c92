#include "hetbatch/design_set.hpp"

#include <cmath>
#include <string>

namespace hetbatch
{
namespace
{
bool same_site(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b)
{
  return ((a - b).array().abs() <= kDuplicateTolerance).all();
}

void finalize_statistics(DesignSet& out)
{
  const Index n = static_cast<Index>(out.responses.size());
  out.counts.resize(n);
  out.mean_y.resize(n);
  out.ss_y.resize(n);
  for (Index i = 0; i < n; ++i)
  {
    const auto& ys = out.responses[static_cast<size_t>(i)];
    double sum = 0.0;
    for (double y : ys)
      sum += y;
    const double mean = sum / static_cast<double>(ys.size());
    double ss = 0.0;
    for (double y : ys)
      ss += (y - mean) * (y - mean);
    out.counts[i] = static_cast<int>(ys.size());
    out.mean_y[i] = mean;
    out.ss_y[i] = ys.size() > 1 ? ss : 0.0;
  }
}

void append_runs(DesignSet& out, std::vector<Vector>& rows, std::span<const Run> runs, Index d)
{
  for (const Run& r : runs)
  {
    if (r.x.size() != d)
      throw InputError("aggregate: run has dimension " + std::to_string(r.x.size()) + ", expected " +
                       std::to_string(d));
    if (!std::isfinite(r.y))
      throw InputError("aggregate: non-finite response");
    if (!r.x.allFinite())
      throw InputError("aggregate: non-finite input coordinate");
    size_t hit = rows.size();
    for (size_t i = 0; i < rows.size(); ++i)
      if (same_site(rows[i], r.x))
      {
        hit = i;
        break;
      }
    if (hit == rows.size())
    {
      rows.push_back(r.x);
      out.responses.emplace_back();
    }
    out.responses[hit].push_back(r.y);
  }
}

void fill_rows(DesignSet& out, const std::vector<Vector>& rows, Index d)
{
  out.unique_x.resize(static_cast<Index>(rows.size()), d);
  for (size_t i = 0; i < rows.size(); ++i)
    out.unique_x.row(static_cast<Index>(i)) = rows[i].transpose();
}
} // namespace

Index DesignSet::find(const Eigen::Ref<const Vector>& x) const
{
  for (Index i = 0; i < n(); ++i)
    if (same_site(unique_x.row(i).transpose(), x))
      return i;
  return -1;
}

DesignSet aggregate(std::span<const Run> runs)
{
  if (runs.empty())
    throw InputError("aggregate: no runs");
  const Index d = runs.front().x.size();
  DesignSet out;
  std::vector<Vector> rows;
  append_runs(out, rows, runs, d);
  fill_rows(out, rows, d);
  finalize_statistics(out);
  return out;
}

DesignSet merge_runs(const DesignSet& base, std::span<const Run> runs)
{
  DesignSet out;
  out.responses = base.responses;
  std::vector<Vector> rows;
  rows.reserve(static_cast<size_t>(base.n()) + runs.size());
  for (Index i = 0; i < base.n(); ++i)
    rows.push_back(base.unique_x.row(i).transpose());
  append_runs(out, rows, runs, base.dim());
  fill_rows(out, rows, base.dim());
  finalize_statistics(out);
  return out;
}

DesignSet make_design(Matrix unique_x, std::vector<std::vector<double>> responses)
{
  if (static_cast<size_t>(unique_x.rows()) != responses.size())
    throw InputError("make_design: row count does not match response groups");
  for (const auto& ys : responses)
    if (ys.empty())
      throw InputError("make_design: site without responses");
  DesignSet out;
  out.unique_x = std::move(unique_x);
  out.responses = std::move(responses);
  finalize_statistics(out);
  return out;
}

std::vector<Run> expand(const DesignSet& data)
{
  std::vector<Run> out;
  out.reserve(static_cast<size_t>(data.total_runs()));
  for (Index i = 0; i < data.n(); ++i)
    for (double y : data.responses[static_cast<size_t>(i)])
      out.push_back(Run{data.unique_x.row(i).transpose(), y});
  return out;
}
} // namespace hetbatch
