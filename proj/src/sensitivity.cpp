#include "hetbatch/sensitivity.hpp"

#include "hetbatch/lhs.hpp"
#include "hetbatch/parallel.hpp"

#include <iomanip>
#include <map>
#include <sstream>

namespace hetbatch
{
namespace
{
constexpr double kDegenerateVariance = 1e-12;
constexpr int kMaxRedraws = 10;

enum SeedTag : std::uint64_t
{
  kSobol = 1,
  kMainEffect = 2,
  kResample = 3,
  kRefit = 4,
};

double pooled_variance(const Vector& a, const Vector& b)
{
  const double mean = (a.sum() + b.sum()) / static_cast<double>(a.size() + b.size());
  const double ss = (a.array() - mean).square().sum() + (b.array() - mean).square().sum();
  return ss / static_cast<double>(a.size() + b.size() - 1);
}
} // namespace

SensTarget parse_target(const std::string& name)
{
  if (name == "mean")
    return SensTarget::mean;
  if (name == "noise")
    return SensTarget::noise;
  throw InputError("unknown sensitivity target '" + name + "' (expected mean or noise)");
}

std::string target_name(SensTarget t) { return t == SensTarget::mean ? "mean" : "noise"; }

Surface model_surface(const HetGPModel& model, SensTarget target)
{
  if (target == SensTarget::mean)
    return [&model](const Matrix& X) { return model.predict_mean(X); };
  return [&model](const Matrix& X) { return model.predict_noise(X); };
}

MainEffect main_effects(const Surface& f, Index d, Index j, const Vector& grid, int n_mc, std::uint64_t seed)
{
  if (j < 0 || j >= d)
    throw InputError("main_effects: input index " + std::to_string(j) + " out of range");
  if (n_mc < 1)
    throw InputError("main_effects: n_mc must be positive");
  Rng rng(derive_seed(seed, kMainEffect));
  Matrix U = random_lhs(n_mc, d, rng);
  MainEffect me;
  me.input = j;
  me.grid = grid;
  me.value.resize(grid.size());
  for (Index g = 0; g < grid.size(); ++g)
  {
    U.col(j).setConstant(grid[g]);
    me.value[g] = f(U).mean();
  }
  return me;
}

MainEffect main_effects(const HetGPModel& model, Index j, const Vector& grid, int n_mc, SensTarget target,
                        std::uint64_t seed)
{
  return main_effects(model_surface(model, target), model.dim(), j, grid, n_mc, seed);
}

SobolIndices sobol_indices(const Surface& f, Index d, int n_mc, std::uint64_t seed)
{
  if (n_mc < 2)
    throw InputError("sobol_indices: n_mc must be at least 2");
  Rng rng(derive_seed(seed, kSobol));
  const Matrix A = random_lhs(n_mc, d, rng);
  const Matrix B = random_lhs(n_mc, d, rng);
  const Vector fA = f(A), fB = f(B);

  SobolIndices out;
  out.S_raw = Vector::Zero(d);
  out.T_raw = Vector::Zero(d);
  out.variance = pooled_variance(fA, fB);
  if (!(out.variance >= kDegenerateVariance))
  {
    out.degenerate = true;
    out.S = out.S_raw;
    out.T = out.T_raw;
    return out;
  }
  const double nd = static_cast<double>(n_mc);
  for (Index j = 0; j < d; ++j)
  {
    Matrix ABj = A;
    ABj.col(j) = B.col(j);
    const Vector fAB = f(ABj);
    out.S_raw[j] = (fB.array() * (fAB - fA).array()).sum() / nd / out.variance;
    out.T_raw[j] = (fA - fAB).squaredNorm() / nd / (2.0 * out.variance);
  }
  out.S = out.S_raw.cwiseMax(0.0).cwiseMin(1.0);
  out.T = out.T_raw.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

SobolIndices sobol_indices(const HetGPModel& model, int n_mc, SensTarget target, std::uint64_t seed)
{
  return sobol_indices(model_surface(model, target), model.dim(), n_mc, seed);
}

SensitivityReport analyze(const HetGPModel& model, const SensitivityConfig& cfg)
{
  if (cfg.grid < 2)
    throw InputError("sensitivity: grid needs at least 2 points");
  SensitivityReport rep;
  rep.target = cfg.target;
  const Vector grid = Vector::LinSpaced(cfg.grid, 0.0, 1.0);
  for (Index j = 0; j < model.dim(); ++j)
    rep.main_effects.push_back(main_effects(model, j, grid, cfg.n_mc, cfg.target, cfg.seed));
  rep.indices = sobol_indices(model, cfg.n_mc, cfg.target, cfg.seed);
  return rep;
}

DesignSet bootstrap_resample(const DesignSet& data, Rng& rng)
{
  const Index n = data.n(), d = data.dim();
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (int attempt = 0; attempt <= kMaxRedraws; ++attempt)
  {
    std::map<Index, int> drawn;
    for (Index i = 0; i < n; ++i)
      ++drawn[pick(rng)];
    const Index distinct = static_cast<Index>(drawn.size());
    bool replicated = false;
    for (const auto& [site, times] : drawn)
      replicated = replicated || times * data.counts[site] >= 2;
    if (distinct < d + 2 || !replicated)
      continue;
    Matrix X(distinct, d);
    std::vector<std::vector<double>> resp;
    Index row = 0;
    for (const auto& [site, times] : drawn)
    {
      X.row(row++) = data.unique_x.row(site);
      std::vector<double> block;
      for (int t = 0; t < times; ++t)
        block.insert(block.end(), data.responses[static_cast<size_t>(site)].begin(),
                     data.responses[static_cast<size_t>(site)].end());
      resp.push_back(std::move(block));
    }
    return make_design(std::move(X), std::move(resp));
  }
  throw InputError("bootstrap: no usable resample after " + std::to_string(kMaxRedraws) +
                   " redraws; the design has too few unique sites");
}

SensitivityReport bootstrap_indices(const std::vector<Run>& runs, const SensitivityConfig& cfg)
{
  if (cfg.bootstrap < 1)
    throw InputError("bootstrap: B must be at least 1");
  const DesignSet data = aggregate(runs);
  const HetGPModel full = fit(data, cfg.fit);
  SensitivityReport rep = analyze(full, cfg);
  const Index d = data.dim();

  rep.bootstrap.resize(static_cast<size_t>(cfg.bootstrap));
  parallel_for(cfg.bootstrap, cfg.jobs, [&](int b) {
    Rng rng(derive_seed(cfg.seed, kResample, static_cast<std::uint64_t>(b)));
    const DesignSet sample = bootstrap_resample(data, rng);
    // warm start from the full fit, latent values carried by site
    HetGPParams warm = full.params();
    warm.log_delta.resize(sample.n());
    for (Index i = 0; i < sample.n(); ++i)
      warm.log_delta[i] = full.params().log_delta[data.find(sample.unique_x.row(i).transpose())];
    FitConfig fc = cfg.fit;
    fc.seed = derive_seed(cfg.seed, kRefit, static_cast<std::uint64_t>(b));
    fc.jobs = 1;
    const HetGPModel m = fit(sample, fc, warm);
    const SobolIndices idx = sobol_indices(m, cfg.n_mc, cfg.target, derive_seed(cfg.seed, kSobol, static_cast<std::uint64_t>(b)));
    rep.bootstrap[static_cast<size_t>(b)] = BootstrapSample{idx.S, idx.T, idx.interaction()};
  });

  rep.prop_I_positive = Vector::Zero(d);
  for (const BootstrapSample& s : rep.bootstrap)
    rep.prop_I_positive.array() += (s.I.array() > 0.0).cast<double>();
  rep.prop_I_positive /= static_cast<double>(cfg.bootstrap);
  return rep;
}

std::string main_effects_csv(const SensitivityReport& r)
{
  std::ostringstream os;
  os << std::setprecision(17) << "target,input,x,effect\n";
  for (const MainEffect& me : r.main_effects)
    for (Index g = 0; g < me.grid.size(); ++g)
      os << target_name(r.target) << ',' << me.input + 1 << ',' << me.grid[g] << ',' << me.value[g] << '\n';
  return os.str();
}

std::string indices_csv(const SensitivityReport& r)
{
  std::ostringstream os;
  os << std::setprecision(17) << "target,input,S,T,I,S_raw,T_raw,degenerate\n";
  const SobolIndices& x = r.indices;
  for (Index j = 0; j < x.S.size(); ++j)
    os << target_name(r.target) << ',' << j + 1 << ',' << x.S[j] << ',' << x.T[j] << ',' << x.T[j] - x.S[j] << ','
       << x.S_raw[j] << ',' << x.T_raw[j] << ',' << (x.degenerate ? 1 : 0) << '\n';
  return os.str();
}

std::string bootstrap_csv(const SensitivityReport& r)
{
  std::ostringstream os;
  os << std::setprecision(17) << "target,b,input,S,T,I\n";
  for (size_t b = 0; b < r.bootstrap.size(); ++b)
  {
    const BootstrapSample& s = r.bootstrap[b];
    for (Index j = 0; j < s.S.size(); ++j)
      os << target_name(r.target) << ',' << b << ',' << j + 1 << ',' << s.S[j] << ',' << s.T[j] << ',' << s.I[j]
         << '\n';
  }
  return os.str();
}

std::string proportions_csv(const std::vector<SensitivityReport>& reports)
{
  std::ostringstream os;
  os << std::setprecision(17) << "process";
  const Index d = reports.empty() ? 0 : reports.front().prop_I_positive.size();
  for (Index j = 0; j < d; ++j)
    os << ",x" << j + 1;
  os << '\n';
  for (const SensitivityReport& r : reports)
  {
    os << target_name(r.target);
    for (Index j = 0; j < r.prop_I_positive.size(); ++j)
      os << ',' << r.prop_I_positive[j];
    os << '\n';
  }
  return os.str();
}
} // namespace hetbatch
