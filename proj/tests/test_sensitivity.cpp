#include "hetbatch/lhs.hpp"
#include "hetbatch/sensitivity.hpp"

#include <doctest.h>

#include <algorithm>

using namespace hetbatch;

namespace
{
Surface additive = [](const Matrix& X) -> Vector { return X.col(0) + X.col(1); };
Surface only_first = [](const Matrix& X) -> Vector { return X.col(0); };
Surface interaction = [](const Matrix& X) -> Vector {
  return ((X.col(0).array() - 0.5) * (X.col(1).array() - 0.5)).matrix();
};

/// Replicated maximin design on [0,1]^2 with a tiny noise so the surrogate is nearly interpolating.
std::vector<Run> runs_for(const Surface& f, std::uint64_t seed, Index n = 30)
{
  Rng rng(seed);
  const Matrix X = maximin_lhs(n, 2, seed, 20);
  const Vector y = f(X);
  std::normal_distribution<double> eps(0.0, 1e-3);
  std::vector<Run> runs;
  for (Index i = 0; i < n; ++i)
    for (int r = 0; r < 2; ++r)
      runs.push_back(Run{X.row(i).transpose(), y[i] + eps(rng)});
  return runs;
}

HetGPModel surrogate_of(const Surface& f, std::uint64_t seed)
{
  FitConfig cfg;
  cfg.seed = seed;
  return fit(aggregate(runs_for(f, seed)), cfg);
}
} // namespace

TEST_CASE("pick-freeze indices recover analytic values on exact surfaces")
{
  const SobolIndices a = sobol_indices(additive, 2, 10000, 1);
  CHECK(std::abs(a.S[0] - 0.5) < 0.05);
  CHECK(std::abs(a.S[1] - 0.5) < 0.05);
  CHECK(std::abs(a.T[0] - 0.5) < 0.05);
  CHECK(std::abs(a.T[1] - 0.5) < 0.05);
  CHECK((a.T - a.S).cwiseAbs().maxCoeff() < 0.05);

  const SobolIndices o = sobol_indices(only_first, 2, 10000, 2);
  CHECK(std::abs(o.S[1]) < 0.03);
  CHECK(std::abs(o.T[1]) < 0.03);
  CHECK(std::abs(o.S[0] - 1.0) < 0.05);

  const SobolIndices i = sobol_indices(interaction, 2, 10000, 3);
  CHECK(i.S.cwiseAbs().maxCoeff() < 0.1);
  CHECK((i.T.array() - 1.0).abs().maxCoeff() < 0.1);
}

TEST_CASE("constant surface is flagged degenerate with zero indices")
{
  const Surface flat = [](const Matrix& X) -> Vector { return Vector::Constant(X.rows(), 3.0); };
  const SobolIndices s = sobol_indices(flat, 3, 500, 1);
  CHECK(s.degenerate);
  CHECK(s.S.isZero());
  CHECK(s.T.isZero());
  const MainEffect me = main_effects(flat, 3, 1, Vector::LinSpaced(11, 0, 1), 200, 1);
  CHECK((me.value.array() - 3.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("main effects match analytic integrals and average to the global mean")
{
  const Vector grid = Vector::LinSpaced(21, 0.0, 1.0);
  const MainEffect m0 = main_effects(additive, 2, 0, grid, 2000, 4);
  // E[x1 + x2 | x1 = g] = g + 0.5
  CHECK((m0.value - (grid.array() + 0.5).matrix()).cwiseAbs().maxCoeff() < 0.01);
  Rng rng(9);
  const Matrix U = random_lhs(20000, 2, rng);
  CHECK(std::abs(m0.value.mean() - additive(U).mean()) < 0.01);
  CHECK_THROWS_AS(main_effects(additive, 2, 2, grid, 10, 1), InputError);
}

TEST_CASE("indices are reproducible under a seed")
{
  const SobolIndices a = sobol_indices(interaction, 2, 1000, 7), b = sobol_indices(interaction, 2, 1000, 7);
  CHECK(a.S_raw == b.S_raw);
  CHECK(a.T_raw == b.T_raw);
}

TEST_CASE("surrogate of x1 has identity and flat main effects")
{
  const HetGPModel m = surrogate_of(only_first, 11);
  const Vector grid = Vector::LinSpaced(11, 0.0, 1.0);
  const MainEffect m0 = main_effects(m, 0, grid, 2000, SensTarget::mean);
  const MainEffect m1 = main_effects(m, 1, grid, 2000, SensTarget::mean);
  CHECK((m0.value - grid).cwiseAbs().maxCoeff() < 0.05);
  CHECK((m1.value.array() - 0.5).abs().maxCoeff() < 0.05);
  const SobolIndices s = sobol_indices(m, 4000, SensTarget::mean, 1);
  CHECK(s.S[1] < 0.03);
  CHECK(s.T[1] < 0.03);
}

TEST_CASE("noise target runs the same estimator on the noise surface")
{
  const HetGPModel m = surrogate_of(additive, 12);
  const Surface noise = [&m](const Matrix& X) -> Vector { return m.predict(X).noise; };
  const SobolIndices a = sobol_indices(m, 800, SensTarget::noise, 5);
  const SobolIndices b = sobol_indices(noise, 2, 800, 5);
  CHECK(a.degenerate == b.degenerate);
  CHECK((a.S_raw - b.S_raw).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.T_raw - b.T_raw).cwiseAbs().maxCoeff() < 1e-12);
  const Vector grid = Vector::LinSpaced(5, 0.0, 1.0);
  const MainEffect ma = main_effects(m, 1, grid, 300, SensTarget::noise, 2);
  const MainEffect mb = main_effects(noise, 2, 1, grid, 300, 2);
  CHECK((ma.value - mb.value).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, mb.value.cwiseAbs().maxCoeff()));
}

TEST_CASE("bootstrap resample keeps replicate blocks and enough sites")
{
  const DesignSet data = aggregate(runs_for(additive, 3, 12));
  Rng rng(4);
  for (int k = 0; k < 20; ++k)
  {
    const DesignSet s = bootstrap_resample(data, rng);
    CHECK(s.n() >= 4);
    CHECK(s.total_runs() == data.total_runs());
    for (Index i = 0; i < s.n(); ++i)
    {
      const Index src = data.find(s.unique_x.row(i).transpose());
      REQUIRE(src >= 0);
      CHECK(s.counts[i] % data.counts[src] == 0);
    }
  }
  // two sites can never reach d + 2 = 4 distinct draws
  const DesignSet tiny = make_design((Matrix(2, 2) << 0.1, 0.2, 0.8, 0.9).finished(), {{1.0, 1.1}, {2.0, 2.1}});
  CHECK_THROWS_AS(bootstrap_resample(tiny, rng), InputError);
}

TEST_CASE("bootstrap proportions are exact counts and B = 1 equals one refit")
{
  const std::vector<Run> runs = runs_for(additive, 21, 16);
  SensitivityConfig cfg;
  cfg.n_mc = 400;
  cfg.grid = 5;
  cfg.bootstrap = 6;
  cfg.seed = 3;
  cfg.fit.n_starts = 2;
  const SensitivityReport rep = bootstrap_indices(runs, cfg);
  REQUIRE(rep.bootstrap.size() == 6);
  for (Index j = 0; j < 2; ++j)
  {
    int positive = 0;
    for (const BootstrapSample& s : rep.bootstrap)
      positive += s.I[j] > 0.0 ? 1 : 0;
    CHECK(rep.prop_I_positive[j] == static_cast<double>(positive) / 6.0);
    CHECK(rep.prop_I_positive[j] >= 0.0);
    CHECK(rep.prop_I_positive[j] <= 1.0);
  }

  cfg.bootstrap = 1;
  const SensitivityReport one = bootstrap_indices(runs, cfg);
  CHECK(one.bootstrap[0].S == rep.bootstrap[0].S);
  CHECK(one.bootstrap[0].T == rep.bootstrap[0].T);

  SensitivityConfig par = cfg;
  par.bootstrap = 6;
  par.jobs = 3;
  const SensitivityReport threaded = bootstrap_indices(runs, par);
  for (size_t b = 0; b < 6; ++b)
    CHECK(threaded.bootstrap[b].S == rep.bootstrap[b].S);
}

TEST_CASE("sensitivity CSV exports carry one row per entry")
{
  const HetGPModel m = surrogate_of(additive, 5);
  SensitivityConfig cfg;
  cfg.n_mc = 200;
  cfg.grid = 3;
  const SensitivityReport rep = analyze(m, cfg);
  const std::string me = main_effects_csv(rep), ix = indices_csv(rep);
  CHECK(std::count(me.begin(), me.end(), '\n') == 1 + 2 * 3);
  CHECK(std::count(ix.begin(), ix.end(), '\n') == 3);
  CHECK(me.rfind("target,input,x,effect\n", 0) == 0);
  SensitivityReport a = rep;
  a.prop_I_positive = (Vector(2) << 0.25, 1.0).finished();
  CHECK(proportions_csv({a}) == "process,x1,x2\nmean,0.25,1\n");
  CHECK_THROWS_AS(parse_target("both"), InputError);
}
