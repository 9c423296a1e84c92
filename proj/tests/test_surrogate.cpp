#include "oracles.hpp"

#include "hetbatch/design_set.hpp"
#include "hetbatch/hetgp.hpp"
#include "hetbatch/lbfgsb.hpp"
#include "hetbatch/snapshot.hpp"
#include "hetbatch/testbeds.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <functional>

using namespace hetbatch;

TEST_CASE("aggregate pools exact duplicates and keeps first-appearance order")
{
  std::vector<Run> runs = {{Vector::Constant(1, 0.5), 1.0}, {Vector::Constant(1, 0.2), 4.0},
                           {Vector::Constant(1, 0.5), 3.0}, {Vector::Constant(1, 0.5), 5.0}};
  const DesignSet ds = aggregate(runs);
  REQUIRE(ds.n() == 2);
  CHECK(ds.unique_x(0, 0) == 0.5);
  CHECK(ds.counts[0] == 3);
  CHECK(ds.mean_y[0] == doctest::Approx(3.0));
  CHECK(ds.ss_y[0] == doctest::Approx(8.0));
  CHECK(ds.ss_y[1] == 0.0);
  CHECK(ds.total_runs() == 4);
  const auto back = expand(ds);
  CHECK(back.size() == 4);
  CHECK(back[1].y == 3.0);
}

TEST_CASE("aggregate rejects bad input")
{
  CHECK_THROWS_AS(aggregate(std::vector<Run>{}), InputError);
  std::vector<Run> nan_y = {{Vector::Constant(1, 0.5), std::nan("")}};
  CHECK_THROWS_AS(aggregate(nan_y), InputError);
  std::vector<Run> mixed = {{Vector::Constant(1, 0.5), 1.0}, {Vector::Constant(2, 0.5), 1.0}};
  CHECK_THROWS_AS(aggregate(mixed), InputError);
}

TEST_CASE("merge_runs appends replicates to existing uniques")
{
  const DesignSet base = oracle::random_design(5, 2, 2, 1);
  std::vector<Run> extra = {{base.unique_x.row(3).transpose(), 0.7}, {Vector::Constant(2, 0.123), 0.1}};
  const DesignSet m = merge_runs(base, extra);
  CHECK(m.n() == 6);
  CHECK(m.counts[3] == base.counts[3] + 1);
  CHECK(m.total_runs() == base.total_runs() + 2);
}

TEST_CASE("replicate-form likelihood equals the full-N likelihood")
{
  for (std::uint64_t seed = 1; seed <= 6; ++seed)
  {
    const DesignSet data = oracle::random_design(10, 2, 5, seed);
    const HetGPParams p = oracle::random_params(data, seed + 100);
    const double nform = loglik(p, data).total;
    const double full = oracle::full_n_loglik(p, data);
    CHECK(nform == doctest::Approx(full).epsilon(1e-9));
  }
}

TEST_CASE("analytic likelihood gradient matches finite differences")
{
  for (std::uint64_t seed = 1; seed <= 4; ++seed)
  {
    const Index d = 1 + static_cast<Index>(seed % 3);
    const DesignSet data = oracle::random_design(9, d, 4, seed);
    const HetGPParams p = oracle::random_params(data, seed + 7);
    const Vector g = loglik_gradient(p, data);
    const Vector x = oracle::pack_het(p);
    const Vector fd = oracle::fd_gradient(
        [&](const Vector& v) { return loglik(oracle::unpack_het(v, d, data.n()), data).total; }, x, 1e-5);
    CHECK((g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()) < 1e-5);
  }
}

TEST_CASE("homoskedastic gradient matches finite differences")
{
  const DesignSet data = oracle::random_design(8, 2, 3, 21);
  HetGPParams p;
  p.theta = (Vector(2) << 0.3, 0.7).finished();
  p.theta_noise = p.theta;
  p.log_delta = Vector::Constant(data.n(), std::log(0.05));
  const Vector g = loglik_gradient(p, data, true);
  REQUIRE(g.size() == 3);
  Vector x(3);
  x << p.theta.array().log().matrix(), p.log_delta[0];
  const Vector fd = oracle::fd_gradient(
      [&](const Vector& v) {
        HetGPParams q = p;
        q.theta = v.head(2).array().exp();
        q.log_delta.setConstant(v[2]);
        return loglik(q, data, true).total;
      },
      x, 1e-5);
  CHECK((g - fd).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("constant latent field gives constant smoothed noise")
{
  const DesignSet data = oracle::random_design(8, 2, 3, 4);
  HetGPParams p = oracle::random_params(data, 5);
  p.log_delta.setConstant(-2.0);
  const HetGPModel m = HetGPModel::from_params(data, p);
  CHECK((m.smoothed_log_lambda().array() + 2.0).abs().maxCoeff() < 1e-10);
  Rng rng(1);
  const Matrix T = random_lhs(20, 2, rng);
  CHECK((m.log_noise(T).array() + 2.0).abs().maxCoeff() < 1e-10);
  CHECK(std::abs(m.dlog_noise(T.row(0).transpose(), 1)) < 1e-10);
}

TEST_CASE("smoothed log noise matches the direct formula and its derivative")
{
  const DesignSet data = oracle::random_design(9, 2, 3, 8);
  const HetGPParams p = oracle::random_params(data, 9);
  const HetGPModel m = HetGPModel::from_params(data, p);
  CHECK((m.smoothed_log_lambda() - oracle::smoothed_log_lambda(p, data)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((m.log_noise(data.unique_x) - m.smoothed_log_lambda()).cwiseAbs().maxCoeff() < 1e-9);
  const Vector x = (Vector(2) << 0.4, 0.6).finished();
  for (Index pp = 0; pp < 2; ++pp)
  {
    Vector a = x, b = x;
    a[pp] += 1e-6;
    b[pp] -= 1e-6;
    const double fd = (m.log_noise(a.transpose())[0] - m.log_noise(b.transpose())[0]) / 2e-6;
    CHECK(m.dlog_noise(x, pp) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("prediction matches a dense kriging computation")
{
  const DesignSet data = oracle::random_design(8, 1, 3, 12);
  const HetGPParams p = oracle::random_params(data, 13);
  const HetGPModel m = HetGPModel::from_params(data, p);
  const Standardization s = standardize(data);
  Matrix K = oracle::dense_cov(data.unique_x, data.unique_x, p.theta);
  const Vector lam = oracle::smoothed_log_lambda(p, data).array().exp();
  for (Index i = 0; i < data.n(); ++i)
    K(i, i) += lam[i] / data.counts[i];
  Matrix T(3, 1);
  T << 0.1, 0.55, 0.93;
  const Matrix k = oracle::dense_cov(T, data.unique_x, p.theta);
  const Vector ybar = (data.mean_y.array() - s.center) / s.scale;
  const Vector mu = (k * K.inverse() * ybar).array() * s.scale + s.center;
  const Prediction pr = m.predict(T);
  CHECK((pr.mean - mu).cwiseAbs().maxCoeff() < 1e-8);
  for (Index j = 0; j < 3; ++j)
  {
    const double v = m.nu() * (1.0 - (k.row(j) * K.inverse() * k.row(j).transpose())(0));
    CHECK(pr.var_mean[j] == doctest::Approx(std::max(v, 0.0)).epsilon(1e-8));
  }
  CHECK((pr.noise.array() > 0).all());
}

TEST_CASE("fit improves on its starting likelihood and respects bounds")
{
  const DesignSet data = oracle::random_design(14, 1, 4, 30);
  FitConfig cfg;
  cfg.seed = 9;
  const HetGPModel m = fit(data, cfg);
  CHECK(std::isfinite(m.likelihood().total));
  CHECK((m.params().theta.array() >= cfg.theta_min - 1e-12).all());
  CHECK((m.params().theta.array() <= cfg.theta_max + 1e-12).all());
  CHECK(m.params().g_noise >= cfg.g_min - 1e-12);
  const HetGPParams p0 = oracle::random_params(data, 1);
  CHECK(m.likelihood().total >= loglik(p0, data).total);
  // fitted parameters are stationary within the box
  const Vector g = loglik_gradient(m.params(), data);
  CHECK(std::isfinite(g.norm()));
}

TEST_CASE("fit is deterministic under a fixed seed")
{
  const DesignSet data = oracle::random_design(10, 2, 3, 31);
  FitConfig cfg;
  cfg.seed = 4;
  const HetGPModel a = fit(data, cfg), b = fit(data, cfg);
  CHECK(a.fingerprint() == b.fingerprint());
}

TEST_CASE("fit refuses too few sites and unreplicated data")
{
  const DesignSet small = oracle::random_design(3, 2, 2, 2);
  CHECK_THROWS_AS(fit(small, FitConfig{}), InputError);
  Rng rng(2);
  const Matrix X = random_lhs(6, 1, rng);
  std::vector<std::vector<double>> resp;
  for (Index i = 0; i < 6; ++i)
    resp.push_back({std::sin(6 * X(i, 0))});
  const DesignSet single = make_design(X, resp);
  CHECK_THROWS_AS(fit(single, FitConfig{}), InputError);
  FitConfig homo;
  homo.allow_homoskedastic = true;
  const HetGPModel m = fit(single, homo);
  CHECK(m.homoskedastic());
}

TEST_CASE("refit from a fitted model's parameters does not lose likelihood")
{
  const DesignSet data = oracle::random_design(12, 1, 3, 40);
  FitConfig cfg;
  cfg.seed = 2;
  const HetGPModel m = fit(data, cfg);
  FitConfig warm_only = cfg;
  warm_only.n_starts = 1;
  const HetGPModel again = fit(data, warm_only, m.params());
  CHECK(again.likelihood().total >= m.likelihood().total - 1e-8);
}

TEST_CASE("update pools new runs and extends the latent field")
{
  const DesignSet data = oracle::random_design(10, 1, 3, 50);
  FitConfig cfg;
  cfg.seed = 1;
  const HetGPModel m = fit(data, cfg);
  std::vector<Run> extra = {{data.unique_x.row(0).transpose(), 0.3}, {Vector::Constant(1, 0.999), 1.0}};
  const HetGPModel u = update(m, extra, cfg);
  CHECK(u.n() == 11);
  CHECK(u.design().total_runs() == data.total_runs() + 2);
}

TEST_CASE("factor_spd climbs the jitter ladder and then fails")
{
  Matrix K = Matrix::Ones(3, 3);
  CHECK_NOTHROW(factor_spd(K));
  Matrix bad = -Matrix::Identity(2, 2);
  CHECK_THROWS_AS(factor_spd(bad), NumericalError);
}

TEST_CASE("snapshot round trip is bit exact")
{
  const DesignSet data = oracle::random_design(9, 2, 3, 60);
  FitConfig cfg;
  cfg.seed = 3;
  cfg.n_starts = 2;
  const HetGPModel m = fit(data, cfg);
  const auto path = (std::filesystem::temp_directory_path() / "hetbatch_snapshot_test.json").string();
  save_model(m, path);
  const HetGPModel r = load_model(path);
  CHECK(r.fingerprint() == m.fingerprint());
  CHECK(r.likelihood().total == m.likelihood().total);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(model_from_json(nlohmann::json::parse("{\"format\":\"other\"}")), InputError);
}

TEST_CASE("box quasi-Newton solves a bounded quadratic and Rosenbrock")
{
  auto quad = [](const Vector& x, Vector& g) {
    g = 2.0 * (x - Vector::Constant(x.size(), 2.0));
    return (x.array() - 2.0).square().sum();
  };
  const BoxQnResult r = minimize_box(quad, Vector::Zero(3), Vector::Constant(3, -1.0), Vector::Constant(3, 1.0));
  CHECK((r.x.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(r.converged);

  auto rosen = [](const Vector& x, Vector& g) {
    g.resize(2);
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  BoxQnOptions o;
  o.max_iter = 500;
  const BoxQnResult s = minimize_box(rosen, (Vector(2) << -1.2, 1.0).finished(), Vector::Constant(2, -2.0),
                                     Vector::Constant(2, 2.0), o);
  CHECK((s.x.array() - 1.0).abs().maxCoeff() < 1e-4);
}

namespace
{
double smoothed_noise_ratio(const HetGPModel& m)
{
  const Matrix grid = Vector::LinSpaced(101, 0.0, 1.0);
  const Vector r = m.predict(grid).noise;
  return r.maxCoeff() / r.minCoeff();
}

DesignSet replicated_1d(Index n, int reps, std::uint64_t seed, const std::function<double(double, Rng&)>& draw)
{
  Rng rng(seed);
  const Matrix X = random_lhs(n, 1, rng);
  std::vector<std::vector<double>> resp(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (int r = 0; r < reps; ++r)
      resp[static_cast<size_t>(i)].push_back(draw(X(i, 0), rng));
  return make_design(X, resp);
}
} // namespace

TEST_CASE("constant signal with iid noise gives a nearly flat noise surface")
{
  std::vector<double> ratios;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
  {
    const DesignSet data = replicated_1d(30, 3, seed, [](double, Rng& rng) {
      return 2.0 + std::normal_distribution<double>(0.0, 0.5)(rng);
    });
    FitConfig cfg;
    cfg.seed = seed;
    ratios.push_back(smoothed_noise_ratio(fit(data, cfg)));
  }
  std::nth_element(ratios.begin(), ratios.begin() + 10, ratios.end());
  CHECK(ratios[10] < 3.0);
}

TEST_CASE("1d toy noise surface separates the loud and quiet regions")
{
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
  {
    const DesignSet data = replicated_1d(50, 5, 100 + seed, [](double x, Rng& rng) { return toy1d(x, rng); });
    FitConfig cfg;
    cfg.seed = seed;
    const HetGPModel m = fit(data, cfg);
    Matrix at(2, 1);
    at << 0.25, 0.75;
    const Vector r = m.predict(at).noise;
    hits += r[0] / r[1] > 10.0 ? 1 : 0;
  }
  CHECK(hits >= 16);
}

TEST_CASE("prediction at a replicated site approaches its mean as replication grows")
{
  Rng rng(12);
  const Matrix X = random_lhs(8, 1, rng);
  HetGPParams p;
  p.theta = Vector::Constant(1, 0.1);
  p.theta_noise = p.theta;
  p.g_noise = 0.1;
  p.log_delta = Vector::Constant(8, std::log(0.3));
  std::vector<double> gaps;
  for (int a : {1, 5, 25})
  {
    std::vector<std::vector<double>> resp(8);
    for (Index i = 0; i < 8; ++i)
    {
      const double f = std::sin(7.0 * X(i, 0));
      resp[static_cast<size_t>(i)] = {f - 0.4, f + 0.4};
    }
    // site 0 gets `a` replicates with mean 1.5 and a fixed spread
    resp[0].clear();
    for (int r = 0; r < a; ++r)
      resp[0].push_back(1.5 + (r % 2 == 0 ? 0.2 : -0.2) * (a % 2 == 1 && r == a - 1 ? 0.0 : 1.0));
    const DesignSet data = make_design(X, resp);
    const HetGPModel m = HetGPModel::from_params(data, p, false);
    gaps.push_back(std::abs(m.predict(X.topRows(1)).mean[0] - data.mean_y[0]));
  }
  CHECK(gaps[1] < gaps[0]);
  CHECK(gaps[2] < gaps[1]);
}

TEST_CASE("predicted noise is positive and far-field variance approaches the process scale")
{
  const DesignSet data = oracle::random_design(10, 1, 3, 60);
  HetGPParams p = oracle::random_params(data, 3);
  p.theta = Vector::Constant(1, 1e-4);
  const HetGPModel m = HetGPModel::from_params(data, p, false);
  const Matrix grid = Vector::LinSpaced(100, 0.0, 1.0);
  const Prediction pr = m.predict(grid);
  CHECK((pr.noise.array() > 0.0).all());
  double best_gap = 1.0;
  for (Index i = 0; i < 100; ++i)
    best_gap = std::min(best_gap, 1.0 - pr.var_mean[i] / m.nu());
  CHECK(best_gap < 1e-6);
}
