// Acceptance suite. `acceptance N` runs criterion N, `acceptance` runs all ten.
// Each criterion prints one line: "criterion N: PASS|FAIL <measurements>".

#include "oracles.hpp"

#include "hetbatch/backtrack.hpp"
#include "hetbatch/campaign.hpp"
#include "hetbatch/imspe.hpp"
#include "hetbatch/metrics.hpp"
#include "hetbatch/sensitivity.hpp"
#include "hetbatch/testbeds.hpp"

#include <chrono>
#include <csignal>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

using namespace hetbatch;
namespace fs = std::filesystem;

namespace
{
struct Verdict
{
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 3)
{
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("hetbatch_accept_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

HetGPModel random_model(Index n, Index d, std::uint64_t seed)
{
  const DesignSet data = oracle::random_design(n, d, 3, seed);
  return HetGPModel::from_params(data, oracle::random_params(data, seed + 1000));
}

// ---------------------------------------------------------------- 1
Verdict gradient_correctness()
{
  const auto t0 = Clock::now();
  int instances = 0, good = 0;
  double worst = 0.0;
  for (Index d : {1, 2, 4})
    for (Index M : {1, 3, 8})
      for (Index n : {5, 20})
        for (std::uint64_t rep = 0; rep < 3; ++rep)
        {
          const std::uint64_t seed = 1000 * static_cast<std::uint64_t>(d) + 100 * static_cast<std::uint64_t>(M) +
                                     static_cast<std::uint64_t>(n) + 7 * rep;
          const HetGPModel m = random_model(n, d, seed);
          const ImspeWorkspace ws = ImspeWorkspace::build(m);
          Rng rng(seed);
          const Matrix xt = random_lhs(M, d, rng);
          const Matrix g = imspe_batch_grad(ws, m, xt);
          const Vector x = Eigen::Map<const Vector>(xt.data(), M * d);
          const Vector fd = oracle::fd_gradient(
              [&](const Vector& v) { return oracle::dense_batch_imspe_ld(m, Eigen::Map<const Matrix>(v.data(), M, d)); },
              x, 1e-6);
          const Vector an = Eigen::Map<const Vector>(g.data(), M * d);
          const double rel = (an - fd).cwiseAbs().maxCoeff() / std::max(1e-6, fd.cwiseAbs().maxCoeff());
          worst = std::max(worst, rel);
          ++instances;
          good += rel < 1e-4 ? 1 : 0;
        }
  const double t = seconds_since(t0);
  return {good == instances && instances >= 50 && t < 60.0,
          std::to_string(good) + "/" + std::to_string(instances) + " instances within relative 1e-4 (worst " +
              fmt(worst) + "), " + fmt(t) + " s"};
}

// ---------------------------------------------------------------- 2
Verdict partition_inverse_oracles()
{
  const auto t0 = Clock::now();
  double worst_inv = 0.0, worst_dec = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed)
  {
    const Index d = 1 + static_cast<Index>(seed % 3), M = 1 + static_cast<Index>(seed % 5);
    const Index n = 5 + static_cast<Index>(seed % 16);
    const HetGPModel m = random_model(n, d, seed + 500);
    Rng rng(seed);
    const Matrix xt = random_lhs(M, d, rng);
    Vector mult = Vector::Ones(M);
    if (seed % 2 == 0)
      mult[0] = 2;

    const DesignSet& data = m.design();
    Matrix Xall(n + M, d);
    Xall << data.unique_x, xt;
    Vector rel(n + M);
    for (Index i = 0; i < n; ++i)
      rel[i] = std::exp(m.smoothed_log_lambda()[i]) / data.counts[i];
    const Vector ln = m.log_noise(xt);
    for (Index j = 0; j < M; ++j)
      rel[n + j] = std::exp(ln[j]) / mult[j];
    Matrix K = oracle::dense_cov(Xall, Xall, m.params().theta);
    K.diagonal() += rel;
    const Matrix dense_inv = K.inverse();
    worst_inv = std::max(worst_inv, (partitioned_inverse(m, xt, mult) - dense_inv).cwiseAbs().maxCoeff());

    const ImspeWorkspace ws = ImspeWorkspace::build(m);
    const double dense_current = oracle::dense_imspe(data.unique_x, rel.head(n), m.params().theta, m.nu());
    const double dense_after = oracle::dense_batch_imspe(m, xt, mult);
    const double dec = ws.imspe - imspe_batch(ws, m, xt, mult);
    worst_dec = std::max(worst_dec, std::abs(dec - (dense_current - dense_after)) / std::max(1.0, m.nu()));
  }
  const double t = seconds_since(t0);
  return {worst_inv <= 1e-8 && worst_dec <= 1e-9 && t < 60.0,
          "100 instances: block inverse max-abs " + fmt(worst_inv) + " (<= 1e-8), decrement error " +
              fmt(worst_dec) + " (<= 1e-9), " + fmt(t) + " s"};
}

// ---------------------------------------------------------------- 3
Verdict kernel_integral_oracle()
{
  const auto t0 = Clock::now();
  double worst_w = 0.0, worst_dw = 0.0;
  const double pts[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (double theta : {0.05, 0.5, 2.0})
    for (double a : pts)
      for (double b : pts)
      {
        worst_w = std::max(worst_w, std::abs(w_scalar(a, b, theta) - oracle::w_quad(a, b, theta)));
        // one-sided at the boundary so the stencil stays in [0,1]
        const double h = 1e-6;
        const double lo = std::max(0.0, a - h), hi = std::min(1.0, a + h);
        const double fd = (w_scalar(hi, b, theta) - w_scalar(lo, b, theta)) / (hi - lo);
        const double an = lo == a || hi == a ? 0.5 * (dw_scalar(lo, b, theta) + dw_scalar(hi, b, theta))
                                             : dw_scalar(a, b, theta);
        worst_dw = std::max(worst_dw, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
      }
  return {worst_w <= 1e-9 && worst_dw <= 1e-4,
          "75 grid points: w max error " + fmt(worst_w) + " (<= 1e-9), dw max error " + fmt(worst_dw) +
              " (<= 1e-4), " + fmt(seconds_since(t0)) + " s"};
}

// ---------------------------------------------------------------- 4
Verdict woodbury_likelihood()
{
  const auto t0 = Clock::now();
  double worst_val = 0.0, worst_grad = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
  {
    // n = 10 unique sites, N = 40 runs, uneven replication
    const Index d = 1 + static_cast<Index>(seed % 3);
    Rng rng(seed);
    const Matrix X = random_lhs(10, d, rng);
    std::vector<int> counts(10, 1);
    std::uniform_int_distribution<int> pick(0, 9);
    for (int extra = 0; extra < 30; ++extra)
      ++counts[static_cast<size_t>(pick(rng))];
    std::normal_distribution<double> eps(0.0, 1.0);
    std::vector<std::vector<double>> resp(10);
    for (Index i = 0; i < 10; ++i)
      for (int r = 0; r < counts[static_cast<size_t>(i)]; ++r)
        resp[static_cast<size_t>(i)].push_back(std::sin(4.0 * X.row(i).sum()) + (0.1 + 0.5 * X(i, 0)) * eps(rng));
    const DesignSet data = make_design(X, resp);
    const HetGPParams p = oracle::random_params(data, seed + 40);

    worst_val = std::max(worst_val, std::abs(loglik(p, data).total - oracle::full_n_loglik(p, data)) /
                                        std::max(1.0, std::abs(oracle::full_n_loglik(p, data))));
    const Vector g = loglik_gradient(p, data);
    const Vector fd = oracle::fd_gradient(
        [&](const Vector& v) { return oracle::full_n_loglik(oracle::unpack_het(v, d, data.n()), data); }, oracle::pack_het(p), 1e-5);
    worst_grad = std::max(worst_grad, (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()));
  }
  return {worst_grad <= 1e-5,
          "10 datasets (n=10, N=40): gradient vs full-N differences " + fmt(worst_grad) + " (<= 1e-5), value " +
              fmt(worst_val) + ", " + fmt(seconds_since(t0)) + " s"};
}

// ---------------------------------------------------------------- 5
Verdict toy1d_campaign()
{
  const auto t0 = Clock::now();
  // uniform average of r on [0,1] by the midpoint rule
  double r_uniform = 0.0;
  const int grid = 100000;
  for (int i = 0; i < grid; ++i)
    r_uniform += toy1d_noise((i + 0.5) / grid) / grid;

  int above = 0;
  std::vector<double> mult_gap;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
  {
    CampaignConfig c;
    c.d = 1;
    c.n0 = 12;
    c.reps_min = 1;
    c.reps_max = 3;
    c.M = 24;
    c.n_batches = 20;
    c.seed = seed;
    c.simulator.builtin = "toy1d";
    validate(c);
    CampaignOptions o;
    o.persist = false;
    const CampaignState st = run_campaign(c, o);

    // post-initial runs grouped by location
    std::map<double, int> acquired;
    for (const RunRecord& r : st.runs)
      if (r.batch > 0)
        ++acquired[r.x[0]];
    std::vector<std::pair<double, int>> sites; // (r(x), multiplicity)
    double mean_r = 0.0;
    for (const auto& [x, k] : acquired)
    {
      sites.emplace_back(toy1d_noise(x), k);
      mean_r += toy1d_noise(x);
    }
    mean_r /= static_cast<double>(sites.size());
    above += mean_r > r_uniform ? 1 : 0;

    std::sort(sites.begin(), sites.end());
    const size_t q = std::max<size_t>(1, sites.size() / 4);
    double bottom = 0.0, top = 0.0;
    for (size_t i = 0; i < q; ++i)
    {
      bottom += sites[i].second;
      top += sites[sites.size() - 1 - i].second;
    }
    mult_gap.push_back((top - bottom) / static_cast<double>(q));
    std::cerr << "  seed " << seed << ": mean r " << fmt(mean_r) << ", top/bottom quartile multiplicity "
              << fmt(top / q) << "/" << fmt(bottom / q) << ", n " << st.history.back().n << "\n";
  }
  const double gap = median(mult_gap), t = seconds_since(t0);
  return {above >= 18 && gap > 0.0 && t < 1800.0,
          "(a) " + std::to_string(above) + "/20 seeds above uniform r " + fmt(r_uniform) +
              " (need 18); (b) median top-minus-bottom quartile multiplicity " + fmt(gap) + " (need > 0); " +
              fmt(t) + " s"};
}

CampaignConfig toy2d_config(std::uint64_t seed, int n_batches)
{
  CampaignConfig c;
  c.d = 2;
  c.n0 = 20;
  c.reps_min = 5;
  c.reps_max = 5;
  c.M = 24;
  c.n_batches = n_batches;
  c.seed = seed;
  c.simulator.builtin = "toy2d";
  validate(c);
  return c;
}

// ---------------------------------------------------------------- 6
Verdict toy2d_mc()
{
  const auto t0 = Clock::now();
  const std::vector<BenchRow> rows =
      run_bench(toy2d_config(2024, 10), 10, {Strategy::backtracking, Strategy::no_backtracking}, 1, &std::cerr);
  std::map<int, BatchRecord> bt, nb;
  for (const BenchRow& r : rows)
    if (r.record.batch_index == 10)
      (r.strategy == strategy_name(Strategy::backtracking) ? bt : nb)[r.repetition] = r.record;
  int fewer = 0;
  std::vector<double> score_diff, rmspe_rel;
  for (const auto& [rep, b] : bt)
  {
    const BatchRecord& o = nb.at(rep);
    fewer += b.n < o.n ? 1 : 0;
    score_diff.push_back(b.score - o.score);
    rmspe_rel.push_back(std::abs(b.rmspe - o.rmspe) / o.rmspe);
    std::cerr << "  rep " << rep << ": n " << b.n << " vs " << o.n << ", score " << fmt(b.score) << " vs "
              << fmt(o.score) << ", rmspe " << fmt(b.rmspe) << " vs " << fmt(o.rmspe) << "\n";
  }
  const double sd = median(score_diff), rr = median(rmspe_rel), t = seconds_since(t0);
  return {fewer >= 7 && sd >= -0.1 && rr < 0.1 && t < 3600.0,
          "backtracking has fewer unique sites in " + std::to_string(fewer) +
              "/10 (need 7); median score difference " + fmt(sd) + " (need >= -0.1); median relative RMSPE gap " +
              fmt(rr) + " (need < 0.1); " + fmt(t) + " s"};
}

// ---------------------------------------------------------------- 7
Verdict changepoint_selector()
{
  const auto t0 = Clock::now();
  Rng rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const Index M = 24;
  int hits = 0;
  for (int rep = 0; rep < 200; ++rep)
  {
    // flat through b, then a degree-4 polynomial starting above the flat level
    const Index b = 1 + static_cast<Index>(u(rng) * (M - 6));
    const double level = 5.0 * u(rng), jump = 0.1 + 0.2 * u(rng);
    double a[5] = {jump, u(rng), u(rng), u(rng), 0.2 + u(rng)};
    Vector y(M + 1);
    for (Index s = 0; s <= M; ++s)
    {
      const double t = s <= b ? 0.0 : static_cast<double>(s - b) / static_cast<double>(M - b);
      double p = 0.0;
      for (int k = 4; k >= 0; --k)
        p = p * t + a[k];
      y[s] = level + (s <= b ? 0.0 : p);
    }
    const double range = y.maxCoeff() - y.minCoeff();
    for (Index s = 0; s <= M; ++s)
      y[s] += 0.01 * range * z(rng);
    hits += changepoint_select(y) == b ? 1 : 0;
  }
  int fallback = 0;
  for (int rep = 0; rep < 200; ++rep)
  {
    Vector y(M + 1);
    y[0] = 10.0 * u(rng);
    for (Index s = 1; s <= M; ++s)
      y[s] = y[s - 1] - (0.01 + u(rng));
    fallback += changepoint_fit(y).fallback ? 1 : 0;
  }
  return {hits >= 180 && fallback == 200,
          std::to_string(hits) + "/200 breaks recovered (need 180); " + std::to_string(fallback) +
              "/200 decreasing traces use the fallback (need 200); " + fmt(seconds_since(t0)) + " s"};
}

// ---------------------------------------------------------------- 8
std::vector<Run> sampled_runs(const Surface& f, std::uint64_t seed)
{
  Rng rng(seed);
  const Matrix X = maximin_lhs(30, 2, seed, 20);
  const Vector y = f(X);
  std::normal_distribution<double> eps(0.0, 1e-3);
  std::vector<Run> runs;
  for (Index i = 0; i < X.rows(); ++i)
    for (int r = 0; r < 2; ++r)
      runs.push_back(Run{X.row(i).transpose(), y[i] + eps(rng)});
  return runs;
}

Verdict sensitivity_oracles()
{
  const auto t0 = Clock::now();
  const Surface additive = [](const Matrix& X) -> Vector { return X.col(0) + X.col(1); };
  const Surface only_first = [](const Matrix& X) -> Vector { return X.col(0); };
  const Surface interaction = [](const Matrix& X) -> Vector {
    return ((X.col(0).array() - 0.5) * (X.col(1).array() - 0.5)).matrix();
  };
  FitConfig fc;
  fc.seed = 3;
  auto indices = [&](const Surface& f, std::uint64_t seed) {
    const HetGPModel m = fit(aggregate(sampled_runs(f, seed)), fc);
    return sobol_indices(m, 10000, SensTarget::mean, seed);
  };
  const SobolIndices a = indices(additive, 1), o = indices(only_first, 2), i = indices(interaction, 3);
  const double err_a = std::max((a.S.array() - 0.5).abs().maxCoeff(), (a.T.array() - 0.5).abs().maxCoeff());
  const double err_o = std::max(std::abs(o.S[1]), std::abs(o.T[1]));
  const double err_i = std::max(i.S.cwiseAbs().maxCoeff(), (i.T.array() - 1.0).abs().maxCoeff());

  SensitivityConfig sc;
  sc.n_mc = 10000;
  sc.grid = 11;
  sc.bootstrap = 100;
  sc.seed = 4;
  sc.fit = fc;
  const SensitivityReport rep = bootstrap_indices(sampled_runs(interaction, 4), sc);
  const double prop = rep.prop_I_positive.minCoeff();
  const double t = seconds_since(t0);
  return {err_a <= 0.05 && err_o <= 0.03 && err_i <= 0.1 && prop > 0.9 && t < 600.0,
          "additive error " + fmt(err_a) + " (<= 0.05), single-input error " + fmt(err_o) +
              " (<= 0.03), interaction error " + fmt(err_i) + " (<= 0.1), min prop I > 0 at B=100 " + fmt(prop) +
              " (> 0.9), " + fmt(t) + " s"};
}

// ---------------------------------------------------------------- 9
/// Unique initial sites, and every run input acquired afterwards (replicates included).
std::pair<Matrix, Matrix> old_and_new(const CampaignState& st)
{
  std::set<std::vector<double>> old_set;
  std::vector<Vector> fresh;
  for (const RunRecord& r : st.runs)
  {
    if (r.batch == 0)
      old_set.insert(std::vector<double>(r.x.data(), r.x.data() + r.x.size()));
    else
      fresh.push_back(r.x);
  }
  const Index d = st.config.d;
  Matrix old_x(static_cast<Index>(old_set.size()), d), new_x(static_cast<Index>(fresh.size()), d);
  Index i = 0;
  for (const auto& v : old_set)
    old_x.row(i++) = Eigen::Map<const RowVector>(v.data(), d);
  for (size_t j = 0; j < fresh.size(); ++j)
    new_x.row(static_cast<Index>(j)) = fresh[j].transpose();
  return {old_x, new_x};
}

Verdict distance_diagnostic()
{
  const auto t0 = Clock::now();
  int closer = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
  {
    CampaignConfig c = toy2d_config(seed, 2);
    c.metrics_test_size = 0;
    CampaignOptions o;
    o.persist = false;
    const CampaignState imspe = run_campaign(c, o);
    c.strategy = Strategy::maximin;
    const CampaignState maximin = run_campaign(c, o);
    const auto [old_i, new_i] = old_and_new(imspe);
    const auto [old_m, new_m] = old_and_new(maximin);
    const double mi = median(pairwise_distance_diag(old_i, new_i).new_old);
    const double mm = median(pairwise_distance_diag(old_m, new_m).new_old);
    closer += mi < mm ? 1 : 0;
    std::cerr << "  seed " << seed << ": new-old median " << fmt(mi) << " (IMSPE) vs " << fmt(mm) << " (maximin)\n";
  }
  const double t = seconds_since(t0);
  return {closer >= 16 && t < 1200.0,
          "IMSPE batches closer to the existing design in " + std::to_string(closer) + "/20 seeds (need 16); " +
              fmt(t) + " s"};
}

// ---------------------------------------------------------------- 10
/// Starts the CLI campaign, kills it once `batches` batches are on disk, then resumes it.
bool kill_and_resume(const fs::path& cfg, const fs::path& out, int batches)
{
  const pid_t pid = ::fork();
  if (pid == 0)
  {
    const int devnull = ::open("/dev/null", O_WRONLY);
    ::dup2(devnull, 1);
    ::dup2(devnull, 2);
    ::execl(HETBATCH_CLI, HETBATCH_CLI, "campaign", "--config", cfg.c_str(), "--out", out.c_str(),
            static_cast<char*>(nullptr));
    ::_exit(127);
  }
  const fs::path hist = out / "history.csv";
  for (;;)
  {
    int status = 0;
    if (::waitpid(pid, &status, WNOHANG) == pid)
      return false; // finished before it could be interrupted
    const std::string h = slurp(hist);
    if (std::count(h.begin(), h.end(), '\n') >= 1 + batches)
      break;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ::kill(pid, SIGKILL);
  ::waitpid(pid, nullptr, 0);
  const std::string cmd = std::string("'") + HETBATCH_CLI + "' campaign --resume --out '" + out.string() + "' > /dev/null 2>&1";
  return std::system(cmd.c_str()) == 0;
}

Verdict determinism_and_resume()
{
  const auto t0 = Clock::now();
  const fs::path dir = scratch("c10");
  bool identical = true, in_process = true, killed = true;
  std::string notes;
  for (const char* bed : {"toy1d", "toy2d"})
  {
    CampaignConfig c = std::string(bed) == "toy1d" ? CampaignConfig{} : toy2d_config(5, 6);
    if (std::string(bed) == "toy1d")
    {
      c.n0 = 12;
      c.M = 12;
      c.n_batches = 6;
      c.seed = 5;
    }
    c.record_wall_time = false;
    c.metrics_test_size = 200;
    validate(c);

    c.output_dir = (dir / (std::string(bed) + "_a")).string();
    run_campaign(c);
    c.output_dir = (dir / (std::string(bed) + "_b")).string();
    run_campaign(c);
    const std::string ref = slurp(dir / (std::string(bed) + "_a") / "history.csv");
    const std::string ref_runs = slurp(dir / (std::string(bed) + "_a") / "runs.csv");
    identical = identical && ref == slurp(dir / (std::string(bed) + "_b") / "history.csv") &&
                ref_runs == slurp(dir / (std::string(bed) + "_b") / "runs.csv");

    // interrupted in-process after batch 2, resumed from disk
    c.output_dir = (dir / (std::string(bed) + "_stop")).string();
    CampaignOptions stop;
    stop.stop_after = 2;
    run_campaign(c, stop);
    resume_campaign(c.output_dir);
    in_process = in_process && slurp(fs::path(c.output_dir) / "history.csv") == ref &&
                 slurp(fs::path(c.output_dir) / "runs.csv") == ref_runs;

    // the CLI process killed mid-campaign, then resumed
    const fs::path cfg = dir / (std::string(bed) + ".cfg");
    std::ofstream(cfg) << to_text(c);
    const fs::path out = dir / (std::string(bed) + "_kill");
    const bool ran = kill_and_resume(cfg, out, 2);
    killed = killed && ran && slurp(out / "history.csv") == ref && slurp(out / "runs.csv") == ref_runs;
  }
  fs::remove_all(dir);
  return {identical && in_process && killed,
          std::string("repeat runs byte-identical: ") + (identical ? "yes" : "no") +
              "; stop-and-resume matches: " + (in_process ? "yes" : "no") +
              "; killed CLI resumed to the same trajectory: " + (killed ? "yes" : "no") + "; " +
              fmt(seconds_since(t0)) + " s"};
}
} // namespace

int main(int argc, char** argv)
{
  const std::vector<std::function<Verdict()>> criteria = {
      gradient_correctness, partition_inverse_oracles, kernel_integral_oracle, woodbury_likelihood,
      toy1d_campaign,       toy2d_mc,                  changepoint_selector,   sensitivity_oracles,
      distance_diagnostic,  determinism_and_resume};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i)
    which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (int i = 1; i <= 10; ++i)
      which.push_back(i);

  bool all = true;
  for (int k : which)
  {
    if (k < 1 || k > 10)
    {
      std::cerr << "unknown criterion " << k << "\n";
      return 2;
    }
    Verdict v;
    try
    {
      v = criteria[static_cast<size_t>(k - 1)]();
    }
    catch (const std::exception& e)
    {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::cout << "criterion " << k << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.detail << std::endl;
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
