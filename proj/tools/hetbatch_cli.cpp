#include "hetbatch/backtrack.hpp"
#include "hetbatch/campaign.hpp"
#include "hetbatch/config.hpp"
#include "hetbatch/lhs.hpp"
#include "hetbatch/metrics.hpp"
#include "hetbatch/runlog.hpp"
#include "hetbatch/sensitivity.hpp"
#include "hetbatch/snapshot.hpp"
#include "hetbatch/testbeds.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace hetbatch;
namespace fs = std::filesystem;

namespace
{
enum Exit
{
  kOk = 0,
  kConfig = 2,
  kSimulator = 3,
  kNumerical = 4,
};

struct Common
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
  bool resume = false;
};

void add_common(CLI::App* sub, Common& c)
{
  sub->add_option("--config", c.config, "config file (key = value lines)");
  sub->add_option("--seed", c.seed, "base seed; overrides the config");
  sub->add_option("--jobs", c.jobs, "worker threads");
  sub->add_option("--out", c.out, "output directory; overrides output_dir");
  sub->add_option("--set", c.overrides, "key=value override, repeatable");
}

/// Config file, then --set, then the dedicated flags. Validated before any compute.
CampaignConfig build_config(const Common& c)
{
  CampaignConfig cfg = c.config.empty() ? CampaignConfig{} : load_config(c.config);
  for (const std::string& o : c.overrides)
    apply_override(cfg, o);
  if (c.seed)
    cfg.seed = *c.seed;
  if (c.jobs)
    apply_setting(cfg, "jobs", std::to_string(*c.jobs));
  if (c.out)
    cfg.output_dir = *c.out;
  validate(cfg);
  return cfg;
}

std::string out_path(const CampaignConfig& cfg, const std::string& name)
{
  fs::create_directories(cfg.output_dir);
  return (fs::path(cfg.output_dir) / name).string();
}

HetGPModel model_for(const CampaignConfig& cfg)
{
  if (!cfg.model.empty())
    return load_model(cfg.model);
  if (fs::exists(fs::path(cfg.output_dir) / "state.json"))
    return load_state(cfg.output_dir).model;
  throw InputError("no model: set model=<snapshot.json> or point --out at a campaign directory");
}

FitConfig fit_config(const CampaignConfig& cfg)
{
  FitConfig f = cfg.fit;
  f.seed = cfg.seed;
  return f;
}

int cmd_fit(const CampaignConfig& cfg)
{
  if (cfg.run_log.empty())
    throw InputError("fit: run_log is not set");
  const DesignSet data = aggregate(read_run_log(cfg.run_log));
  std::optional<HetGPParams> warm;
  if (!cfg.model.empty())
  {
    const HetGPModel start = load_model(cfg.model);
    if (start.n() == data.n() && start.dim() == data.dim())
      warm = start.params();
  }
  const HetGPModel m = fit(data, fit_config(cfg), warm);
  save_model(m, out_path(cfg, "model.json"));

  std::ostringstream os;
  os << std::setprecision(17) << "quantity,value\n";
  os << "loglik," << m.likelihood().total << "\n";
  os << "n," << m.n() << "\nN," << m.design().total_runs() << "\n";
  os << "homoskedastic," << (m.homoskedastic() ? 1 : 0) << "\n";
  for (Index k = 0; k < m.dim(); ++k)
    os << "theta" << k + 1 << "," << m.params().theta[k] << "\n";
  for (Index k = 0; k < m.dim(); ++k)
    os << "theta_noise" << k + 1 << "," << m.params().theta_noise[k] << "\n";
  os << "g_noise," << m.params().g_noise << "\n";
  os << "tau2," << m.tau2() << "\ntau2_noise," << m.tau2_noise() << "\nnu," << m.nu() << "\n";
  write_file_atomic(out_path(cfg, "fit.csv"), os.str());
  std::cout << "loglik " << m.likelihood().total << ", n = " << m.n() << ", N = " << m.design().total_runs() << "\n";
  return kOk;
}

int cmd_propose(const CampaignConfig& cfg)
{
  const HetGPModel m = model_for(cfg);
  AcquisitionConfig acq = cfg.acquisition;
  acq.seed = cfg.seed;
  const BatchProposal prop = optimize_batch(m, cfg.M, acq);
  const MergeTrace trace = merge_sequence(m, prop.xtil);
  Index s_hat = 0;
  bool fallback = false;
  if (cfg.strategy == Strategy::backtracking)
  {
    const ChangepointFit cp = changepoint_fit(trace.imspe_values());
    s_hat = cp.s_hat;
    fallback = cp.fallback;
  }
  const std::vector<BatchSite> batch = select_batch(trace, s_hat);

  std::ostringstream os;
  os << std::setprecision(17);
  for (Index k = 0; k < m.dim(); ++k)
    os << "x" << k + 1 << ",";
  os << "multiplicity,existing_site,fused\n";
  for (const BatchSite& s : batch)
  {
    for (Index k = 0; k < m.dim(); ++k)
      os << s.x[k] << ",";
    os << s.multiplicity << "," << s.existing << "," << (s.fused ? 1 : 0) << "\n";
  }
  write_file_atomic(out_path(cfg, "batch.csv"), os.str());
  write_file_atomic(out_path(cfg, "trace.csv"), trace_csv(trace));
  std::ostringstream sel;
  sel << std::setprecision(17) << "s_hat,fallback,imspe_raw,imspe_selected\n"
      << s_hat << "," << (fallback ? 1 : 0) << "," << trace.candidates.front().imspe << ","
      << trace.candidates[static_cast<size_t>(s_hat)].imspe << "\n";
  write_file_atomic(out_path(cfg, "selection.csv"), sel.str());
  std::cout << batch.size() << " sites for " << cfg.M << " runs (s_hat = " << s_hat << ")\n";
  return kOk;
}

int cmd_campaign(const CampaignConfig& cfg, bool resume, std::optional<int> n_batches = std::nullopt)
{
  CampaignOptions opts;
  opts.log = &std::cerr;
  const CampaignState st = resume ? resume_campaign(cfg.output_dir, opts, n_batches) : run_campaign(cfg, opts);
  const BatchRecord& last = st.history.back();
  std::cout << "batch " << last.batch_index << ": N = " << last.N << ", n = " << last.n << ", rmspe = " << last.rmspe
            << ", score = " << last.score << "\n";
  return kOk;
}

int cmd_sens(const CampaignConfig& cfg)
{
  std::vector<SensTarget> targets;
  if (cfg.sens_target == "both")
    targets = {SensTarget::mean, SensTarget::noise};
  else
    targets = {parse_target(cfg.sens_target)};

  std::vector<Run> runs;
  std::optional<HetGPModel> model;
  if (!cfg.run_log.empty())
    runs = read_run_log(cfg.run_log);
  else
  {
    model = model_for(cfg);
    runs = expand(model->design());
  }

  std::vector<SensitivityReport> reports;
  for (SensTarget t : targets)
  {
    SensitivityConfig sc;
    sc.grid = cfg.sens_grid;
    sc.n_mc = cfg.sens_n_mc;
    sc.bootstrap = cfg.sens_bootstrap;
    sc.target = t;
    sc.seed = cfg.seed;
    sc.jobs = cfg.jobs;
    sc.fit = fit_config(cfg);
    if (sc.bootstrap > 0)
      reports.push_back(bootstrap_indices(runs, sc));
    else
    {
      if (!model)
        model = fit(aggregate(runs), sc.fit);
      reports.push_back(analyze(*model, sc));
    }
  }

  // one file per export, targets stacked under a single header
  auto stack = [&](const std::function<std::string(const SensitivityReport&)>& f) {
    std::string all;
    for (size_t i = 0; i < reports.size(); ++i)
    {
      const std::string part = f(reports[i]);
      all += i == 0 ? part : part.substr(part.find('\n') + 1);
    }
    return all;
  };
  write_file_atomic(out_path(cfg, "main_effects.csv"), stack(main_effects_csv));
  write_file_atomic(out_path(cfg, "indices.csv"), stack(indices_csv));
  if (cfg.sens_bootstrap > 0)
  {
    write_file_atomic(out_path(cfg, "bootstrap.csv"), stack(bootstrap_csv));
    write_file_atomic(out_path(cfg, "proportions.csv"), proportions_csv(reports));
  }
  for (const SensitivityReport& r : reports)
  {
    std::cout << target_name(r.target) << ":";
    for (Index j = 0; j < r.indices.S.size(); ++j)
      std::cout << " x" << j + 1 << " S=" << r.indices.S[j] << " T=" << r.indices.T[j];
    std::cout << (r.indices.degenerate ? " (degenerate)" : "") << "\n";
  }
  return kOk;
}

int cmd_bench(const CampaignConfig& cfg)
{
  if (!cfg.simulator.is_builtin())
    throw InputError("bench: simulator must be a builtin testbed");
  const std::vector<BenchRow> rows =
      run_bench(cfg, cfg.bench_repetitions, {Strategy::backtracking, Strategy::no_backtracking, Strategy::maximin},
                cfg.jobs, &std::cerr);
  write_file_atomic(out_path(cfg, "bench.csv"), bench_csv(rows));
  std::cout << rows.size() << " rows written\n";
  return kOk;
}

int cmd_diag(const CampaignConfig& cfg)
{
  bool wrote = false;
  std::optional<HetGPModel> model;
  if (cfg.model.empty() && fs::exists(fs::path(cfg.output_dir) / "state.json"))
  {
    const CampaignState st = load_state(cfg.output_dir);
    model = st.model;
    std::vector<Run> old_runs, new_runs;
    for (const RunRecord& r : st.runs)
      (r.batch == 0 ? old_runs : new_runs).push_back(Run{r.x, r.y});
    if (!new_runs.empty())
    {
      const DistanceDiag diag = pairwise_distance_diag(aggregate(old_runs).unique_x, aggregate(new_runs).unique_x);
      write_file_atomic(out_path(cfg, "distances.csv"), distances_csv(diag));
      wrote = true;
    }
  }
  if (!model)
    model = model_for(cfg);

  if (cfg.simulator.is_builtin() && cfg.metrics_test_size > 0)
  {
    const Testbed tb = testbed(cfg.simulator.builtin);
    if (tb.dim() != model->dim())
      throw InputError("diag: model dimension does not match the testbed");
    Rng rng(derive_seed(cfg.seed, 0xD1A6));
    const Matrix X = random_lhs(cfg.metrics_test_size, model->dim(), rng);
    Vector truth(X.rows()), y(X.rows());
    for (Index i = 0; i < X.rows(); ++i)
    {
      truth[i] = tb.mean(X.row(i).transpose());
      y[i] = tb.sample(X.row(i).transpose(), rng);
    }
    const Prediction p = model->predict(X);
    std::ostringstream os;
    os << std::setprecision(17);
    for (Index k = 0; k < X.cols(); ++k)
      os << "x" << k + 1 << ",";
    os << "mean,var_mean,noise,truth,y\n";
    for (Index i = 0; i < X.rows(); ++i)
    {
      for (Index k = 0; k < X.cols(); ++k)
        os << X(i, k) << ",";
      os << p.mean[i] << "," << p.var_mean[i] << "," << p.noise[i] << "," << truth[i] << "," << y[i] << "\n";
    }
    write_file_atomic(out_path(cfg, "predictions.csv"), os.str());
    const double r = rmspe(p.mean, truth), s = score(p.mean, (p.var_mean + p.noise).eval(), y);
    std::ostringstream ms;
    ms << std::setprecision(17) << "rmspe,score\n" << r << "," << s << "\n";
    write_file_atomic(out_path(cfg, "metrics.csv"), ms.str());
    std::cout << "rmspe " << r << ", score " << s << "\n";
    wrote = true;
  }
  if (!wrote)
    throw InputError("diag: nothing to report (no campaign state and no builtin testbed)");
  return kOk;
}

/// Serves a builtin testbed behind the external batch protocol.
int cmd_simulate(const std::string& name)
{
  const Testbed tb = testbed(name);
  const char* env = std::getenv("BATCHDESIGN_SEED");
  Rng rng(env ? std::strtoull(env, nullptr, 10) : 0);
  std::string line;
  if (!std::getline(std::cin, line))
    throw InputError("simulate: no header on stdin");
  std::cout << std::setprecision(17);
  while (std::getline(std::cin, line))
  {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    Vector x(tb.dim());
    std::istringstream in(line);
    std::string cell;
    for (Index k = 0; k < tb.dim(); ++k)
    {
      if (!std::getline(in, cell, ','))
        throw InputError("simulate: expected " + std::to_string(tb.dim()) + " columns");
      x[k] = std::stod(cell);
    }
    std::cout << tb.sample(x, rng) << "\n";
  }
  return kOk;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Batch-sequential design with heteroskedastic GP surrogates"};
  app.require_subcommand(1);
  Common common;
  std::string testbed_name = "toy1d";

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a surrogate to a run log and write a model snapshot");
  CLI::App* propose_cmd = app.add_subcommand("propose", "optimize and backtrack one batch from a snapshot");
  CLI::App* campaign_cmd = app.add_subcommand("campaign", "run or resume a sequential design campaign");
  CLI::App* sens_cmd = app.add_subcommand("sens", "main effects and Sobol indices with bootstrap");
  CLI::App* bench_cmd = app.add_subcommand("bench", "compare strategies over repeated campaigns");
  CLI::App* diag_cmd = app.add_subcommand("diag", "distance diagnostics and test-set predictions");
  CLI::App* sim_cmd = app.add_subcommand("simulate", "serve a builtin testbed over the batch protocol");
  sim_cmd->group("");
  sim_cmd->add_option("--testbed", testbed_name, "builtin testbed name");
  for (CLI::App* sub : {fit_cmd, propose_cmd, campaign_cmd, sens_cmd, bench_cmd, diag_cmd})
    add_common(sub, common);
  campaign_cmd->add_flag("--resume", common.resume, "continue from state.json in the output directory");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError& e)
  {
    app.exit(e);
    return kConfig;
  }

  try
  {
    if (sim_cmd->parsed())
      return cmd_simulate(testbed_name);
    if (campaign_cmd->parsed() && common.resume && common.config.empty())
    {
      // the stored config governs; only the batch count may be extended
      CampaignConfig cfg, probe;
      cfg.output_dir = common.out.value_or(cfg.output_dir);
      std::optional<int> n_batches;
      for (const std::string& o : common.overrides)
      {
        if (o.rfind("n_batches=", 0) != 0)
          throw InputError("resume: only n_batches may be overridden, got '" + o + "'");
        apply_override(probe, o);
        n_batches = probe.n_batches;
      }
      if (!fs::exists(fs::path(cfg.output_dir) / "state.json"))
        throw InputError("resume: no state.json in '" + cfg.output_dir + "'");
      return cmd_campaign(cfg, true, n_batches);
    }
    const CampaignConfig cfg = build_config(common);
    if (fit_cmd->parsed())
      return cmd_fit(cfg);
    if (propose_cmd->parsed())
      return cmd_propose(cfg);
    if (campaign_cmd->parsed())
      return cmd_campaign(cfg, common.resume);
    if (sens_cmd->parsed())
      return cmd_sens(cfg);
    if (bench_cmd->parsed())
      return cmd_bench(cfg);
    return cmd_diag(cfg);
  }
  catch (const InputError& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  catch (const SimulatorError& e)
  {
    std::cerr << "simulator error: " << e.what() << "\n";
    return kSimulator;
  }
  catch (const NumericalError& e)
  {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
