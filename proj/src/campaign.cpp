#include "hetbatch/campaign.hpp"

#include "hetbatch/lhs.hpp"
#include "hetbatch/metrics.hpp"
#include "hetbatch/parallel.hpp"
#include "hetbatch/simulator.hpp"
#include "hetbatch/snapshot.hpp"
#include "hetbatch/testbeds.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>

namespace hetbatch
{
namespace
{
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Stream tags for derive_seed(seed, tag, batch).
enum SeedTag : std::uint64_t
{
  kInitDesign = 1,
  kInitReps = 2,
  kSimulate = 3,
  kFit = 4,
  kTestSet = 5,
  kAcquire = 6,
  kTestNoise = 8,
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void note(const CampaignOptions& opts, const std::string& msg)
{
  if (opts.log)
    *opts.log << msg << std::endl;
}

std::string fmt(double v)
{
  if (std::isnan(v))
    return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

FitConfig fit_config(const CampaignConfig& cfg, int batch)
{
  FitConfig f = cfg.fit;
  f.seed = derive_seed(cfg.seed, kFit, static_cast<std::uint64_t>(batch));
  if (batch > 0)
    f.n_starts = cfg.fit_starts_update;
  f.jobs = cfg.jobs;
  return f;
}

/// Appends simulated runs, dropping missing ones; returns the kept Run list.
std::vector<Run> record_runs(CampaignState& st, const Matrix& X, const Vector& y, int batch,
                             const std::vector<std::string>& origin)
{
  std::vector<Run> kept;
  for (Index i = 0; i < X.rows(); ++i)
  {
    if (std::isnan(y[i]))
      continue;
    kept.push_back(Run{X.row(i).transpose(), y[i]});
    st.runs.push_back(RunRecord{X.row(i).transpose(), y[i], batch, origin[static_cast<size_t>(i)]});
  }
  return kept;
}

void evaluate_metrics(const CampaignConfig& cfg, const HetGPModel& model, int batch, BatchRecord& rec)
{
  rec.rmspe = rec.score = std::numeric_limits<double>::quiet_NaN();
  if (cfg.metrics_test_size <= 0)
    return;
  Rng rng(derive_seed(cfg.seed, kTestSet, static_cast<std::uint64_t>(batch)));
  const Matrix T = random_lhs(cfg.metrics_test_size, cfg.d, rng);
  if (cfg.simulator.is_builtin())
  {
    const Testbed tb = testbed(cfg.simulator.builtin);
    const Vector truth = tb.mean_values(T);
    Vector noisy(T.rows());
    for (Index i = 0; i < T.rows(); ++i)
    {
      Rng r(derive_seed(cfg.seed, kTestNoise, derive_seed(static_cast<std::uint64_t>(batch), static_cast<std::uint64_t>(i))));
      noisy[i] = tb.sample(Vector(T.row(i).transpose()), r);
    }
    const Prediction p = model.predict(T);
    rec.rmspe = rmspe(p.mean, truth);
    rec.score = score(p.mean, p.var_mean + p.noise, noisy);
    return;
  }
  const Vector raw = simulate_once(cfg.simulator, T, cfg.lower, cfg.upper,
                                   derive_seed(cfg.seed, kTestNoise, static_cast<std::uint64_t>(batch)), cfg.jobs);
  ResponseTransform tr(cfg.simulator.transform);
  const Vector y = tr.apply(raw);
  std::vector<Index> ok;
  for (Index i = 0; i < y.size(); ++i)
    if (!std::isnan(y[i]))
      ok.push_back(i);
  if (ok.empty())
    return;
  Matrix Tk(static_cast<Index>(ok.size()), cfg.d);
  Vector yk(static_cast<Index>(ok.size()));
  for (size_t j = 0; j < ok.size(); ++j)
  {
    Tk.row(static_cast<Index>(j)) = T.row(ok[j]);
    yk[static_cast<Index>(j)] = y[ok[j]];
  }
  const Prediction p = model.predict(Tk);
  rec.rmspe = rmspe(p.mean, yk);
  rec.score = score(p.mean, p.var_mean + p.noise, yk);
}

nlohmann::json state_to_json(const CampaignState& st)
{
  nlohmann::json j;
  j["format"] = "hetbatch-campaign";
  j["version"] = 1;
  j["config"] = to_text(st.config);
  j["min_positive"] = st.min_positive;
  nlohmann::json runs = nlohmann::json::array();
  for (const RunRecord& r : st.runs)
    runs.push_back({{"x", std::vector<double>(r.x.data(), r.x.data() + r.x.size())},
                    {"y", r.y},
                    {"batch", r.batch},
                    {"origin", r.origin}});
  j["runs"] = runs;
  nlohmann::json hist = nlohmann::json::array();
  for (const BatchRecord& h : st.history)
    hist.push_back({{"batch_index", h.batch_index},
                    {"N", h.N},
                    {"n", h.n},
                    {"s_hat", h.s_hat},
                    {"imspe", h.imspe},
                    {"rmspe", std::isnan(h.rmspe) ? nlohmann::json() : nlohmann::json(h.rmspe)},
                    {"score", std::isnan(h.score) ? nlohmann::json() : nlohmann::json(h.score)},
                    {"wall_seconds", h.wall_seconds},
                    {"fit_seconds", h.fit_seconds},
                    {"missing", h.missing}});
  j["history"] = hist;
  j["model"] = model_to_json(st.model);
  return j;
}

double json_number(const nlohmann::json& v)
{
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

void persist(const CampaignState& st, const CampaignOptions& opts)
{
  if (!opts.persist)
    return;
  const fs::path dir(st.config.output_dir);
  fs::create_directories(dir / "traces");
  write_file_atomic((dir / "runs.csv").string(), runs_csv(st));
  write_file_atomic((dir / "history.csv").string(), history_csv(st.history));
  if (!st.traces.empty() && !st.traces.back().candidates.empty())
  {
    std::ostringstream name;
    name << "batch_" << std::setw(3) << std::setfill('0') << st.history.back().batch_index << ".csv";
    write_file_atomic((dir / "traces" / name.str()).string(), trace_csv(st.traces.back()));
  }
  write_file_atomic((dir / "state.json").string(), state_to_json(st).dump(1));
}

void initial_batch(CampaignState& st, const CampaignOptions& opts)
{
  const CampaignConfig& cfg = st.config;
  const auto t0 = Clock::now();
  const Matrix X0 = maximin_lhs(cfg.n0, cfg.d, derive_seed(cfg.seed, kInitDesign), cfg.init_candidates);
  Rng rep_rng(derive_seed(cfg.seed, kInitReps));
  std::uniform_int_distribution<int> reps(cfg.reps_min, cfg.reps_max);
  std::vector<Vector> rows;
  for (Index i = 0; i < X0.rows(); ++i)
  {
    const int a = reps(rep_rng);
    for (int r = 0; r < a; ++r)
      rows.push_back(X0.row(i).transpose());
  }
  Matrix X(static_cast<Index>(rows.size()), cfg.d);
  for (size_t i = 0; i < rows.size(); ++i)
    X.row(static_cast<Index>(i)) = rows[i].transpose();

  const BatchOutcome out = simulate_batch(cfg.simulator, X, cfg.lower, cfg.upper, derive_seed(cfg.seed, kSimulate, 0), cfg.jobs);
  for (const auto& line : out.log)
    note(opts, "batch 0: " + line);
  ResponseTransform tr(cfg.simulator.transform, st.min_positive);
  const Vector y = tr.apply(out.y);
  st.min_positive = tr.min_positive();
  const std::vector<Run> kept = record_runs(st, X, y, 0, std::vector<std::string>(rows.size(), "init"));

  const auto tf = Clock::now();
  st.model = fit(aggregate(kept), fit_config(cfg, 0));
  BatchRecord rec;
  rec.fit_seconds = seconds_since(tf);
  rec.batch_index = 0;
  rec.N = st.model.design().total_runs();
  rec.n = st.model.n();
  rec.s_hat = 0;
  rec.imspe = imspe_current(st.model);
  rec.missing = out.missing;
  evaluate_metrics(cfg, st.model, 0, rec);
  rec.wall_seconds = cfg.record_wall_time ? seconds_since(t0) : 0.0;
  st.history.push_back(rec);
  st.traces.emplace_back();
  st.selected.emplace_back();
}

void acquisition_batch(CampaignState& st, int b, const CampaignOptions& opts)
{
  const CampaignConfig& cfg = st.config;
  const auto t0 = Clock::now();
  std::vector<BatchSite> sites;
  MergeTrace trace;
  Index s_hat = 0;
  if (cfg.strategy == Strategy::maximin)
  {
    const Matrix X = sequential_maximin(st.model.design().unique_x, cfg.M, derive_seed(cfg.seed, kAcquire, static_cast<std::uint64_t>(b)));
    for (Index i = 0; i < X.rows(); ++i)
      sites.push_back(BatchSite{X.row(i).transpose(), 1, -1, false});
  }
  else
  {
    AcquisitionConfig acq = cfg.acquisition;
    acq.seed = derive_seed(cfg.seed, kAcquire, static_cast<std::uint64_t>(b));
    acq.jobs = cfg.jobs;
    const BatchProposal prop = optimize_batch(st.model, cfg.M, acq);
    if (cfg.strategy == Strategy::backtracking)
    {
      trace = merge_sequence(st.model, prop.xtil);
      s_hat = changepoint_select(trace.imspe_values());
      sites = select_batch(trace, s_hat);
    }
    else
      for (Index i = 0; i < prop.xtil.rows(); ++i)
        sites.push_back(BatchSite{prop.xtil.row(i).transpose(), 1, -1, false});
  }

  std::vector<Vector> rows;
  std::vector<std::string> origin;
  for (const BatchSite& s : sites)
    for (int r = 0; r < s.multiplicity; ++r)
    {
      rows.push_back(s.x);
      origin.push_back(s.existing >= 0 ? "replicate" : s.fused ? "fused" : "new");
    }
  Matrix X(static_cast<Index>(rows.size()), cfg.d);
  for (size_t i = 0; i < rows.size(); ++i)
    X.row(static_cast<Index>(i)) = rows[i].transpose();

  const BatchOutcome out =
      simulate_batch(cfg.simulator, X, cfg.lower, cfg.upper, derive_seed(cfg.seed, kSimulate, static_cast<std::uint64_t>(b)), cfg.jobs);
  for (const auto& line : out.log)
    note(opts, "batch " + std::to_string(b) + ": " + line);
  ResponseTransform tr(cfg.simulator.transform, st.min_positive);
  const Vector y = tr.apply(out.y);
  st.min_positive = tr.min_positive();
  const std::vector<Run> kept = record_runs(st, X, y, b, origin);

  const auto tf = Clock::now();
  st.model = update(st.model, kept, fit_config(cfg, b));
  BatchRecord rec;
  rec.fit_seconds = seconds_since(tf);
  rec.batch_index = b;
  rec.N = st.model.design().total_runs();
  rec.n = st.model.n();
  rec.s_hat = s_hat;
  rec.imspe = imspe_current(st.model);
  rec.missing = out.missing;
  evaluate_metrics(cfg, st.model, b, rec);
  rec.wall_seconds = cfg.record_wall_time ? seconds_since(t0) : 0.0;
  st.history.push_back(rec);
  st.traces.push_back(std::move(trace));
  st.selected.push_back(std::move(sites));
}

void continue_campaign(CampaignState& st, const CampaignOptions& opts)
{
  for (int b = st.completed_batches() + 1; b <= st.config.n_batches; ++b)
  {
    if (opts.stop_after >= 0 && st.completed_batches() >= opts.stop_after)
      return;
    acquisition_batch(st, b, opts);
    persist(st, opts);
    const BatchRecord& r = st.history.back();
    note(opts, "batch " + std::to_string(b) + ": N=" + std::to_string(r.N) + " n=" + std::to_string(r.n) +
                   " s_hat=" + std::to_string(r.s_hat) + " I_N=" + fmt(r.imspe) + " rmspe=" + fmt(r.rmspe));
    if (opts.on_batch)
      opts.on_batch(st);
  }
}
} // namespace

CampaignState run_campaign(const CampaignConfig& cfg_in, const CampaignOptions& opts)
{
  CampaignState st;
  st.config = cfg_in;
  validate(st.config);
  initial_batch(st, opts);
  persist(st, opts);
  note(opts, "batch 0: N=" + std::to_string(st.history.back().N) + " n=" + std::to_string(st.history.back().n));
  if (opts.on_batch)
    opts.on_batch(st);
  continue_campaign(st, opts);
  return st;
}

CampaignState load_state(const std::string& output_dir)
{
  const fs::path path = fs::path(output_dir) / "state.json";
  std::ifstream in(path);
  if (!in)
    throw InputError("resume: no campaign state at '" + path.string() + "'");
  nlohmann::json j;
  try
  {
    in >> j;
  }
  catch (const nlohmann::json::exception& e)
  {
    throw InputError("resume: malformed state file: " + std::string(e.what()));
  }
  if (j.value("format", "") != "hetbatch-campaign" || j.value("version", 0) != 1)
    throw InputError("resume: '" + path.string() + "' is not a campaign state file");
  CampaignState st;
  st.config = parse_config(j.at("config").get<std::string>(), path.string());
  st.config.output_dir = output_dir;
  validate(st.config);
  st.min_positive = j.at("min_positive").get<double>();
  for (const auto& r : j.at("runs"))
  {
    const auto x = r.at("x").get<std::vector<double>>();
    st.runs.push_back(RunRecord{Eigen::Map<const Vector>(x.data(), static_cast<Index>(x.size())), r.at("y").get<double>(),
                                r.at("batch").get<int>(), r.at("origin").get<std::string>()});
  }
  for (const auto& h : j.at("history"))
  {
    BatchRecord rec;
    rec.batch_index = h.at("batch_index").get<int>();
    rec.N = h.at("N").get<Index>();
    rec.n = h.at("n").get<Index>();
    rec.s_hat = h.at("s_hat").get<Index>();
    rec.imspe = h.at("imspe").get<double>();
    rec.rmspe = json_number(h.at("rmspe"));
    rec.score = json_number(h.at("score"));
    rec.wall_seconds = h.at("wall_seconds").get<double>();
    rec.fit_seconds = h.at("fit_seconds").get<double>();
    rec.missing = h.at("missing").get<Index>();
    st.history.push_back(rec);
    st.traces.emplace_back();
    st.selected.emplace_back();
  }
  if (st.history.empty())
    throw InputError("resume: state has no completed batches");
  st.model = model_from_json(j.at("model"));
  return st;
}

CampaignState resume_campaign(const std::string& output_dir, const CampaignOptions& opts, std::optional<int> n_batches)
{
  CampaignState st = load_state(output_dir);
  if (n_batches)
    st.config.n_batches = *n_batches;
  note(opts, "resuming after batch " + std::to_string(st.completed_batches()));
  continue_campaign(st, opts);
  return st;
}

std::string runs_csv(const CampaignState& st)
{
  std::ostringstream os;
  os << std::setprecision(17);
  for (Index k = 0; k < st.config.d; ++k)
    os << "x" << (k + 1) << ",";
  os << "y,batch_index,multiplicity_origin\n";
  for (const RunRecord& r : st.runs)
  {
    for (Index k = 0; k < r.x.size(); ++k)
      os << r.x[k] << ",";
    os << r.y << "," << r.batch << "," << r.origin << "\n";
  }
  return os.str();
}

std::string history_csv(const std::vector<BatchRecord>& history)
{
  std::ostringstream os;
  os << "batch_index,N,n,s_hat,I_N,rmspe,score,wall_seconds\n";
  for (const BatchRecord& h : history)
    os << h.batch_index << "," << h.N << "," << h.n << "," << h.s_hat << "," << fmt(h.imspe) << "," << fmt(h.rmspe)
       << "," << fmt(h.score) << "," << fmt(h.wall_seconds) << "\n";
  return os.str();
}

std::uint64_t bench_seed(std::uint64_t base, int repetition)
{
  return derive_seed(base, 0xBE4C, static_cast<std::uint64_t>(repetition));
}

std::vector<BenchRow> run_bench(const CampaignConfig& cfg, int repetitions, const std::vector<Strategy>& strategies,
                                int jobs, std::ostream* log)
{
  if (!cfg.simulator.is_builtin())
    throw InputError("bench: needs a builtin testbed simulator");
  const int S = static_cast<int>(strategies.size());
  std::vector<std::vector<BatchRecord>> results(static_cast<size_t>(repetitions * S));
  std::mutex log_mutex;
  parallel_for(repetitions * S, jobs, [&](int task) {
    const int rep = task / S, k = task % S;
    CampaignConfig c = cfg;
    c.seed = bench_seed(cfg.seed, rep);
    c.strategy = strategies[static_cast<size_t>(k)];
    c.jobs = 1;
    CampaignOptions o;
    o.persist = false;
    const CampaignState st = run_campaign(c, o);
    results[static_cast<size_t>(task)] = st.history;
    if (log)
    {
      std::lock_guard<std::mutex> lock(log_mutex);
      *log << "bench: repetition " << rep << " " << strategy_name(c.strategy) << " done, final n=" << st.model.n()
           << std::endl;
    }
  });
  std::vector<BenchRow> rows;
  for (int rep = 0; rep < repetitions; ++rep)
    for (int k = 0; k < S; ++k)
      for (const BatchRecord& r : results[static_cast<size_t>(rep * S + k)])
        rows.push_back(BenchRow{rep, strategy_name(strategies[static_cast<size_t>(k)]), r});
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows)
{
  std::ostringstream os;
  os << "repetition,strategy,batch_index,N,n,s_hat,I_N,rmspe,score,fit_seconds,wall_seconds\n";
  for (const BenchRow& r : rows)
    os << r.repetition << "," << r.strategy << "," << r.record.batch_index << "," << r.record.N << "," << r.record.n
       << "," << r.record.s_hat << "," << fmt(r.record.imspe) << "," << fmt(r.record.rmspe) << ","
       << fmt(r.record.score) << "," << fmt(r.record.fit_seconds) << "," << fmt(r.record.wall_seconds) << "\n";
  return os.str();
}
} // namespace hetbatch
