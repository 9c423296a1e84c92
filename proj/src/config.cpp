#include "hetbatch/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace hetbatch
{
namespace
{
std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v)
{
  try
  {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size())
      throw std::invalid_argument(v);
    return x;
  }
  catch (const std::exception&)
  {
    throw InputError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v)
{
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw InputError("config: key '" + key + "' expects an integer, got '" + v + "'");
  return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v)
{
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw InputError("config: key '" + key + "' expects a non-negative integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v)
{
  if (v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "false" || v == "0" || v == "no")
    return false;
  throw InputError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

Vector to_vector(const std::string& key, const std::string& v)
{
  std::vector<double> vals;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    vals.push_back(to_double(key, trim(item)));
  if (vals.empty())
    throw InputError("config: key '" + key + "' expects a comma-separated list");
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

int positive(const std::string& key, long long x)
{
  if (x < 1)
    throw InputError("config: key '" + key + "' must be at least 1");
  return static_cast<int>(x);
}

using Setter = std::function<void(CampaignConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
  static const std::map<std::string, Setter> table = {
      {"d", [](auto& c, auto& k, auto& v) { c.d = positive(k, to_int(k, v)); }},
      {"n0", [](auto& c, auto& k, auto& v) { c.n0 = positive(k, to_int(k, v)); }},
      {"reps0",
       [](auto& c, auto& k, auto& v) {
         const auto dash = v.find('-');
         if (dash == std::string::npos)
           c.reps_min = c.reps_max = positive(k, to_int(k, v));
         else
         {
           c.reps_min = positive(k, to_int(k, trim(v.substr(0, dash))));
           c.reps_max = positive(k, to_int(k, trim(v.substr(dash + 1))));
           if (c.reps_max < c.reps_min)
             throw InputError("config: reps0 range is empty");
         }
       }},
      {"M", [](auto& c, auto& k, auto& v) { c.M = positive(k, to_int(k, v)); }},
      {"n_batches",
       [](auto& c, auto& k, auto& v) {
         const long long x = to_int(k, v);
         if (x < 0)
           throw InputError("config: n_batches must be non-negative");
         c.n_batches = static_cast<int>(x);
       }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = to_uint(k, v); }},
      {"simulator",
       [](auto& c, auto&, auto& v) {
         if (v.rfind("builtin:", 0) == 0)
         {
           c.simulator.builtin = v.substr(8);
           c.simulator.command.clear();
         }
         else
         {
           if (v.empty())
             throw InputError("config: simulator must be builtin:<name> or a command");
           c.simulator.builtin.clear();
           c.simulator.command = v;
         }
       }},
      {"transform",
       [](auto& c, auto&, auto& v) {
         if (v == "none")
           c.simulator.transform = Transform::none;
         else if (v == "logfloor")
           c.simulator.transform = Transform::log_floor;
         else
           throw InputError("config: transform must be none or logfloor");
       }},
      {"metrics_test_size",
       [](auto& c, auto& k, auto& v) {
         const long long x = to_int(k, v);
         if (x < 0)
           throw InputError("config: metrics_test_size must be non-negative");
         c.metrics_test_size = x;
       }},
      {"output_dir", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
      {"lower", [](auto& c, auto& k, auto& v) { c.lower = to_vector(k, v); }},
      {"upper", [](auto& c, auto& k, auto& v) { c.upper = to_vector(k, v); }},
      {"strategy", [](auto& c, auto&, auto& v) { c.strategy = parse_strategy(v); }},
      {"init_candidates", [](auto& c, auto& k, auto& v) { c.init_candidates = positive(k, to_int(k, v)); }},
      {"record_wall_time", [](auto& c, auto& k, auto& v) { c.record_wall_time = to_bool(k, v); }},
      {"jobs", [](auto& c, auto& k, auto& v) { c.jobs = positive(k, to_int(k, v)); }},
      {"fit.n_starts", [](auto& c, auto& k, auto& v) { c.fit.n_starts = positive(k, to_int(k, v)); }},
      {"fit.n_starts_update", [](auto& c, auto& k, auto& v) { c.fit_starts_update = positive(k, to_int(k, v)); }},
      {"fit.max_iter", [](auto& c, auto& k, auto& v) { c.fit.max_iter = positive(k, to_int(k, v)); }},
      {"fit.theta_min", [](auto& c, auto& k, auto& v) { c.fit.theta_min = to_double(k, v); }},
      {"fit.theta_max", [](auto& c, auto& k, auto& v) { c.fit.theta_max = to_double(k, v); }},
      {"fit.g_min", [](auto& c, auto& k, auto& v) { c.fit.g_min = to_double(k, v); }},
      {"fit.g_max", [](auto& c, auto& k, auto& v) { c.fit.g_max = to_double(k, v); }},
      {"fit.noise_min", [](auto& c, auto& k, auto& v) { c.noise_min = to_double(k, v); }},
      {"fit.noise_max", [](auto& c, auto& k, auto& v) { c.noise_max = to_double(k, v); }},
      {"fit.allow_homoskedastic", [](auto& c, auto& k, auto& v) { c.fit.allow_homoskedastic = to_bool(k, v); }},
      {"acq.n_starts", [](auto& c, auto& k, auto& v) { c.acquisition.n_starts = positive(k, to_int(k, v)); }},
      {"acq.max_iter", [](auto& c, auto& k, auto& v) { c.acquisition.max_iter = positive(k, to_int(k, v)); }},
      {"acq.pgtol", [](auto& c, auto& k, auto& v) { c.acquisition.pgtol = to_double(k, v); }},
      {"acq.ftol", [](auto& c, auto& k, auto& v) { c.acquisition.ftol = to_double(k, v); }},
      {"run_log", [](auto& c, auto&, auto& v) { c.run_log = v; }},
      {"model", [](auto& c, auto&, auto& v) { c.model = v; }},
      {"sens.grid", [](auto& c, auto& k, auto& v) { c.sens_grid = std::max(2, positive(k, to_int(k, v))); }},
      {"sens.n_mc", [](auto& c, auto& k, auto& v) { c.sens_n_mc = positive(k, to_int(k, v)); }},
      {"sens.bootstrap",
       [](auto& c, auto& k, auto& v) {
         const long long x = to_int(k, v);
         if (x < 0)
           throw InputError("config: sens.bootstrap must be non-negative");
         c.sens_bootstrap = static_cast<int>(x);
       }},
      {"sens.target",
       [](auto& c, auto&, auto& v) {
         if (v != "mean" && v != "noise" && v != "both")
           throw InputError("config: sens.target must be mean, noise or both");
         c.sens_target = v;
       }},
      {"bench.repetitions", [](auto& c, auto& k, auto& v) { c.bench_repetitions = positive(k, to_int(k, v)); }},
  };
  return table;
}

std::string join(const Vector& v)
{
  std::ostringstream os;
  os << std::setprecision(17);
  for (Index i = 0; i < v.size(); ++i)
    os << (i ? "," : "") << v[i];
  return os.str();
}
} // namespace

std::string strategy_name(Strategy s)
{
  switch (s)
  {
  case Strategy::backtracking:
    return "backtracking";
  case Strategy::no_backtracking:
    return "no-backtracking";
  case Strategy::maximin:
    return "maximin";
  }
  return "backtracking";
}

Strategy parse_strategy(const std::string& s)
{
  if (s == "backtracking")
    return Strategy::backtracking;
  if (s == "no-backtracking")
    return Strategy::no_backtracking;
  if (s == "maximin")
    return Strategy::maximin;
  throw InputError("config: strategy must be backtracking, no-backtracking or maximin, got '" + s + "'");
}

std::vector<std::string> config_keys()
{
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters())
    keys.push_back(k);
  return keys;
}

void apply_setting(CampaignConfig& cfg, const std::string& key, const std::string& value)
{
  const auto it = setters().find(key);
  if (it == setters().end())
    throw InputError("config: unknown key '" + key + "'");
  it->second(cfg, key, value);
}

void apply_override(CampaignConfig& cfg, const std::string& assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw InputError("override '" + assignment + "' is not of the form key=value");
  apply_setting(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

CampaignConfig parse_config(const std::string& text, const std::string& origin)
{
  CampaignConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#')
      continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InputError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    try
    {
      apply_setting(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    catch (const InputError& e)
    {
      throw InputError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

CampaignConfig load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void validate(CampaignConfig& cfg)
{
  if (cfg.n0 < cfg.d + 2)
    throw InputError("config: n0 must be at least d + 2");
  if (cfg.simulator.is_builtin())
  {
    const Index bd = cfg.simulator.builtin == "toy1d" ? 1 : cfg.simulator.builtin == "toy2d" ? 2 : -1;
    if (bd < 0)
      throw InputError("config: unknown builtin simulator '" + cfg.simulator.builtin + "'");
    if (bd != cfg.d)
      throw InputError("config: builtin:" + cfg.simulator.builtin + " needs d = " + std::to_string(bd));
  }
  if (cfg.lower.size() == 0)
    cfg.lower = Vector::Zero(cfg.d);
  if (cfg.upper.size() == 0)
    cfg.upper = Vector::Ones(cfg.d);
  if (cfg.lower.size() != cfg.d || cfg.upper.size() != cfg.d)
    throw InputError("config: lower/upper must have d entries");
  if (!(cfg.upper.array() > cfg.lower.array()).all())
    throw InputError("config: upper must exceed lower in every coordinate");
  if (!(cfg.fit.theta_min > 0 && cfg.fit.theta_max > cfg.fit.theta_min))
    throw InputError("config: need 0 < fit.theta_min < fit.theta_max");
  if (!(cfg.fit.g_min > 0 && cfg.fit.g_max > cfg.fit.g_min))
    throw InputError("config: need 0 < fit.g_min < fit.g_max");
  if (!(cfg.noise_min > 0 && cfg.noise_max > cfg.noise_min))
    throw InputError("config: need 0 < fit.noise_min < fit.noise_max");
  cfg.fit.log_delta_min = std::log(cfg.noise_min);
  cfg.fit.log_delta_max = std::log(cfg.noise_max);
  cfg.fit.jobs = cfg.jobs;
  cfg.acquisition.jobs = cfg.jobs;
}

std::string to_text(const CampaignConfig& c)
{
  std::ostringstream os;
  os << std::setprecision(17);
  os << "d = " << c.d << "\n";
  os << "n0 = " << c.n0 << "\n";
  os << "reps0 = " << c.reps_min << "-" << c.reps_max << "\n";
  os << "M = " << c.M << "\n";
  os << "n_batches = " << c.n_batches << "\n";
  os << "seed = " << c.seed << "\n";
  os << "simulator = " << (c.simulator.is_builtin() ? "builtin:" + c.simulator.builtin : c.simulator.command) << "\n";
  os << "transform = " << (c.simulator.transform == Transform::none ? "none" : "logfloor") << "\n";
  os << "metrics_test_size = " << c.metrics_test_size << "\n";
  os << "output_dir = " << c.output_dir << "\n";
  if (c.lower.size())
    os << "lower = " << join(c.lower) << "\n";
  if (c.upper.size())
    os << "upper = " << join(c.upper) << "\n";
  os << "strategy = " << strategy_name(c.strategy) << "\n";
  os << "init_candidates = " << c.init_candidates << "\n";
  os << "record_wall_time = " << (c.record_wall_time ? "true" : "false") << "\n";
  os << "jobs = " << c.jobs << "\n";
  os << "fit.n_starts = " << c.fit.n_starts << "\n";
  os << "fit.n_starts_update = " << c.fit_starts_update << "\n";
  os << "fit.max_iter = " << c.fit.max_iter << "\n";
  os << "fit.theta_min = " << c.fit.theta_min << "\n";
  os << "fit.theta_max = " << c.fit.theta_max << "\n";
  os << "fit.g_min = " << c.fit.g_min << "\n";
  os << "fit.g_max = " << c.fit.g_max << "\n";
  os << "fit.noise_min = " << c.noise_min << "\n";
  os << "fit.noise_max = " << c.noise_max << "\n";
  os << "fit.allow_homoskedastic = " << (c.fit.allow_homoskedastic ? "true" : "false") << "\n";
  os << "acq.n_starts = " << c.acquisition.n_starts << "\n";
  os << "acq.max_iter = " << c.acquisition.max_iter << "\n";
  os << "acq.pgtol = " << c.acquisition.pgtol << "\n";
  os << "acq.ftol = " << c.acquisition.ftol << "\n";
  if (!c.run_log.empty())
    os << "run_log = " << c.run_log << "\n";
  if (!c.model.empty())
    os << "model = " << c.model << "\n";
  os << "sens.grid = " << c.sens_grid << "\n";
  os << "sens.n_mc = " << c.sens_n_mc << "\n";
  os << "sens.bootstrap = " << c.sens_bootstrap << "\n";
  os << "sens.target = " << c.sens_target << "\n";
  os << "bench.repetitions = " << c.bench_repetitions << "\n";
  return os.str();
}
} // namespace hetbatch
