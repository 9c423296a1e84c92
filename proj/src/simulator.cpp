#include "hetbatch/simulator.hpp"

#include "hetbatch/parallel.hpp"
#include "hetbatch/testbeds.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace hetbatch
{
namespace
{
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string shell_quote(const std::string& s)
{
  std::string out = "'";
  for (char c : s)
    out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

Vector run_builtin(const std::string& name, const Matrix& coded, std::uint64_t seed, int jobs)
{
  const Testbed tb = testbed(name);
  if (coded.cols() != tb.dim())
    throw InputError("simulator: " + name + " expects dimension " + std::to_string(tb.dim()));
  Vector y(coded.rows());
  parallel_for(static_cast<int>(coded.rows()), jobs, [&](int i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    y[i] = tb.sample(Vector(coded.row(i).transpose()), rng);
  });
  return y;
}

Vector run_command(const std::string& command, const Matrix& native, std::uint64_t seed)
{
  const Index m = native.rows();
  Vector y = Vector::Constant(m, kNaN);
  static int counter = 0;
  const auto input = std::filesystem::temp_directory_path() /
                     ("hetbatch_batch_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv");
  {
    std::ofstream out(input);
    out << std::setprecision(17);
    for (Index k = 0; k < native.cols(); ++k)
      out << (k ? "," : "") << "x" << (k + 1);
    out << "\n";
    for (Index i = 0; i < m; ++i)
    {
      for (Index k = 0; k < native.cols(); ++k)
        out << (k ? "," : "") << native(i, k);
      out << "\n";
    }
  }
  const std::string shell = "export BATCHDESIGN_SEED=" + std::to_string(seed) + "; (" + command + ") < " +
                            shell_quote(input.string());
  FILE* pipe = ::popen(shell.c_str(), "r");
  if (!pipe)
  {
    std::filesystem::remove(input);
    return y;
  }
  std::string output;
  std::array<char, 4096> buf{};
  size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
    output.append(buf.data(), got);
  const int status = ::pclose(pipe);
  std::filesystem::remove(input);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0)
    return y;

  std::istringstream lines(output);
  std::string line;
  Index i = 0;
  while (i < m && std::getline(lines, line))
  {
    try
    {
      size_t used = 0;
      const double v = std::stod(line, &used);
      if (line.find_first_not_of(" \t\r", used) == std::string::npos && std::isfinite(v))
        y[i] = v;
    }
    catch (const std::exception&)
    {
    }
    ++i;
  }
  return y;
}
} // namespace

Matrix to_native(const Matrix& coded, const Vector& lower, const Vector& upper)
{
  return (coded.array().rowwise() * (upper - lower).transpose().array()).rowwise() + lower.transpose().array();
}

Matrix to_coded(const Matrix& native, const Vector& lower, const Vector& upper)
{
  return (native.array().rowwise() - lower.transpose().array()).rowwise() / (upper - lower).transpose().array();
}

Vector simulate_once(const SimulatorRef& sim, const Matrix& coded, const Vector& lower, const Vector& upper,
                     std::uint64_t seed, int jobs)
{
  if (sim.is_builtin())
    return run_builtin(sim.builtin, coded, seed, jobs);
  return run_command(sim.command, to_native(coded, lower, upper), seed);
}

BatchOutcome simulate_batch(const SimulatorRef& sim, const Matrix& coded, const Vector& lower, const Vector& upper,
                            std::uint64_t seed, int jobs)
{
  const Index m = coded.rows();
  BatchOutcome out;
  out.y = simulate_once(sim, coded, lower, upper, seed, jobs);
  out.attempts = 1;
  std::vector<Index> missing;
  for (Index i = 0; i < m; ++i)
    if (std::isnan(out.y[i]))
      missing.push_back(i);
  if (!missing.empty())
  {
    out.log.push_back(std::to_string(missing.size()) + " of " + std::to_string(m) + " runs failed; retrying them once");
    Matrix retry(static_cast<Index>(missing.size()), coded.cols());
    for (size_t r = 0; r < missing.size(); ++r)
      retry.row(static_cast<Index>(r)) = coded.row(missing[r]);
    const Vector again = simulate_once(sim, retry, lower, upper, derive_seed(seed, 0x7E7), jobs);
    out.attempts = 2;
    for (size_t r = 0; r < missing.size(); ++r)
      out.y[missing[r]] = again[static_cast<Index>(r)];
  }
  out.missing = 0;
  for (Index i = 0; i < m; ++i)
    out.missing += std::isnan(out.y[i]) ? 1 : 0;
  if (2 * out.missing > m)
    throw SimulatorError("simulator returned only " + std::to_string(m - out.missing) + " of " + std::to_string(m) +
                         " runs after one retry");
  if (out.missing > 0)
    out.log.push_back("continuing with a partial batch: " + std::to_string(out.missing) + " runs missing");
  return out;
}

Vector ResponseTransform::apply(const Vector& raw)
{
  if (kind_ == Transform::none)
    return raw;
  for (Index i = 0; i < raw.size(); ++i)
    if (raw[i] > 0 && (min_positive_ <= 0 || raw[i] < min_positive_))
      min_positive_ = raw[i];
  Vector y = raw;
  for (Index i = 0; i < raw.size(); ++i)
  {
    if (std::isnan(raw[i]))
      continue;
    if (min_positive_ <= 0)
      throw SimulatorError("log transform: no positive response observed yet");
    y[i] = std::log(std::max(raw[i], 0.5 * min_positive_));
  }
  return y;
}
} // namespace hetbatch
