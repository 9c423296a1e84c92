#include "hetbatch/runlog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hetbatch
{
namespace
{
std::vector<std::string> split(const std::string& line)
{
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ','))
  {
    const auto a = cell.find_first_not_of(" \t\r"), b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

[[noreturn]] void fail(const std::string& origin, size_t line, const std::string& msg)
{
  throw InputError(origin + ":" + std::to_string(line) + ": " + msg);
}
} // namespace

std::vector<Run> parse_run_log(const std::string& text, const std::string& origin)
{
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line))
  {
    ++lineno;
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      header = split(line);
  }
  if (header.empty())
    throw InputError(origin + ": empty run log");

  std::vector<size_t> xcol;
  for (size_t k = 1;; ++k)
  {
    const auto it = std::find(header.begin(), header.end(), "x" + std::to_string(k));
    if (it == header.end())
      break;
    xcol.push_back(static_cast<size_t>(it - header.begin()));
  }
  if (xcol.empty())
    fail(origin, lineno, "missing column 'x1'");
  const auto yit = std::find(header.begin(), header.end(), "y");
  if (yit == header.end())
    fail(origin, lineno, "missing column 'y'");
  const size_t ycol = static_cast<size_t>(yit - header.begin());
  const Index d = static_cast<Index>(xcol.size());

  std::vector<Run> runs;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size())
      fail(origin, lineno,
           "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
    auto number = [&](size_t c) {
      double v = 0.0;
      const std::string& s = cells[c];
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        fail(origin, lineno, "column '" + header[c] + "': not a finite number: '" + s + "'");
      return v;
    };
    Run r{Vector(d), number(ycol)};
    for (Index k = 0; k < d; ++k)
    {
      r.x[k] = number(xcol[static_cast<size_t>(k)]);
      if (r.x[k] < 0.0 || r.x[k] > 1.0)
        fail(origin, lineno, "column '" + header[xcol[static_cast<size_t>(k)]] + "' outside the coded range [0,1]");
    }
    runs.push_back(std::move(r));
  }
  if (runs.empty())
    throw InputError(origin + ": run log has no data rows");
  return runs;
}

std::vector<Run> read_run_log(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open run log '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_log(ss.str(), path);
}
} // namespace hetbatch
