#pragma once

// Run-log CSV: a header row naming x1..xd and y, then one run per line.
// Inputs are coded to [0,1]. Other columns (batch_index, ...) are ignored, so a
// campaign's runs.csv reads back directly.

#include "hetbatch/design_set.hpp"

#include <string>
#include <vector>

namespace hetbatch
{
/// Errors carry `origin:line:`; a missing x1 or y column is named.
std::vector<Run> parse_run_log(const std::string& text, const std::string& origin = "runs");
std::vector<Run> read_run_log(const std::string& path);
} // namespace hetbatch
