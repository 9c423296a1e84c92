#pragma once

// Model snapshots as JSON. Schema (version 1):
//   { "format": "hetbatch-model", "version": 1, "dim": d, "homoskedastic": bool,
//     "params": { "theta": [d], "theta_noise": [d], "g_noise": x, "log_delta": [n] },
//     "design": { "unique_x": [[d] x n], "responses": [[a_i] x n] },
//     "diagnostics": { "loglik": x, "tau2": x, "tau2_noise": x, "nu": x } }
// Doubles are written in shortest round-trip form, so reloading is bit-exact.
// Diagnostics are informational; all cached quantities are recomputed on load.

#include "hetbatch/hetgp.hpp"

#include <json.hpp>

#include <string>

namespace hetbatch
{
nlohmann::json model_to_json(const HetGPModel& model);
HetGPModel model_from_json(const nlohmann::json& j);

void save_model(const HetGPModel& model, const std::string& path);
HetGPModel load_model(const std::string& path);

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);
} // namespace hetbatch
