#include "hetbatch/snapshot.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hetbatch
{
namespace
{
nlohmann::json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector to_vector(const nlohmann::json& j)
{
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}
} // namespace

nlohmann::json model_to_json(const HetGPModel& model)
{
  const DesignSet& data = model.design();
  const HetGPParams& p = model.params();
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < data.n(); ++i)
    rows.push_back(vec(data.unique_x.row(i).transpose()));
  return {
      {"format", "hetbatch-model"},
      {"version", 1},
      {"dim", data.dim()},
      {"homoskedastic", model.homoskedastic()},
      {"params", {{"theta", vec(p.theta)}, {"theta_noise", vec(p.theta_noise)}, {"g_noise", p.g_noise},
                  {"log_delta", vec(p.log_delta)}}},
      {"design", {{"unique_x", rows}, {"responses", data.responses}}},
      {"diagnostics", {{"loglik", model.likelihood().total}, {"tau2", model.tau2()},
                       {"tau2_noise", model.tau2_noise()}, {"nu", model.nu()}}},
  };
}

HetGPModel model_from_json(const nlohmann::json& j)
{
  try
  {
    if (j.at("format").get<std::string>() != "hetbatch-model" || j.at("version").get<int>() != 1)
      throw InputError("snapshot: unsupported format or version");
    const Index d = j.at("dim").get<Index>();
    const auto& rows = j.at("design").at("unique_x");
    Matrix X(static_cast<Index>(rows.size()), d);
    for (size_t i = 0; i < rows.size(); ++i)
    {
      const Vector r = to_vector(rows[i]);
      if (r.size() != d)
        throw InputError("snapshot: design row " + std::to_string(i) + " has wrong dimension");
      X.row(static_cast<Index>(i)) = r.transpose();
    }
    DesignSet data = make_design(std::move(X), j.at("design").at("responses").get<std::vector<std::vector<double>>>());
    const auto& pj = j.at("params");
    HetGPParams p;
    p.theta = to_vector(pj.at("theta"));
    p.theta_noise = to_vector(pj.at("theta_noise"));
    p.g_noise = pj.at("g_noise").get<double>();
    p.log_delta = to_vector(pj.at("log_delta"));
    return HetGPModel::from_params(std::move(data), std::move(p), j.at("homoskedastic").get<bool>());
  }
  catch (const nlohmann::json::exception& e)
  {
    throw InputError(std::string("snapshot: malformed JSON: ") + e.what());
  }
}

void write_file_atomic(const std::string& path, const std::string& content)
{
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw InputError("cannot write " + tmp);
    out << content;
    if (!out)
      throw InputError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void save_model(const HetGPModel& model, const std::string& path) { write_file_atomic(path, model_to_json(model).dump(1)); }

HetGPModel load_model(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open model snapshot " + path);
  nlohmann::json j;
  try
  {
    in >> j;
  }
  catch (const nlohmann::json::exception& e)
  {
    throw InputError("snapshot " + path + ": " + e.what());
  }
  return model_from_json(j);
}
} // namespace hetbatch
