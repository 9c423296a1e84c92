#pragma once

#include "hetbatch/hetgp.hpp"

#include <string>
#include <vector>

namespace hetbatch
{
/// sqrt(mean((predicted mean - truth)^2)).
double rmspe(const HetGPModel& model, const Matrix& test_x, const Vector& truth);
double rmspe(const Vector& predicted, const Vector& truth);

/// mean(-log s2 - (y - mu)^2 / s2) with s2 = var_mean + noise; higher is better.
double score(const HetGPModel& model, const Matrix& test_x, const Vector& test_y);
double score(const Vector& mu, const Vector& s2, const Vector& y);

struct DistanceDiag
{
  std::vector<double> old_old;
  std::vector<double> new_new;
  std::vector<double> new_old;
};

/// Every pairwise Euclidean distance within and between two point sets.
DistanceDiag pairwise_distance_diag(const Matrix& old_x, const Matrix& new_x);

/// Long-format CSV: set,distance.
std::string distances_csv(const DistanceDiag& diag);

double median(std::vector<double> v);
} // namespace hetbatch
