#pragma once

#include "hetbatch/types.hpp"

#include <cstdint>
#include <random>

namespace hetbatch
{
using Rng = std::mt19937_64;

/// Latin hypercube sample of n points in [0,1]^d: one point per 1/n stratum in every column.
Matrix random_lhs(Index n, Index d, Rng& rng);

/// Smallest Euclidean distance between distinct rows.
double min_pairwise_distance(const Matrix& X);

/// Best of n_candidates random LHS designs under the maximin criterion.
Matrix maximin_lhs(Index n, Index d, std::uint64_t seed, int n_candidates = 100);

/// Greedy sequential maximin: picks m points from a candidate LHS, each maximizing
/// its minimum distance to `existing` and to the points already picked.
Matrix sequential_maximin(const Matrix& existing, Index m, std::uint64_t seed, Index n_candidates = 0);
} // namespace hetbatch
