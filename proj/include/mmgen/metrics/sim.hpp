#pragma once

#include <span>
#include <vector>

namespace mmgen::metrics {

using Embedding = std::vector<double>;

/// Cosine similarity a.b / (|a||b|), clamped to [-1, 1].
/// Throws DimensionMismatch or ZeroVector.
double sim_score(std::span<const double> a, std::span<const double> b);

/// Element-wise sim_score over paired rows; OpenMP-parallel.
std::vector<double> sim_scores(const std::vector<Embedding>& a, const std::vector<Embedding>& b);

/// Serial twin of sim_scores, kept for tests and benchmarks.
std::vector<double> sim_scores_reference(const std::vector<Embedding>& a, const std::vector<Embedding>& b);

} // namespace mmgen::metrics
