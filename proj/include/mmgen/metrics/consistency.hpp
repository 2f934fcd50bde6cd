#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace mmgen::metrics {

struct ModelScore {
    std::string model;
    double sim = 0.0;
    double fid = 0.0; // NaN when unavailable
};

/// 1-based ranks, ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation. Without ties this is 1 - 6 sum(d^2) / (n(n^2-1));
/// with ties, Pearson correlation of average ranks. NaN if any input is
/// non-finite or a ranking is constant.
double spearman(std::span<const double> a, std::span<const double> b);

struct ConsistencyReport {
    std::vector<std::string> generators; // sorted
    std::vector<std::string> models;     // sorted; series index = position here
    std::vector<std::vector<double>> sim_rho;
    std::vector<std::vector<double>> fid_rho;
    std::map<std::string, std::vector<double>> sim_series; // per generator, in model order
    std::map<std::string, std::vector<double>> fid_series;
};

/// Throws ModelSetMismatch if fewer than two generators are given or their
/// model sets differ.
ConsistencyReport consistency(const std::map<std::string, std::vector<ModelScore>>& tables);

} // namespace mmgen::metrics
