#pragma once

#include "mmgen/metrics/consistency.hpp"
#include "mmgen/pipeline/scoring.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmgen::report {

enum class Format { Json, Csv, Markdown };
Format parse_format(std::string_view s);

/// One model's headline line (its entry for the headline generator).
struct LeaderboardRow {
    std::string model;
    std::string generator;
    std::optional<double> sim;
    std::optional<double> fid;
    double coverage = 1.0;
    pipeline::CaptionStats captions;
    std::map<corpus::Pattern, metrics::PatternStat> per_pattern;
};

/// Rows ordered by SIM descending (missing SIM last), then model name.
std::vector<LeaderboardRow> leaderboard(const std::vector<pipeline::ScoreReport>& reports);

/// Three decimals, ties to even, never "-0.000".
std::string fixed3(double x);

/// Deterministic rendering; needs at least one report (throws
/// Error("NoReports") otherwise).
std::string render(const std::vector<pipeline::ScoreReport>& reports, Format fmt);

struct DataFile {
    std::string name;
    std::string content;
};

/// Plot data comparing generators: per generator and metric a CSV series
/// (model_index, model, score), plus one Spearman matrix per metric.
/// Throws ModelSetMismatch (including when fewer than two generators).
std::vector<DataFile> consistency_series(const std::vector<pipeline::ScoreReport>& reports);

/// Writes consistency_series output under `<run_dir>/report/`.
std::vector<std::filesystem::path> write_consistency_series(const std::filesystem::path& run_dir,
                                                            const std::vector<pipeline::ScoreReport>& reports);

} // namespace mmgen::report
