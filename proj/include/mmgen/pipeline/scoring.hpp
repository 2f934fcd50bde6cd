#pragma once

#include "mmgen/corpus/manifest.hpp"
#include "mmgen/metrics/aggregate.hpp"
#include "mmgen/metrics/sim.hpp"
#include "mmgen/pipeline/config.hpp"
#include "mmgen/prompts/caption.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmgen::pipeline {

enum class StageStatus { Pending, Ok, Failed };

struct StageState {
    StageStatus status = StageStatus::Pending;
    std::string error_kind;
    std::string reason;
    double elapsed_ms = 0;
};

/// Per-record stages. Embed covers both the input and generated embeddings.
enum class RecordStage { Describe = 0, Generate = 1, Embed = 2, Score = 3 };
inline constexpr std::array<const char*, 4> kRecordStageNames{"describe", "generate", "embed", "score"};

/// Outcome for one (image, lmm, generator).
struct EvalRecord {
    std::string image_id;
    std::string lmm;
    std::string generator;
    std::uint64_t seed = 0;
    std::optional<std::string> caption;
    std::optional<std::string> caption_hash;
    std::optional<prompts::CaptionQuality> caption_quality;
    std::optional<std::string> generated_image;     // sha256 of the PNG
    std::optional<std::string> input_embedding;     // sha256 of the .f64 file
    std::optional<std::string> generated_embedding; // sha256 of the .f64 file
    std::optional<double> sim;
    std::array<StageState, 4> stages;

    StageState& stage(RecordStage s) { return stages[static_cast<std::size_t>(s)]; }
    [[nodiscard]] const StageState& stage(RecordStage s) const { return stages[static_cast<std::size_t>(s)]; }
    /// First failed stage, if any.
    [[nodiscard]] std::optional<RecordStage> failed_stage() const;

    [[nodiscard]] nlohmann::json to_json() const;
    static EvalRecord from_json(const nlohmann::json& j);
};

struct CaptionStats {
    std::size_t captions = 0;
    double mean_words = 0.0;
    std::size_t in_range = 0;
    std::size_t boilerplate_prefix = 0;
    std::size_t boilerplate_suffix = 0;
};

/// Scores for one (lmm, generator) pair.
struct EntryScore {
    std::string lmm;
    std::string generator;
    std::size_t items = 0;
    std::size_t scored = 0;
    std::size_t failed = 0;
    double coverage = 1.0; // 1 - failed / items
    std::optional<double> sim; // micro mean; empty when nothing scored
    std::map<corpus::Pattern, metrics::PatternStat> per_pattern;
    std::optional<double> fid;
    std::string fid_error;
    std::size_t fid_samples = 0;
    bool ridge_applied = false;
    double ridge_epsilon = 0.0;
    CaptionStats captions;
    std::map<std::string, std::size_t> failures_by_stage;
    std::map<std::string, std::size_t> failures_by_kind;
};

struct ScoreReport {
    std::string aggregation = "micro";
    std::string covariance_divisor = "n-1";
    bool fid_normalize = false;
    std::string headline_generator;
    std::vector<std::string> lmms;       // config order
    std::vector<std::string> generators; // config order
    std::string embedder;
    std::size_t embedding_dim = 0;
    std::string prompt;
    std::string prompt_sha256;
    double temperature = 0.0;
    int max_tokens = 0;
    std::uint64_t base_seed = 0;
    std::string taxonomy_version;
    std::size_t images = 0;
    std::size_t items = 0;
    std::size_t failed = 0;
    double coverage = 1.0;
    std::vector<EntryScore> entries; // lmm-major, both in config order

    [[nodiscard]] const EntryScore* entry(std::string_view lmm, std::string_view generator) const;
    [[nodiscard]] nlohmann::json to_json() const;
    static ScoreReport from_json(const nlohmann::json& j);
    /// Canonical file bytes.
    [[nodiscard]] std::string serialize() const;
};

ScoreReport load_report(const std::filesystem::path& report_json);

/// Run-directory layout.
namespace layout {
inline constexpr const char* kConfig = "config.json";
inline constexpr const char* kManifest = "manifest.jsonl";
inline constexpr const char* kJournal = "journal.jsonl";
inline constexpr const char* kRecords = "records.jsonl";
inline constexpr const char* kReport = "report.json";
std::filesystem::path caption(const std::filesystem::path& run_dir, const std::string& sha);
std::filesystem::path image(const std::filesystem::path& run_dir, const std::string& sha);
std::filesystem::path embedding(const std::filesystem::path& run_dir, const std::string& sha);
} // namespace layout

/// Stores a vector as little-endian float64 under its content hash.
std::string write_embedding(const std::filesystem::path& run_dir, std::span<const double> v);
/// Throws IntegrityError naming the file when its bytes do not hash to `sha`.
metrics::Embedding read_embedding(const std::filesystem::path& run_dir, const std::string& sha);

/// Stage D and aggregation over records whose first three stages are
/// settled. Fills each record's sim / score stage and returns the report.
ScoreReport score_records(const std::filesystem::path& run_dir, const RunConfig& config,
                          const corpus::Manifest& manifest, std::vector<EvalRecord>& records);

/// Recomputes the report from persisted records and embeddings only, then
/// rewrites report.json. No network access.
ScoreReport score_only(const std::filesystem::path& run_dir);

std::vector<EvalRecord> load_records(const std::filesystem::path& run_dir);
void save_records(const std::filesystem::path& run_dir, const std::vector<EvalRecord>& records);

} // namespace mmgen::pipeline
