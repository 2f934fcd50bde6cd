#pragma once

#include "mmgen/clients/clients.hpp"
#include "mmgen/corpus/manifest.hpp"
#include "mmgen/prompts/annotation.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace mmgen::benchcons {

/// One image's pattern annotation from the Extraction or Re-annotation
/// prompt. A failed item keeps the last raw text and the error.
struct ExtractionResult {
    std::string image_id;
    std::optional<prompts::PatternAnnotation> annotation;
    std::string raw;
    std::string error_kind;
    std::string error;
    int attempts = 0;

    [[nodiscard]] bool ok() const noexcept { return annotation.has_value(); }
    [[nodiscard]] nlohmann::json to_json() const;
    static ExtractionResult from_json(const nlohmann::json& j);
};

struct ConstructOptions {
    int workers = 4;
    double temperature = 0.0;
    int max_tokens = 1024;
};

/// Extraction prompt per image, unrestricted parsing. An unparsable answer
/// is re-asked once; the second failure becomes a failure entry. Transport
/// and provider errors are item failures too, except AuthError.
/// Results are in manifest order, one per image. Throws EmptyCorpus.
std::vector<ExtractionResult> extract_patterns(const corpus::Manifest& manifest, clients::LmmClient& lmm,
                                               const ConstructOptions& opts = {});

/// Same flow with the Re-annotation prompt and taxonomy-restricted parsing.
std::vector<ExtractionResult> reannotate(const corpus::Manifest& manifest, clients::LmmClient& lmm,
                                         const ConstructOptions& opts = {});

/// Pattern-name frequencies, count descending then name ascending.
struct FrequencyTable {
    std::vector<std::pair<std::string, std::size_t>> entries;

    [[nodiscard]] std::size_t distinct_names() const noexcept { return entries.size(); }
    [[nodiscard]] std::size_t occurrences() const noexcept;
    [[nodiscard]] nlohmann::json to_json() const;
    static FrequencyTable from_json(const nlohmann::json& j);
};

FrequencyTable tally(const std::vector<ExtractionResult>& results);
FrequencyTable make_frequency_table(std::vector<std::pair<std::string, std::size_t>> counts);

/// Sends the Summary prompt with the table; the answer is advisory and does
/// not alter the fixed taxonomy. Throws Error("EmptyFrequencyTable"), and
/// NoJsonFound / SchemaMismatch carrying the raw text in the message.
prompts::SummaryProposal summarize(const FrequencyTable& freq, clients::LmmClient& lmm,
                                   std::optional<std::size_t> top_k = std::nullopt,
                                   const ConstructOptions& opts = {});

/// Manifest whose pattern sets come from successful restricted results;
/// images without one are dropped.
corpus::Manifest annotated_manifest(const corpus::Manifest& source, const std::vector<ExtractionResult>& results);

std::string serialize_results(const std::vector<ExtractionResult>& results);
std::vector<ExtractionResult> parse_results(std::string_view jsonl);

} // namespace mmgen::benchcons
