#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmgen::prompts {

enum class PromptId { EvalPipeline, Extraction, Summary, Reannotation };
enum class ExpectedOutput { PlainCaption, PatternJson, SummaryJson };

struct PromptTemplate {
    PromptId id;
    std::string_view text;
    ExpectedOutput expected_output;
};

PromptId parse_prompt_id(std::string_view s);
std::string_view to_string(PromptId id);
/// Fixture file name under prompts/ (e.g. "eval_pipeline.txt").
std::string_view fixture_name(PromptId id);

PromptTemplate get_template(PromptId id);

/// Lowercase hex SHA-256 of the shipped template bytes.
std::string_view pinned_digest(PromptId id);

/// Returns the stored template verbatim.
std::string render(PromptId id);

using FrequencyEntries = std::vector<std::pair<std::string, std::size_t>>;

/// Summary prompt with the frequency map appended as an ordered JSON object
/// under "# Input Data". `top_k` truncates the (already ranked) entries.
std::string render_summary(const FrequencyEntries& ranked,
                           std::optional<std::size_t> top_k = std::nullopt);

namespace detail {
std::string_view embedded_text(PromptId id);
}

} // namespace mmgen::prompts
