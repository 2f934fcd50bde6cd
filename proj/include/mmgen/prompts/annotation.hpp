#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mmgen::prompts {

/// Output of the Extraction / Re-annotation prompts.
struct PatternAnnotation {
    std::string description;
    std::vector<std::string> image_pattern;
    std::map<std::string, std::string> pattern_detail;

    bool operator==(const PatternAnnotation&) const = default;
};

/// Output of the Summary prompt (no description field).
struct SummaryProposal {
    std::vector<std::string> image_pattern;
    std::map<std::string, std::string> pattern_detail;
    std::string raw;
};

/// Returns the first balanced `{...}` span of `raw` that parses as a JSON
/// object, scanning left to right. Braces inside JSON strings are skipped.
std::optional<std::string> extract_json_object(std::string_view raw);

/// Throws NoJsonFound, SchemaMismatch(field) or, when `restricted`,
/// UnknownPattern for names outside the 13-pattern taxonomy.
PatternAnnotation parse_annotation(std::string_view raw, bool restricted);

std::string serialize_annotation(const PatternAnnotation& a);

SummaryProposal parse_summary(std::string_view raw);

} // namespace mmgen::prompts
