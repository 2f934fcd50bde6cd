#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mmgen::corpus {

/// The closed 13-entry image-pattern taxonomy. Enumerator order is the
/// canonical order used for serialization and report columns.
enum class Pattern : std::uint8_t {
    Surreal,
    Technology,
    Natural,
    Artistic,
    Color,
    Count,
    Orientation,
    Position,
    Contextual,
    Text,
    Symbol,
    Geometry,
    Motion,
};

inline constexpr std::size_t kPatternCount = 13;
inline constexpr std::string_view kTaxonomyVersion = "mmgen-13/v1";

const std::array<Pattern, kPatternCount>& all_patterns();

std::string_view name(Pattern p);
std::string_view explanation(Pattern p);

/// Exact, case-sensitive parse. Throws UnknownPattern for anything outside
/// the taxonomy.
Pattern parse_pattern(std::string_view text);
std::optional<Pattern> try_parse_pattern(std::string_view text);

} // namespace mmgen::corpus
