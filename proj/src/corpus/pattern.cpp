#include "mmgen/corpus/pattern.hpp"

#include "mmgen/common/error.hpp"

namespace mmgen::corpus {

namespace {

struct Entry {
    std::string_view name;
    std::string_view explanation;
};

constexpr std::array<Entry, kPatternCount> kEntries{{
    {"Surreal", "This pattern is characterized by its prevalence in depicting scenes that mix "
                "elements of fantasy with reality, often creating imaginative or dream-like "
                "visuals."},
    {"Technology", "Highlights themes related to technology, futurism, and modernity, "
                   "encompassing various aspects of technological advances and speculative "
                   "futures."},
    {"Natural", "Encompasses imagery related to natural sceneries or elements, drawing on the "
                "beauty and complexity of the natural world."},
    {"Artistic", "Captures various artistic styles and decorations, reflecting creativity, "
                 "design elements, and unique art styles."},
    {"Color", "Focuses on the use and significance of color in images, including aspects like "
              "color contrast, schemes, and gradients to convey moods or themes."},
    {"Count", "Deals with patterns that emphasize numerical aspects, quantities, and the "
              "presence of multiple elements, indicating a focus on enumeration or amount."},
    {"Orientation", "Emphasizes the directionality and alignment within images, capturing how "
                    "subjects or elements are oriented or directed."},
    {"Position", "Concerns the relative placement and spatial relationships between elements "
                 "within an image, highlighting how objects are positioned."},
    {"Contextual", "Fuses themes of environmental and relational context, shedding light on the "
                   "settings and the interconnections within images."},
    {"Text", "Identifies patterns where text is a significant component, showcasing how textual "
             "content contributes to the overall message or theme of the image."},
    {"Symbol", "Centers on the use of symbols and symbolic elements to convey deeper meanings or "
               "concepts, drawing from various symbolic traditions."},
    {"Geometry", "Illustrates a focus on geometric shapes, patterns, and arrangements, "
                 "underlining the role of structure and form in images."},
    {"Motion", "Captures the sense of movement or dynamics within images, depicting actions or "
               "the concept of motion through visual elements."},
}};

} // namespace

const std::array<Pattern, kPatternCount>& all_patterns() {
    static const std::array<Pattern, kPatternCount> all = [] {
        std::array<Pattern, kPatternCount> a{};
        for (std::size_t i = 0; i < kPatternCount; ++i) a[i] = static_cast<Pattern>(i);
        return a;
    }();
    return all;
}

std::string_view name(Pattern p) { return kEntries.at(static_cast<std::size_t>(p)).name; }

std::string_view explanation(Pattern p) {
    return kEntries.at(static_cast<std::size_t>(p)).explanation;
}

std::optional<Pattern> try_parse_pattern(std::string_view text) {
    for (std::size_t i = 0; i < kPatternCount; ++i) {
        if (kEntries[i].name == text) return static_cast<Pattern>(i);
    }
    return std::nullopt;
}

Pattern parse_pattern(std::string_view text) {
    if (auto p = try_parse_pattern(text)) return *p;
    throw UnknownPattern("not one of the 13 taxonomy patterns: \"" + std::string(text) + "\"");
}

} // namespace mmgen::corpus
