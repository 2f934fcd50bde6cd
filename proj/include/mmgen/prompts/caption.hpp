#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mmgen::prompts {

inline constexpr std::size_t kCaptionMinWords = 20;
inline constexpr std::size_t kCaptionMaxWords = 60;

struct CaptionQuality {
    std::size_t word_count = 0;
    bool in_range = false;
    bool boilerplate_prefix = false;
    bool boilerplate_suffix = false;
    std::vector<std::string> markers;

    bool operator==(const CaptionQuality&) const = default;
};

/// Number of maximal runs of non-whitespace code points, where whitespace is
/// the Unicode White_Space set. Invalid UTF-8 bytes count as non-space.
std::size_t count_words(std::string_view text);

/// Pure and total: never throws, never mutates the caption.
CaptionQuality check_caption(std::string_view caption) noexcept;

} // namespace mmgen::prompts
