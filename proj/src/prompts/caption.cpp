#include "mmgen/prompts/caption.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace mmgen::prompts {

namespace {

bool is_unicode_space(char32_t c) {
    switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return c >= 0x2000 && c <= 0x200A;
    }
}

// Decodes one code point; malformed sequences consume one byte and yield
// U+FFFD.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) {
        return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    };
    auto byte = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F); };
    if (b0 < 0x80) {
        i += 1;
        return b0;
    }
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        char32_t c = ((b0 & 0x1F) << 6) | byte(1);
        i += 2;
        return c;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        char32_t c = ((b0 & 0x0F) << 12) | (byte(1) << 6) | byte(2);
        i += 3;
        return c;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        char32_t c = ((b0 & 0x07) << 18) | (byte(1) << 12) | (byte(2) << 6) | byte(3);
        i += 4;
        return c;
    }
    i += 1;
    return 0xFFFD;
}

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view trim_ascii(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Openers seen when models talk about the caption instead of emitting it.
constexpr std::array<std::string_view, 12> kPrefixMarkers{
    "here is", "here's", "sure", "certainly", "of course", "image caption-prompt:",
    "caption-prompt:", "caption:", "prompt:", "the image caption-prompt", "**", "i'm sorry",
};

// Trailing commentary appended after the caption proper.
constexpr std::array<std::string_view, 8> kSuffixMarkers{
    "this caption", "this prompt", "this description", "note:", "explanation:",
    "this image caption-prompt", "word count", "let me know",
};

} // namespace

std::size_t count_words(std::string_view text) {
    std::size_t words = 0;
    bool in_word = false;
    std::size_t i = 0;
    while (i < text.size()) {
        const bool space = is_unicode_space(next_code_point(text, i));
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return words;
}

CaptionQuality check_caption(std::string_view caption) noexcept {
    CaptionQuality q;
    try {
        q.word_count = count_words(caption);
        q.in_range = q.word_count >= kCaptionMinWords && q.word_count <= kCaptionMaxWords;

        const std::string body = lower_ascii(trim_ascii(caption));
        for (auto m : kPrefixMarkers) {
            if (body.rfind(m, 0) == 0) {
                q.boilerplate_prefix = true;
                q.markers.push_back("prefix:" + std::string(m));
                break;
            }
        }
        // Suffix commentary shows up after a paragraph break or as a trailing
        // parenthetical/sentence starting with one of the markers.
        const auto last_break = body.rfind("\n\n");
        const std::string_view tail =
            last_break == std::string::npos ? std::string_view{} : std::string_view(body).substr(last_break);
        for (auto m : kSuffixMarkers) {
            if (!tail.empty() && tail.find(m) != std::string_view::npos) {
                q.boilerplate_suffix = true;
                q.markers.push_back("suffix:" + std::string(m));
                break;
            }
        }
    } catch (...) {
        // allocation failure only; report what was computed
    }
    return q;
}

} // namespace mmgen::prompts
