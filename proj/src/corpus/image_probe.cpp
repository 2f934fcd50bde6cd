#include "mmgen/corpus/image_probe.hpp"

#include "mmgen/common/error.hpp"

#include <algorithm>
#include <array>

namespace mmgen::corpus {

namespace {

std::uint32_t be16(std::span<const std::uint8_t> b, std::size_t i) {
    return (std::uint32_t{b[i]} << 8) | b[i + 1];
}
std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t i) {
    return (be16(b, i) << 16) | be16(b, i + 2);
}
std::uint32_t le16(std::span<const std::uint8_t> b, std::size_t i) {
    return std::uint32_t{b[i]} | (std::uint32_t{b[i + 1]} << 8);
}
std::uint32_t le24(std::span<const std::uint8_t> b, std::size_t i) {
    return le16(b, i) | (std::uint32_t{b[i + 2]} << 16);
}

[[noreturn]] void fail(const char* why) { throw UndecodableImage(why); }

ImageInfo probe_png(std::span<const std::uint8_t> b) {
    // signature(8) + length(4) + "IHDR"(4) + width(4) + height(4)
    if (b.size() < 24) fail("truncated PNG header");
    if (!std::equal(b.begin() + 12, b.begin() + 16, "IHDR")) fail("PNG missing IHDR chunk");
    return {ImageFormat::Png, be32(b, 16), be32(b, 20)};
}

ImageInfo probe_jpeg(std::span<const std::uint8_t> b) {
    std::size_t i = 2;
    while (i + 4 <= b.size()) {
        if (b[i] != 0xFF) fail("JPEG marker expected");
        const std::uint8_t marker = b[i + 1];
        if (marker == 0xFF) {
            ++i;
            continue;
        }
        if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) {
            i += 2;
            continue;
        }
        if (marker == 0xD9 || marker == 0xDA) break;
        const std::uint32_t len = be16(b, i + 2);
        const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 &&
                         marker != 0xCC;
        if (sof) {
            if (i + 9 > b.size()) fail("truncated JPEG SOF segment");
            return {ImageFormat::Jpeg, be16(b, i + 7), be16(b, i + 5)};
        }
        if (len < 2) fail("bad JPEG segment length");
        i += 2 + len;
    }
    fail("JPEG without frame header");
}

ImageInfo probe_webp(std::span<const std::uint8_t> b) {
    if (b.size() < 30) fail("truncated WebP header");
    const auto chunk = std::string_view(reinterpret_cast<const char*>(b.data()) + 12, 4);
    if (chunk == "VP8 ") {
        if (b[23] != 0x9D || b[24] != 0x01 || b[25] != 0x2A) fail("bad VP8 start code");
        return {ImageFormat::WebP, le16(b, 26) & 0x3FFF, le16(b, 28) & 0x3FFF};
    }
    if (chunk == "VP8L") {
        if (b[20] != 0x2F) fail("bad VP8L signature");
        const std::uint32_t bits = b[21] | (b[22] << 8) | (b[23] << 16) | (std::uint32_t{b[24]} << 24);
        return {ImageFormat::WebP, (bits & 0x3FFF) + 1, ((bits >> 14) & 0x3FFF) + 1};
    }
    if (chunk == "VP8X") {
        return {ImageFormat::WebP, le24(b, 24) + 1, le24(b, 27) + 1};
    }
    fail("unknown WebP chunk");
}

} // namespace

ImageInfo probe_image(std::span<const std::uint8_t> b) {
    static constexpr std::array<std::uint8_t, 8> png_sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    ImageInfo info{};
    if (b.size() >= 8 && std::equal(png_sig.begin(), png_sig.end(), b.begin())) {
        info = probe_png(b);
    } else if (b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF) {
        info = probe_jpeg(b);
    } else if (b.size() >= 12 && std::equal(b.begin(), b.begin() + 4, "RIFF") &&
               std::equal(b.begin() + 8, b.begin() + 12, "WEBP")) {
        info = probe_webp(b);
    } else {
        fail("not a PNG, JPEG or WebP image");
    }
    if (info.width == 0 || info.height == 0) fail("image has zero dimension");
    return info;
}

std::string_view mime_type(ImageFormat f) {
    switch (f) {
    case ImageFormat::Png: return "image/png";
    case ImageFormat::Jpeg: return "image/jpeg";
    case ImageFormat::WebP: return "image/webp";
    }
    return "application/octet-stream";
}

} // namespace mmgen::corpus
