#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace mmgen::corpus {

enum class ImageFormat { Png, Jpeg, WebP };

struct ImageInfo {
    ImageFormat format;
    std::uint32_t width;
    std::uint32_t height;
};

/// Reads dimensions from the container header. Throws UndecodableImage when
/// the bytes are not a well-formed PNG, JPEG or WebP header.
ImageInfo probe_image(std::span<const std::uint8_t> bytes);

std::string_view mime_type(ImageFormat f);

} // namespace mmgen::corpus
