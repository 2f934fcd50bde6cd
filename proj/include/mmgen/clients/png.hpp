#pragma once

#include "mmgen/common/digest.hpp"

#include <cstdint>
#include <span>

namespace mmgen::clients {

/// Encodes 8-bit RGB pixels (row-major, width*height*3 bytes) as a PNG.
Bytes encode_png_rgb(std::uint32_t width, std::uint32_t height, std::span<const std::uint8_t> rgb);

Bytes solid_png(std::uint32_t width, std::uint32_t height, std::uint8_t r, std::uint8_t g, std::uint8_t b);

} // namespace mmgen::clients
