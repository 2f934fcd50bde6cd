#include "mmgen/clients/png.hpp"

#include "mmgen/common/error.hpp"

#include <zlib.h>

#include <array>

namespace mmgen::clients {

namespace {

void put_be32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(Bytes& out, const char (&type)[5], std::span<const std::uint8_t> data) {
    put_be32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
    put_be32(out, static_cast<std::uint32_t>(crc));
}

} // namespace

Bytes encode_png_rgb(std::uint32_t width, std::uint32_t height, std::span<const std::uint8_t> rgb) {
    if (width == 0 || height == 0 || rgb.size() != std::size_t{width} * height * 3) {
        throw Error("PngError", "pixel buffer does not match dimensions");
    }
    Bytes raw;
    raw.reserve((std::size_t{width} * 3 + 1) * height);
    for (std::uint32_t y = 0; y < height; ++y) {
        raw.push_back(0); // filter: none
        const auto row = rgb.subspan(std::size_t{y} * width * 3, std::size_t{width} * 3);
        raw.insert(raw.end(), row.begin(), row.end());
    }
    uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
    Bytes z(zlen);
    if (compress2(z.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
        throw Error("PngError", "deflate failed");
    }
    z.resize(zlen);

    Bytes out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    Bytes ihdr;
    put_be32(ihdr, width);
    put_be32(ihdr, height);
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0}); // 8-bit depth, truecolor, deflate, no filter, no interlace
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", z);
    put_chunk(out, "IEND", {});
    return out;
}

Bytes solid_png(std::uint32_t width, std::uint32_t height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Bytes rgb(std::size_t{width} * height * 3);
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    }
    return encode_png_rgb(width, height, rgb);
}

} // namespace mmgen::clients
