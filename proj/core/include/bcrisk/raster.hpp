#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bcrisk::raster {

/// Row-major 8-bit raster. Tissue masks treat any nonzero value as tissue.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // width * height

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }

    static Image filled(std::size_t width, std::size_t height, std::uint8_t value);
};

/// Reads a PGM mask (P2 or P5). Throws DataError on malformed input.
Image read_pgm(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM (P5).
void write_pgm(const Image& image, const std::filesystem::path& path);

/// Row-major RGB image, written as binary PPM (P6).
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // 3 * width * height
};

void write_ppm(const RgbImage& image, const std::filesystem::path& path);

}  // namespace bcrisk::raster
