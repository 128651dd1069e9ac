#include "bcrisk/raster.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "bcrisk/errors.hpp"

namespace bcrisk::raster {

Image Image::filled(std::size_t width, std::size_t height, std::uint8_t value) {
    return Image{width, height, std::vector<std::uint8_t>(width * height, value)};
}

namespace {

// Skips whitespace and '#' comment lines between PNM header tokens.
std::string next_token(std::istream& in) {
    std::string token;
    while (in >> token) {
        if (token[0] != '#') return token;
        std::string rest;
        std::getline(in, rest);
    }
    throw DataError("pgm: truncated header");
}

std::size_t parse_size(const std::string& token, const char* what) {
    try {
        const long long v = std::stoll(token);
        if (v <= 0) throw DataError(std::string("pgm: non-positive ") + what);
        return static_cast<std::size_t>(v);
    } catch (const std::invalid_argument&) {
        throw DataError(std::string("pgm: malformed ") + what);
    }
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("pgm: cannot open '" + path.string() + "'");

    const std::string magic = next_token(in);
    if (magic != "P2" && magic != "P5") {
        throw DataError("pgm: '" + path.string() + "' is not a P2/P5 PGM");
    }
    Image img;
    img.width = parse_size(next_token(in), "width");
    img.height = parse_size(next_token(in), "height");
    const std::size_t maxval = parse_size(next_token(in), "maxval");
    if (maxval > 255) throw DataError("pgm: only 8-bit rasters supported");

    img.pixels.resize(img.width * img.height);
    if (magic == "P5") {
        in.get();  // single whitespace byte after maxval
        in.read(reinterpret_cast<char*>(img.pixels.data()),
                static_cast<std::streamsize>(img.pixels.size()));
        if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
            throw DataError("pgm: truncated pixel data in '" + path.string() + "'");
        }
    } else {
        for (auto& px : img.pixels) {
            long long v = -1;
            try {
                v = std::stoll(next_token(in));
            } catch (const std::invalid_argument&) {
            }
            if (v < 0 || v > 255) throw DataError("pgm: pixel value out of range");
            px = static_cast<std::uint8_t>(v);
        }
    }
    return img;
}

void write_pgm(const Image& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("pgm: cannot write '" + path.string() + "'");
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
}

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("ppm: cannot write '" + path.string() + "'");
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
}

}  // namespace bcrisk::raster
