#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace vitstr {

// 8-bit grayscale raster, row-major.
struct GrayImage {
    size_t width = 0;
    size_t height = 0;
    std::vector<uint8_t> pixels;

    GrayImage() = default;
    GrayImage(size_t w, size_t h, uint8_t fill = 0) : width(w), height(h), pixels(w * h, fill) {}

    uint8_t& at(size_t x, size_t y) { return pixels[y * width + x]; }
    uint8_t at(size_t x, size_t y) const { return pixels[y * width + x]; }

    bool operator==(const GrayImage& o) const {
        return width == o.width && height == o.height && pixels == o.pixels;
    }
};

inline uint8_t clamp_u8(double v) {
    return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Bilinear sample at real coordinates with edge replication.
inline double sample_bilinear(const GrayImage& img, double x, double y) {
    double fx = std::floor(x), fy = std::floor(y);
    double ax = x - fx, ay = y - fy;
    auto pick = [&](long px, long py) -> double {
        px = std::clamp(px, 0L, static_cast<long>(img.width) - 1);
        py = std::clamp(py, 0L, static_cast<long>(img.height) - 1);
        return img.pixels[static_cast<size_t>(py) * img.width + static_cast<size_t>(px)];
    };
    long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
    double top = pick(x0, y0) * (1 - ax) + pick(x0 + 1, y0) * ax;
    double bot = pick(x0, y0 + 1) * (1 - ax) + pick(x0 + 1, y0 + 1) * ax;
    return top * (1 - ay) + bot * ay;
}

// Inverse warp: map(x, y) yields the source coordinates for each output pixel.
template <class MapFn>
GrayImage warp(const GrayImage& src, MapFn&& map) {
    GrayImage out(src.width, src.height);
    for (size_t y = 0; y < src.height; ++y) {
        for (size_t x = 0; x < src.width; ++x) {
            auto [sx, sy] = map(static_cast<double>(x), static_cast<double>(y));
            out.at(x, y) = clamp_u8(sample_bilinear(src, sx, sy));
        }
    }
    return out;
}

// Binary (P5) portable graymap.
inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot write " + path.string());
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw std::runtime_error("pgm: failed writing " + path.string());
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path.string());
    auto next_token = [&]() -> std::string {
        std::string tok;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                while (in.get(c) && c != '\n') {
                }
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok.push_back(c);
        }
        return tok;
    };
    if (next_token() != "P5") throw std::runtime_error("pgm: " + path.string() + " is not binary PGM");
    long w = std::stol(next_token());
    long h = std::stol(next_token());
    long maxval = std::stol(next_token());
    if (w <= 0 || h <= 0 || maxval != 255) {
        throw std::runtime_error("pgm: unsupported header in " + path.string());
    }
    GrayImage img(static_cast<size_t>(w), static_cast<size_t>(h));
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw std::runtime_error("pgm: truncated pixel data in " + path.string());
    }
    return img;
}

}  // namespace vitstr
