#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "digitbench/error.hpp"

namespace digitbench {

/// Row-major grayscale image with intensities in [0, 1].
class GrayImage {
public:
    GrayImage() = default;

    GrayImage(std::size_t height, std::size_t width, double fill = 0.0)
        : height_(height), width_(width), pixels_(height * width, fill) {
        if (height == 0 || width == 0) throw DimensionError("GrayImage: empty dimensions");
        check_range(fill);
    }

    GrayImage(std::size_t height, std::size_t width, std::vector<double> pixels)
        : height_(height), width_(width), pixels_(std::move(pixels)) {
        if (height == 0 || width == 0) throw DimensionError("GrayImage: empty dimensions");
        if (pixels_.size() != height * width)
            throw DimensionError("GrayImage: pixel count does not match height*width");
        for (double v : pixels_) check_range(v);
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    double operator()(std::size_t row, std::size_t col) const noexcept {
        return pixels_[row * width_ + col];
    }

    /// Writes are clamped into [0, 1]; resampling code relies on this.
    void set(std::size_t row, std::size_t col, double v) noexcept {
        pixels_[row * width_ + col] = std::clamp(v, 0.0, 1.0);
    }

    std::span<const double> pixels() const noexcept { return pixels_; }

    double total() const noexcept {
        double s = 0.0;
        for (double v : pixels_) s += v;
        return s;
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    static void check_range(double v) {
        if (!(v >= 0.0 && v <= 1.0)) throw InputError("GrayImage: intensity outside [0,1]");
    }

    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> pixels_;
};

/// Binary (P5) 8-bit PGM writer. Intensities are rounded to the nearest level.
inline void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<unsigned char> bytes(img.size());
    auto px = img.pixels();
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<unsigned char>(std::lround(px[i] * 255.0));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

/// Reads P2 (ASCII) or P5 (binary, maxval < 256) PGM files.
inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    auto next_token = [&in, &path]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw IoError("truncated PGM header: " + path);
    };

    const std::string magic = next_token();
    if (magic != "P2" && magic != "P5") throw IoError("not a PGM file: " + path);
    std::size_t w = 0, h = 0;
    int maxval = 0;
    try {
        w = std::stoul(next_token());
        h = std::stoul(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::logic_error&) {
        throw IoError("malformed PGM header: " + path);
    }
    if (w == 0 || h == 0 || maxval <= 0 || maxval > 255) throw IoError("unsupported PGM geometry: " + path);

    std::vector<double> px(w * h);
    if (magic == "P5") {
        in.get();  // single whitespace after maxval
        std::vector<unsigned char> bytes(w * h);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw IoError("truncated PGM data: " + path);
        for (std::size_t i = 0; i < px.size(); ++i) px[i] = bytes[i] / static_cast<double>(maxval);
    } else {
        for (auto& v : px) {
            int level = 0;
            if (!(in >> level) || level < 0 || level > maxval) throw IoError("bad PGM sample: " + path);
            v = level / static_cast<double>(maxval);
        }
    }
    return GrayImage(h, w, std::move(px));
}

}  // namespace digitbench
