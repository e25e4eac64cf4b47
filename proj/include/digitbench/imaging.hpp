#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/image.hpp"

namespace digitbench {

/// Interleaved H x W x 3 color image, channels in [0, 1].
struct RgbImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;  // (r, g, b) per pixel, row-major
};

struct PreprocessConfig {
    std::size_t target_side = 28;
    double gaussian_sigma = 0.8;
    bool deskew_enabled = true;

    void validate() const {
        if (target_side < 8) throw ParameterError("preprocess: target_side must be >= 8");
        if (!(gaussian_sigma > 0.0)) throw ParameterError("preprocess: gaussian_sigma must be > 0");
    }
};

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
inline GrayImage to_grayscale(const RgbImage& rgb) {
    if (rgb.height == 0 || rgb.width == 0) throw DimensionError("to_grayscale: empty image");
    if (rgb.data.size() != rgb.height * rgb.width * 3)
        throw DimensionError("to_grayscale: channel data does not match H*W*3");
    std::vector<double> out(rgb.height * rgb.width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double r = rgb.data[3 * i], g = rgb.data[3 * i + 1], b = rgb.data[3 * i + 2];
        if (!(r >= 0 && r <= 1 && g >= 0 && g <= 1 && b >= 0 && b <= 1))
            throw InputError("to_grayscale: channel value outside [0,1]");
        out[i] = std::min(1.0, 0.299 * r + 0.587 * g + 0.114 * b);
    }
    return GrayImage(rgb.height, rgb.width, std::move(out));
}

/// Bilinear resize with half-pixel centers: src = (dst + 0.5) * scale - 0.5,
/// clamped to the border.
inline GrayImage resize_bilinear(const GrayImage& img, std::size_t out_h, std::size_t out_w) {
    if (img.empty()) throw DimensionError("resize_bilinear: empty input");
    if (out_h == 0 || out_w == 0) throw DimensionError("resize_bilinear: zero target dimension");

    const double sy = static_cast<double>(img.height()) / static_cast<double>(out_h);
    const double sx = static_cast<double>(img.width()) / static_cast<double>(out_w);
    const double max_y = static_cast<double>(img.height() - 1);
    const double max_x = static_cast<double>(img.width() - 1);

    GrayImage out(out_h, out_w);
    for (std::size_t r = 0; r < out_h; ++r) {
        const double y = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0, max_y);
        const auto y0 = static_cast<std::size_t>(std::floor(y));
        const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
        const double fy = y - static_cast<double>(y0);
        for (std::size_t c = 0; c < out_w; ++c) {
            const double x = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0, max_x);
            const auto x0 = static_cast<std::size_t>(std::floor(x));
            const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
            const double fx = x - static_cast<double>(x0);
            const double top = img(y0, x0) * (1 - fx) + img(y0, x1) * fx;
            const double bot = img(y1, x0) * (1 - fx) + img(y1, x1) * fx;
            out.set(r, c, top * (1 - fy) + bot * fy);
        }
    }
    return out;
}

/// Maps any integer index onto [0, n) by mirror reflection with the edge
/// sample repeated: (c b a | a b c | c b a).
inline std::size_t reflect_index(long long i, std::size_t n) {
    const auto period = static_cast<long long>(2 * n);
    long long m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < static_cast<long long>(n) ? m : period - 1 - m);
}

/// Normalized 1-D Gaussian taps for offsets -radius..radius, radius = ceil(3 sigma).
inline std::vector<double> gaussian_kernel_1d(double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("gaussian kernel: sigma must be > 0");
    const auto radius = static_cast<long long>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (long long d = -radius; d <= radius; ++d) {
        const double w = std::exp(-static_cast<double>(d * d) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(d + radius)] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("gaussian_blur: sigma must be > 0");
    if (img.empty()) throw DimensionError("gaussian_blur: empty input");
    const std::vector<double> k = gaussian_kernel_1d(sigma);
    const auto radius = static_cast<long long>(k.size() / 2);
    const std::size_t h = img.height(), w = img.width();

    std::vector<double> tmp(h * w, 0.0);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            double acc = 0.0;
            for (long long d = -radius; d <= radius; ++d)
                acc += k[static_cast<std::size_t>(d + radius)] *
                       img(r, reflect_index(static_cast<long long>(c) + d, w));
            tmp[r * w + c] = acc;
        }

    GrayImage out(h, w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            double acc = 0.0;
            for (long long d = -radius; d <= radius; ++d)
                acc += k[static_cast<std::size_t>(d + radius)] *
                       tmp[reflect_index(static_cast<long long>(r) + d, h) * w + c];
            out.set(r, c, acc);
        }
    return out;
}

/// Intensity-weighted centroid and second-order central moments.
struct ImageMoments {
    double mass = 0.0;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    double mu11 = 0.0;
    double mu02 = 0.0;
    double mu20 = 0.0;
};

inline ImageMoments moments(const GrayImage& img) {
    ImageMoments m;
    for (std::size_t r = 0; r < img.height(); ++r)
        for (std::size_t c = 0; c < img.width(); ++c) {
            const double v = img(r, c);
            m.mass += v;
            m.centroid_x += v * static_cast<double>(c);
            m.centroid_y += v * static_cast<double>(r);
        }
    if (m.mass <= 0.0) return m;
    m.centroid_x /= m.mass;
    m.centroid_y /= m.mass;
    for (std::size_t r = 0; r < img.height(); ++r)
        for (std::size_t c = 0; c < img.width(); ++c) {
            const double v = img(r, c);
            const double dx = static_cast<double>(c) - m.centroid_x;
            const double dy = static_cast<double>(r) - m.centroid_y;
            m.mu11 += v * dx * dy;
            m.mu02 += v * dy * dy;
            m.mu20 += v * dx * dx;
        }
    return m;
}

/// Horizontal slant mu11 / mu02 (0 when the vertical spread vanishes).
inline double skew(const GrayImage& img) {
    const ImageMoments m = moments(img);
    if (m.mass <= 0.0 || m.mu02 < 1e-12) return 0.0;
    return m.mu11 / m.mu02;
}

/// Horizontal shear x' = x - s (y - cy). Sampling is linear along x, zero
/// outside the image.
inline GrayImage shear_horizontal(const GrayImage& img, double s, double center_y) {
    GrayImage out(img.height(), img.width());
    const auto w = static_cast<long long>(img.width());
    for (std::size_t r = 0; r < img.height(); ++r) {
        const double offset = s * (static_cast<double>(r) - center_y);
        for (std::size_t c = 0; c < img.width(); ++c) {
            const double x = static_cast<double>(c) + offset;
            const double xf = std::floor(x);
            const auto x0 = static_cast<long long>(xf);
            const double fx = x - xf;
            const double a = (x0 >= 0 && x0 < w) ? img(r, static_cast<std::size_t>(x0)) : 0.0;
            const double b = (x0 + 1 >= 0 && x0 + 1 < w) ? img(r, static_cast<std::size_t>(x0 + 1)) : 0.0;
            out.set(r, c, a * (1 - fx) + b * fx);
        }
    }
    return out;
}

/// Removes slant by shearing rows about the intensity centroid so the
/// resulting mu11 vanishes. A positive skew shears rows above the centroid
/// right and rows below it left, a negative skew the reverse.
inline GrayImage deskew(const GrayImage& img) {
    const ImageMoments m = moments(img);
    if (m.mass <= 0.0) return img;
    const double s = m.mu02 < 1e-12 ? 0.0 : m.mu11 / m.mu02;
    if (s == 0.0) return img;
    return shear_horizontal(img, s, m.centroid_y);
}

/// resize -> blur -> deskew (when enabled).
inline GrayImage preprocess(const GrayImage& img, const PreprocessConfig& cfg) {
    cfg.validate();
    GrayImage out = resize_bilinear(img, cfg.target_side, cfg.target_side);
    out = gaussian_blur(out, cfg.gaussian_sigma);
    if (cfg.deskew_enabled) out = deskew(out);
    return out;
}

}  // namespace digitbench
