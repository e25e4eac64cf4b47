#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/image.hpp"
#include "digitbench/imaging.hpp"
#include "digitbench/matrix.hpp"
#include "digitbench/parallel.hpp"

namespace digitbench {

enum class FeatureMethod { Raw, Hog, Lbp, Gabor };

inline std::string_view to_string(FeatureMethod m) {
    switch (m) {
        case FeatureMethod::Raw: return "raw";
        case FeatureMethod::Hog: return "hog";
        case FeatureMethod::Lbp: return "lbp";
        case FeatureMethod::Gabor: return "gabor";
    }
    return "unknown";
}

inline FeatureMethod feature_method_from_string(std::string_view s) {
    if (s == "raw") return FeatureMethod::Raw;
    if (s == "hog") return FeatureMethod::Hog;
    if (s == "lbp") return FeatureMethod::Lbp;
    if (s == "gabor") return FeatureMethod::Gabor;
    throw ParameterError("unknown feature method '" + std::string(s) + "'");
}

struct FeatureVector {
    std::vector<double> values;
    FeatureMethod method = FeatureMethod::Raw;

    std::size_t dim() const noexcept { return values.size(); }
};

// ---------------------------------------------------------------------------
// HOG

struct HogParams {
    std::size_t cell_side = 4;
    std::size_t block_side = 2;
    std::size_t n_bins = 9;
    std::size_t block_stride = 1;
    bool signed_gradients = false;

    friend bool operator==(const HogParams&, const HogParams&) = default;
};

struct HogGeometry {
    std::size_t cells_y = 0, cells_x = 0;
    std::size_t blocks_y = 0, blocks_x = 0;

    std::size_t dim(const HogParams& p) const { return blocks_y * blocks_x * p.block_side * p.block_side * p.n_bins; }
};

inline HogGeometry hog_geometry(std::size_t height, std::size_t width, const HogParams& p) {
    if (p.cell_side == 0 || p.block_side == 0 || p.block_stride == 0)
        throw ParameterError("hog: cell_side, block_side and block_stride must be positive");
    if (p.n_bins < 2) throw ParameterError("hog: n_bins must be >= 2");
    if (height % p.cell_side != 0 || width % p.cell_side != 0)
        throw ParameterError("hog: cell_side does not divide the image side");
    HogGeometry g;
    g.cells_y = height / p.cell_side;
    g.cells_x = width / p.cell_side;
    if (p.block_side > g.cells_y || p.block_side > g.cells_x)
        throw ParameterError("hog: block_side exceeds the number of cells per side");
    g.blocks_y = (g.cells_y - p.block_side) / p.block_stride + 1;
    g.blocks_x = (g.cells_x - p.block_side) / p.block_stride + 1;
    return g;
}

/// Per-pixel gradient from [-1, 0, 1] with replicated borders.
struct Gradient {
    std::vector<double> magnitude;
    std::vector<double> orientation;  // degrees, [0, 180) unsigned or [0, 360) signed
};

inline Gradient image_gradient(const GrayImage& img, bool signed_gradients) {
    const std::size_t h = img.height(), w = img.width();
    Gradient g;
    g.magnitude.resize(h * w);
    g.orientation.resize(h * w);
    const double range = signed_gradients ? 360.0 : 180.0;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const double gx = img(r, std::min(c + 1, w - 1)) - img(r, c == 0 ? 0 : c - 1);
            const double gy = img(std::min(r + 1, h - 1), c) - img(r == 0 ? 0 : r - 1, c);
            double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            deg = std::fmod(deg, range);
            if (deg < 0) deg += range;
            if (deg >= range) deg -= range;
            g.magnitude[r * w + c] = std::hypot(gx, gy);
            g.orientation[r * w + c] = deg;
        }
    return g;
}

/// Unnormalized per-cell orientation histograms, laid out
/// [cell_y][cell_x][bin]. Bin b is centered at b * (range / n_bins); each
/// pixel splits its magnitude linearly between the two nearest centers,
/// wrapping around the orientation circle.
inline std::vector<double> hog_cell_histograms(const GrayImage& img, const HogParams& p) {
    const HogGeometry geo = hog_geometry(img.height(), img.width(), p);
    const Gradient grad = image_gradient(img, p.signed_gradients);
    const double bin_width = (p.signed_gradients ? 360.0 : 180.0) / static_cast<double>(p.n_bins);
    std::vector<double> hist(geo.cells_y * geo.cells_x * p.n_bins, 0.0);
    const std::size_t w = img.width();
    for (std::size_t r = 0; r < img.height(); ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const double mag = grad.magnitude[r * w + c];
            if (mag == 0.0) continue;
            const double pos = grad.orientation[r * w + c] / bin_width;
            const double lo = std::floor(pos);
            const double frac = pos - lo;
            const std::size_t b0 = static_cast<std::size_t>(lo) % p.n_bins;
            const std::size_t b1 = (b0 + 1) % p.n_bins;
            double* cell = &hist[((r / p.cell_side) * geo.cells_x + c / p.cell_side) * p.n_bins];
            cell[b0] += mag * (1.0 - frac);
            cell[b1] += mag * frac;
        }
    return hist;
}

/// L2-Hys in place: L2 normalize, clip at 0.2, renormalize. Zero blocks stay zero.
inline void l2_hys(std::span<double> v, double clip = 0.2) {
    auto norm = [&v] {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    double n = norm();
    if (n < 1e-12) {
        std::fill(v.begin(), v.end(), 0.0);
        return;
    }
    for (double& x : v) x = std::min(x / n, clip);
    n = norm();
    if (n < 1e-12) return;
    for (double& x : v) x /= n;
}

inline FeatureVector hog(const GrayImage& img, const HogParams& p = {}) {
    const HogGeometry geo = hog_geometry(img.height(), img.width(), p);
    const std::vector<double> cells = hog_cell_histograms(img, p);
    const std::size_t block_len = p.block_side * p.block_side * p.n_bins;

    FeatureVector fv;
    fv.method = FeatureMethod::Hog;
    fv.values.resize(geo.dim(p));
    std::size_t out = 0;
    for (std::size_t by = 0; by < geo.blocks_y; ++by)
        for (std::size_t bx = 0; bx < geo.blocks_x; ++bx) {
            std::span<double> block(fv.values.data() + out, block_len);
            std::size_t k = 0;
            for (std::size_t cy = 0; cy < p.block_side; ++cy)
                for (std::size_t cx = 0; cx < p.block_side; ++cx) {
                    const std::size_t cell = (by * p.block_stride + cy) * geo.cells_x + bx * p.block_stride + cx;
                    for (std::size_t b = 0; b < p.n_bins; ++b) block[k++] = cells[cell * p.n_bins + b];
                }
            l2_hys(block);
            out += block_len;
        }
    return fv;
}

// ---------------------------------------------------------------------------
// LBP

enum class LbpOutput { FlatImage, Histogram };

struct LbpParams {
    std::size_t neighbors = 10;
    std::size_t radius = 3;
    LbpOutput output = LbpOutput::FlatImage;

    friend bool operator==(const LbpParams&, const LbpParams&) = default;
};

/// Offsets (dy, dx) of the P circle samples; sample k sits at angle 2 pi k / P,
/// dy = -R sin, dx = R cos. Values within 1e-9 of an integer are snapped so
/// axis-aligned samples read exact pixels.
inline std::vector<std::pair<double, double>> lbp_offsets(const LbpParams& p) {
    std::vector<std::pair<double, double>> off(p.neighbors);
    auto snap = [](double v) {
        const double r = std::round(v);
        return std::abs(v - r) < 1e-9 ? r : v;
    };
    const auto radius = static_cast<double>(p.radius);
    for (std::size_t k = 0; k < p.neighbors; ++k) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(p.neighbors);
        off[k] = {snap(-radius * std::sin(a)), snap(radius * std::cos(a))};
    }
    return off;
}

/// Bilinear sample at fractional (y, x) inside the image; written as
/// a + f (b - a) so interpolating equal values is exact.
inline double sample_bilinear(const GrayImage& img, double y, double x) {
    const double yf = std::floor(y), xf = std::floor(x);
    const auto y0 = static_cast<std::size_t>(yf), x0 = static_cast<std::size_t>(xf);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1), x1 = std::min(x0 + 1, img.width() - 1);
    const double fy = y - yf, fx = x - xf;
    const double top = img(y0, x0) + fx * (img(y0, x1) - img(y0, x0));
    const double bot = img(y1, x0) + fx * (img(y1, x1) - img(y1, x0));
    return top + fy * (bot - top);
}

inline void validate_lbp(const GrayImage& img, const LbpParams& p) {
    if (p.neighbors < 1 || p.neighbors > 24) throw ParameterError("lbp: neighbors must be in [1, 24]");
    if (p.radius < 1) throw ParameterError("lbp: radius must be >= 1");
    if (2 * p.radius >= img.height() || 2 * p.radius >= img.width())
        throw ParameterError("lbp: radius too large for the image");
}

/// Rotation-variant LBP code per pixel; pixels whose circle leaves the image get 0.
inline std::vector<std::uint32_t> lbp_codes(const GrayImage& img, const LbpParams& p) {
    validate_lbp(img, p);
    const auto off = lbp_offsets(p);
    const std::size_t h = img.height(), w = img.width(), R = p.radius;
    std::vector<std::uint32_t> codes(h * w, 0);
    for (std::size_t r = R; r + R < h; ++r)
        for (std::size_t c = R; c + R < w; ++c) {
            const double center = img(r, c);
            std::uint32_t code = 0;
            for (std::size_t k = 0; k < off.size(); ++k) {
                const double v = sample_bilinear(img, static_cast<double>(r) + off[k].first,
                                                 static_cast<double>(c) + off[k].second);
                if (v >= center) code |= (1u << k);
            }
            codes[r * w + c] = code;
        }
    return codes;
}

/// Flat mode: code image scaled by 1 / (2^P - 1). Histogram mode: 2^P bins
/// over the interior pixels, normalized to sum 1.
inline FeatureVector lbp(const GrayImage& img, const LbpParams& p = {}) {
    const std::vector<std::uint32_t> codes = lbp_codes(img, p);
    const double max_code = static_cast<double>((1u << p.neighbors) - 1);
    FeatureVector fv;
    fv.method = FeatureMethod::Lbp;
    if (p.output == LbpOutput::FlatImage) {
        fv.values.resize(codes.size());
        for (std::size_t i = 0; i < codes.size(); ++i) fv.values[i] = codes[i] / max_code;
        return fv;
    }
    fv.values.assign(std::size_t{1} << p.neighbors, 0.0);
    const std::size_t h = img.height(), w = img.width(), R = p.radius;
    std::size_t n = 0;
    for (std::size_t r = R; r + R < h; ++r)
        for (std::size_t c = R; c + R < w; ++c, ++n) fv.values[codes[r * w + c]] += 1.0;
    for (double& v : fv.values) v /= static_cast<double>(n);
    return fv;
}

// ---------------------------------------------------------------------------
// Gabor

struct GaborParams {
    double frequency = 0.9;
    double theta = 0.0;
    double bandwidth = 1.0;
    double n_stds = 3.0;

    friend bool operator==(const GaborParams&, const GaborParams&) = default;
};

/// Square complex kernel with support [-radius, radius]^2.
struct GaborKernel {
    double sigma = 0.0;
    long long radius = 0;
    std::vector<std::complex<double>> values;

    std::size_t side() const noexcept { return static_cast<std::size_t>(2 * radius + 1); }
    std::complex<double> at(long long x, long long y) const {
        return values[static_cast<std::size_t>((y + radius) * (2 * radius + 1) + (x + radius))];
    }
};

/// Envelope width for a given frequency and octave bandwidth.
inline double gabor_sigma(double frequency, double bandwidth) {
    const double b = std::pow(2.0, bandwidth);
    return (1.0 / (std::numbers::pi * frequency)) * std::sqrt(std::log(2.0) / 2.0) * (b + 1.0) / (b - 1.0);
}

inline GaborKernel gabor_kernel(const GaborParams& p = {}) {
    if (!(p.frequency > 0.0)) throw ParameterError("gabor: frequency must be > 0");
    if (!(p.bandwidth > 0.0)) throw ParameterError("gabor: bandwidth must be > 0");
    if (!(p.n_stds > 0.0)) throw ParameterError("gabor: n_stds must be > 0");
    GaborKernel k;
    k.sigma = gabor_sigma(p.frequency, p.bandwidth);
    k.radius = static_cast<long long>(std::ceil(p.n_stds * k.sigma));
    k.values.resize(k.side() * k.side());
    const double ct = std::cos(p.theta), st = std::sin(p.theta);
    const double two_s2 = 2.0 * k.sigma * k.sigma;
    for (long long y = -k.radius; y <= k.radius; ++y)
        for (long long x = -k.radius; x <= k.radius; ++x) {
            const double xr = static_cast<double>(x) * ct + static_cast<double>(y) * st;
            const double yr = -static_cast<double>(x) * st + static_cast<double>(y) * ct;
            const double env = std::exp(-(xr * xr + yr * yr) / two_s2);
            const double phase = 2.0 * std::numbers::pi * p.frequency * xr;
            k.values[static_cast<std::size_t>((y + k.radius) * (2 * k.radius + 1) + (x + k.radius))] =
                std::polar(env, phase);
        }
    return k;
}

/// Real-part response image, reflect-padded, same size as the input.
/// The real kernel is point-symmetric, so correlation equals convolution.
inline std::vector<double> gabor_response(const GrayImage& img, const GaborParams& p = {}) {
    const GaborKernel k = gabor_kernel(p);
    const std::size_t h = img.height(), w = img.width();
    std::vector<double> out(h * w, 0.0);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            double acc = 0.0;
            for (long long dy = -k.radius; dy <= k.radius; ++dy) {
                const std::size_t rr = reflect_index(static_cast<long long>(r) - dy, h);
                for (long long dx = -k.radius; dx <= k.radius; ++dx)
                    acc += k.at(dx, dy).real() * img(rr, reflect_index(static_cast<long long>(c) - dx, w));
            }
            out[r * w + c] = acc;
        }
    return out;
}

inline FeatureVector gabor(const GrayImage& img, const GaborParams& p = {}) {
    return {gabor_response(img, p), FeatureMethod::Gabor};
}

// ---------------------------------------------------------------------------
// Dispatch

inline FeatureVector raw_pixels(const GrayImage& img) {
    auto px = img.pixels();
    return {std::vector<double>(px.begin(), px.end()), FeatureMethod::Raw};
}

using FeatureParams = std::variant<std::monostate, HogParams, LbpParams, GaborParams>;

/// One extractor choice: a method plus its parameter block.
struct FeatureSpec {
    FeatureMethod method = FeatureMethod::Hog;
    FeatureParams params = HogParams{};

    static FeatureSpec defaults(FeatureMethod m) {
        switch (m) {
            case FeatureMethod::Raw: return {m, std::monostate{}};
            case FeatureMethod::Hog: return {m, HogParams{}};
            case FeatureMethod::Lbp: return {m, LbpParams{}};
            case FeatureMethod::Gabor: return {m, GaborParams{}};
        }
        throw ParameterError("unknown feature method");
    }

    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

inline FeatureVector extract(const GrayImage& img, FeatureMethod method, const FeatureParams& params) {
    auto mismatch = [method] {
        return ParameterError("extract: parameter block does not match method " + std::string(to_string(method)));
    };
    switch (method) {
        case FeatureMethod::Raw:
            if (!std::holds_alternative<std::monostate>(params)) throw mismatch();
            return raw_pixels(img);
        case FeatureMethod::Hog:
            if (const auto* p = std::get_if<HogParams>(&params)) return hog(img, *p);
            throw mismatch();
        case FeatureMethod::Lbp:
            if (const auto* p = std::get_if<LbpParams>(&params)) return lbp(img, *p);
            throw mismatch();
        case FeatureMethod::Gabor:
            if (const auto* p = std::get_if<GaborParams>(&params)) return gabor(img, *p);
            throw mismatch();
    }
    throw mismatch();
}

inline FeatureVector extract(const GrayImage& img, const FeatureSpec& spec) {
    return extract(img, spec.method, spec.params);
}

/// Extracts every image into one row of the result. Row order follows the
/// input regardless of `jobs`.
inline Matrix extract_batch(const std::vector<GrayImage>& images, const FeatureSpec& spec, std::size_t jobs = 1) {
    if (images.empty()) return {};
    const std::size_t dim = extract(images.front(), spec).dim();
    Matrix out(images.size(), dim);
    parallel_for(images.size(), jobs, [&](std::size_t i) {
        const FeatureVector fv = extract(images[i], spec);
        if (fv.dim() != dim) throw DimensionError("extract_batch: image " + std::to_string(i) + " has a different size");
        std::copy(fv.values.begin(), fv.values.end(), out.row(i).begin());
    });
    return out;
}

}  // namespace digitbench
