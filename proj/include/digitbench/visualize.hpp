#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/features.hpp"
#include "digitbench/image.hpp"
#include "digitbench/imaging.hpp"

namespace digitbench {

/// One oriented line segment per bin and cell, drawn perpendicular to the
/// bin's gradient direction with brightness proportional to the bin's share
/// of the largest bin in the image. A zero histogram renders black.
inline GrayImage render_hog_glyphs(const GrayImage& img, const HogParams& p, std::size_t cell_px = 16) {
    const HogGeometry geo = hog_geometry(img.height(), img.width(), p);
    const std::vector<double> hist = hog_cell_histograms(img, p);
    double mx = 0.0;
    for (double v : hist) mx = std::max(mx, v);

    GrayImage out(geo.cells_y * cell_px, geo.cells_x * cell_px);
    if (mx <= 0.0) return out;
    const double range = p.signed_gradients ? 360.0 : 180.0;
    const double half = 0.45 * static_cast<double>(cell_px);
    for (std::size_t cy = 0; cy < geo.cells_y; ++cy)
        for (std::size_t cx = 0; cx < geo.cells_x; ++cx) {
            const double ox = (static_cast<double>(cx) + 0.5) * static_cast<double>(cell_px) - 0.5;
            const double oy = (static_cast<double>(cy) + 0.5) * static_cast<double>(cell_px) - 0.5;
            for (std::size_t b = 0; b < p.n_bins; ++b) {
                const double w = hist[(cy * geo.cells_x + cx) * p.n_bins + b] / mx;
                if (w <= 0.0) continue;
                const double edge = (static_cast<double>(b) * range / static_cast<double>(p.n_bins) + 90.0) *
                                    std::numbers::pi / 180.0;
                const double dx = std::cos(edge), dy = std::sin(edge);
                for (int s = -static_cast<int>(half * 2); s <= static_cast<int>(half * 2); ++s) {
                    const double t = s / 2.0;
                    const auto x = static_cast<long long>(std::lround(ox + t * dx));
                    const auto y = static_cast<long long>(std::lround(oy + t * dy));
                    if (x < 0 || y < 0 || x >= static_cast<long long>(out.width()) ||
                        y >= static_cast<long long>(out.height()))
                        continue;
                    const auto ux = static_cast<std::size_t>(x), uy = static_cast<std::size_t>(y);
                    out.set(uy, ux, std::max(out(uy, ux), w));
                }
            }
        }
    return out;
}

/// Interior LBP codes (pixels whose circle fits), scaled by 1 / (2^P - 1).
inline GrayImage render_lbp(const GrayImage& img, const LbpParams& p) {
    const auto codes = lbp_codes(img, p);
    const double max_code = static_cast<double>((1u << p.neighbors) - 1);
    const std::size_t R = p.radius, h = img.height() - 2 * R, w = img.width() - 2 * R;
    GrayImage out(h, w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) out.set(r, c, codes[(r + R) * img.width() + c + R] / max_code);
    return out;
}

/// Min-max normalized Gabor response; a flat response renders black.
inline GrayImage render_gabor(const GrayImage& img, const GaborParams& p) {
    const auto resp = gabor_response(img, p);
    const auto [lo, hi] = std::minmax_element(resp.begin(), resp.end());
    const double span = *hi - *lo;
    std::vector<double> px(resp.size(), 0.0);
    if (span > 1e-12)
        for (std::size_t i = 0; i < px.size(); ++i) px[i] = (resp[i] - *lo) / span;
    return GrayImage(img.height(), img.width(), std::move(px));
}

inline GrayImage render_feature(const GrayImage& preprocessed, const FeatureSpec& spec) {
    switch (spec.method) {
        case FeatureMethod::Raw: return preprocessed;
        case FeatureMethod::Hog: return render_hog_glyphs(preprocessed, std::get<HogParams>(spec.params));
        case FeatureMethod::Lbp: return render_lbp(preprocessed, std::get<LbpParams>(spec.params));
        case FeatureMethod::Gabor: return render_gabor(preprocessed, std::get<GaborParams>(spec.params));
    }
    throw ParameterError("visualize: unknown method");
}

/// Writes <stem>_original.pgm, <stem>_preprocessed.pgm and <stem>_<method>.pgm
/// into out_dir; returns the three paths.
inline std::vector<std::string> visualize(const GrayImage& original, const FeatureSpec& spec,
                                          const PreprocessConfig& pre, const std::string& out_dir,
                                          const std::string& stem = "image") {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    const GrayImage prepped = preprocess(original, pre);
    const std::filesystem::path dir(out_dir);
    std::vector<std::string> paths{(dir / (stem + "_original.pgm")).string(),
                                   (dir / (stem + "_preprocessed.pgm")).string(),
                                   (dir / (stem + "_" + std::string(to_string(spec.method)) + ".pgm")).string()};
    write_pgm(paths[0], original);
    write_pgm(paths[1], prepped);
    write_pgm(paths[2], render_feature(prepped, spec));
    return paths;
}

}  // namespace digitbench
