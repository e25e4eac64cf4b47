#pragma once

// Procedural digit-like glyphs for tests and the bundled demo dataset.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "digitbench/error.hpp"
#include "digitbench/image.hpp"
#include "digitbench/prediction.hpp"

namespace digitbench::synthetic {

struct Point {
    double x, y;
};
using Stroke = std::vector<Point>;

inline Stroke arc(double cx, double cy, double rx, double ry, double from_deg, double to_deg, int steps = 14) {
    Stroke s;
    for (int i = 0; i <= steps; ++i) {
        const double a = (from_deg + (to_deg - from_deg) * i / steps) * std::numbers::pi / 180.0;
        s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return s;
}

/// Stroke skeletons in a [-1, 1]^2 box, y pointing down.
inline std::vector<Stroke> digit_strokes(int digit) {
    switch (digit) {
        case 0: return {arc(0, 0, 0.55, 0.85, 0, 360, 24)};
        case 1: return {{{-0.25, -0.6}, {0.1, -0.9}, {0.1, 0.9}}};
        case 2: return {arc(0, -0.4, 0.5, 0.45, 180, 360 + 30), {{0.43, -0.18}, {-0.55, 0.85}, {0.6, 0.85}}};
        case 3: return {arc(0, -0.45, 0.45, 0.4, 200, 450), arc(0, 0.4, 0.5, 0.45, 270, 520)};
        case 4: return {{{0.25, -0.9}, {-0.6, 0.35}, {0.65, 0.35}}, {{0.3, -0.3}, {0.3, 0.95}}};
        case 5: return {{{0.55, -0.85}, {-0.4, -0.85}, {-0.45, -0.1}}, arc(0.0, 0.35, 0.5, 0.5, 220, 495)};
        case 6: return {arc(0.05, -0.1, 0.55, 0.8, 250, 180 + 10), arc(0.0, 0.4, 0.45, 0.45, 0, 360, 20)};
        case 7: return {{{-0.6, -0.85}, {0.6, -0.85}, {-0.1, 0.95}}};
        case 8: return {arc(0, -0.45, 0.4, 0.38, 0, 360, 18), arc(0, 0.42, 0.5, 0.45, 0, 360, 20)};
        case 9: return {arc(0.0, -0.4, 0.45, 0.45, 0, 360, 20), {{0.45, -0.4}, {0.35, 0.95}}};
        default: throw ParameterError("synthetic: digit must be in [0, 9]");
    }
}

inline double segment_distance(Point p, Point a, Point b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
    return std::hypot(dx, dy);
}

/// Anti-aliased rasterization of pixel-space strokes: coverage falls off
/// linearly over one pixel around the stroke edge.
inline GrayImage rasterize(const std::vector<Stroke>& strokes, std::size_t side, double half_width, double ink) {
    GrayImage img(side, side);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
            const Point p{static_cast<double>(c), static_cast<double>(r)};
            double d = 1e9;
            for (const auto& s : strokes)
                for (std::size_t i = 0; i + 1 < s.size(); ++i) d = std::min(d, segment_distance(p, s[i], s[i + 1]));
            img.set(r, c, ink * std::clamp(half_width + 0.5 - d, 0.0, 1.0));
        }
    return img;
}

/// Jitter ranges for render_digit.
struct GlyphStyle {
    double max_rotation_deg = 18.0;
    double max_shear = 0.35;
    double min_scale = 0.75, max_scale = 1.05;
    double max_shift_px = 2.5;
    double vertex_wobble = 0.12;  // per-vertex displacement in glyph units
    double min_half_width = 0.7, max_half_width = 1.6;
    double noise_sigma = 0.08;
};

/// Random affine jitter, per-vertex wobble, stroke width, ink level and
/// additive noise applied to one digit skeleton, rendered at side x side.
template <typename Rng>
GrayImage render_digit(int digit, Rng& rng, std::size_t side = 28, const GlyphStyle& st = {}) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * (u(rng) + 1.0) / 2.0; };
    const double rot = u(rng) * st.max_rotation_deg * std::numbers::pi / 180.0;
    const double shear = u(rng) * st.max_shear;
    const double sx = between(st.min_scale, st.max_scale);
    const double sy = between(st.min_scale, st.max_scale);
    const double tx = u(rng) * st.max_shift_px, ty = u(rng) * st.max_shift_px;
    const double half_width = between(st.min_half_width, st.max_half_width);
    const double ink = between(0.7, 1.0);
    const double box = 0.36 * static_cast<double>(side);  // half extent of the glyph box in pixels
    const double center = (static_cast<double>(side) - 1.0) / 2.0;

    std::vector<Stroke> strokes = digit_strokes(digit);
    for (auto& s : strokes)
        for (auto& p : s) {
            const double wx = p.x + u(rng) * st.vertex_wobble, wy = p.y + u(rng) * st.vertex_wobble;
            const double x = wx * sx + shear * wy, y = wy * sy;
            const double xr = x * std::cos(rot) - y * std::sin(rot);
            const double yr = x * std::sin(rot) + y * std::cos(rot);
            p = {center + tx + xr * box, center + ty + yr * box};
        }
    GrayImage img = rasterize(strokes, side, half_width, ink);
    std::normal_distribution<double> noise(0.0, st.noise_sigma);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) img.set(r, c, img(r, c) + noise(rng));
    return img;
}

struct GlyphSet {
    std::vector<GrayImage> images;
    std::vector<Label> labels;
};

/// Balanced set: sample i has label i % 10.
inline GlyphSet digit_glyphs(std::size_t count, std::uint64_t seed, std::size_t side = 28, const GlyphStyle& style = {}) {
    std::mt19937_64 rng(seed);
    GlyphSet out;
    for (std::size_t i = 0; i < count; ++i) {
        const int d = static_cast<int>(i % 10);
        out.images.push_back(render_digit(d, rng, side, style));
        out.labels.push_back(d);
    }
    return out;
}

/// Two classes: 0 = filled square, 1 = hollow square with a 4-pixel rim.
/// Sizes vary and positions jitter around the center; noise-free so flat regions stay flat.
inline GlyphSet filled_vs_hollow_squares(std::size_t count, std::uint64_t seed, std::size_t side = 28) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size_dist(16, 22);
    const int rim = 4;
    GlyphSet out;
    for (std::size_t i = 0; i < count; ++i) {
        const int label = static_cast<int>(i % 2);
        const int s = size_dist(rng);
        const int centered = (static_cast<int>(side) - s) / 2;
        std::uniform_int_distribution<int> pos(std::max(0, centered - 2), std::min(static_cast<int>(side) - s, centered + 2));
        const int top = pos(rng), left = pos(rng);
        GrayImage img(side, side);
        for (int r = 0; r < static_cast<int>(side); ++r)
            for (int c = 0; c < static_cast<int>(side); ++c) {
                const bool inside = r >= top && r < top + s && c >= left && c < left + s;
                const bool border = inside && (r < top + rim || r >= top + s - rim || c < left + rim || c >= left + s - rim);
                const double v = (label == 0 ? inside : border) ? 1.0 : 0.0;
                img.set(static_cast<std::size_t>(r), static_cast<std::size_t>(c), v);
            }
        out.images.push_back(std::move(img));
        out.labels.push_back(label);
    }
    return out;
}

}  // namespace digitbench::synthetic
