// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Procedural synthetic scenes: binary woody-vegetation masks with
// linear / non-linear ground truth.
//
// A scene is rendered onto a layered canvas in the order background ->
// large -> medium -> tiny patches -> linear features; each element overwrites
// what is beneath it. Patches are labelled kNonLinear, lines kLinear, and the
// input mask is (label != 0).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lwf/errors.hpp"
#include "lwf/geometry.hpp"
#include "lwf/morphology.hpp"
#include "lwf/parallel.hpp"
#include "lwf/raster.hpp"
#include "lwf/raster_io.hpp"
#include "lwf/rng.hpp"

namespace lwf {

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v, double eps = 1e-9) const { return v >= lo - eps && v <= hi + eps; }
    bool within(const Range& outer) const { return lo >= outer.lo - 1e-9 && hi <= outer.hi + 1e-9; }
    double sample(CounterRng& rng) const { return hi > lo ? rng.uniform(lo, hi) : lo; }
};

struct IntRange {
    int lo = 0;
    int hi = 0;

    bool contains(int v) const { return v >= lo && v <= hi; }
    int sample(CounterRng& rng) const { return static_cast<int>(rng.uniform_int(lo, hi)); }
};

struct AngularStyle {
    IntRange segments{1, 4};
    Range segment_length{25.0, 200.0};
    std::vector<double> turn_angles_deg{0, 15, 30, 45, 60, 75, 90, 105, 120};
};

/// One curvature level of the organic random walk.
struct CurvatureLevel {
    std::string name;
    Range step{4.0, 5.0};
    Range variation_deg{10.0, 20.0};
};

struct OrganicStyle {
    IntRange steps{40, 60};
    std::vector<CurvatureLevel> levels{{"low", {4.0, 5.0}, {10.0, 20.0}},
                                       {"mid", {4.0, 5.0}, {20.0, 30.0}},
                                       {"high", {4.0, 5.0}, {30.0, 40.0}}};
};

struct LinearSpec {
    IntRange count{2, 4};
    double angular_fraction = 0.5;
    Range width{3.0, 6.0};
    AngularStyle angular;
    OrganicStyle organic;
};

/// Patch parameters for one size class. `size` is the side of the square
/// window the patch is synthesised in.
struct PatchSpec {
    IntRange count{0, 0};
    Range size{20.0, 40.0};
    IntRange octaves{4, 6};
    Range base_frequency{1.5, 3.0};
    Range coverage{0.3, 0.45};
    double falloff = 1.5;
    double polygon_probability = 0.0;
    IntRange polygon_vertices{5, 9};
};

struct SceneTemplate {
    std::string id = "custom";
    int canvas_size = 256;
    LinearSpec linear;
    PatchSpec large;
    PatchSpec medium;
    PatchSpec tiny;
    /// When false, elements are placed only where they keep `gap` pixels of
    /// clearance from everything already drawn (no occlusion, no touching).
    bool allow_overlap = true;
    int gap = 3;
    int placement_attempts = 40;
};

/// Absolute bounds of the geometric parameters at a 1024 px canvas; they
/// scale linearly with the canvas size.
struct TemplateBounds {
    Range segment_length;
    Range step;
    Range turn_deg{0.0, 120.0};
    Range variation_deg{10.0, 40.0};

    static TemplateBounds for_canvas(int canvas)
    {
        const double s = canvas / 1024.0;
        TemplateBounds b;
        b.segment_length = {100.0 * s, 800.0 * s};
        b.step = {15.0 * s, 20.0 * s};
        return b;
    }
};

inline void validate(const SceneTemplate& t)
{
    auto fail = [&](const std::string& what) { throw SchemaError("template '" + t.id + "': " + what); };
    if (t.canvas_size < 64)
        fail("canvas_size must be >= 64");
    const auto b = TemplateBounds::for_canvas(t.canvas_size);
    auto nonempty = [&](const Range& r, const char* name) {
        if (!(r.lo <= r.hi))
            fail(std::string(name) + " range is empty");
    };
    auto nonempty_i = [&](const IntRange& r, const char* name) {
        if (r.lo > r.hi || r.lo < 0)
            fail(std::string(name) + " range is empty or negative");
    };
    const auto& L = t.linear;
    nonempty_i(L.count, "linear.count");
    if (L.angular_fraction < 0.0 || L.angular_fraction > 1.0)
        fail("angular_fraction must lie in [0, 1]");
    nonempty(L.width, "linear.width");
    if (L.width.lo <= 0.0)
        fail("line width must be positive");
    nonempty_i(L.angular.segments, "angular.segments");
    if (L.angular.segments.lo < 1)
        fail("angular lines need at least one segment");
    nonempty(L.angular.segment_length, "angular.segment_length");
    if (!L.angular.segment_length.within(b.segment_length))
        fail("segment_length outside the allowed range for this canvas");
    if (L.angular.turn_angles_deg.empty())
        fail("turn angle set is empty");
    for (double a : L.angular.turn_angles_deg)
        if (!b.turn_deg.contains(a))
            fail("turn angles must lie in [0, 120] degrees");
    nonempty_i(L.organic.steps, "organic.steps");
    if (L.organic.steps.lo < 1)
        fail("organic lines need at least one step");
    if (L.organic.levels.empty())
        fail("organic style needs at least one curvature level");
    for (const auto& lv : L.organic.levels) {
        nonempty(lv.step, "organic.step");
        nonempty(lv.variation_deg, "organic.variation");
        if (!lv.step.within(b.step))
            fail("organic step outside the allowed range for this canvas");
        if (!lv.variation_deg.within(b.variation_deg))
            fail("angular variation outside [10, 40] degrees");
    }
    for (const PatchSpec* p : {&t.large, &t.medium, &t.tiny}) {
        nonempty_i(p->count, "patch.count");
        nonempty(p->size, "patch.size");
        if (p->size.lo < 2.0)
            fail("patch size must be >= 2");
        nonempty_i(p->octaves, "patch.octaves");
        if (p->octaves.lo < 1)
            fail("fBm needs at least one octave");
        nonempty(p->base_frequency, "patch.base_frequency");
        nonempty(p->coverage, "patch.coverage");
        if (p->coverage.lo < 0.0 || p->coverage.hi > 1.0)
            fail("coverage must lie in [0, 1]");
        if (p->polygon_probability < 0.0 || p->polygon_probability > 1.0)
            fail("polygon_probability must lie in [0, 1]");
        if (p->polygon_vertices.lo < 3 || p->polygon_vertices.lo > p->polygon_vertices.hi)
            fail("polygon vertex range must start at >= 3");
    }
    if ((t.medium.polygon_probability > 0.0 || t.tiny.polygon_probability > 0.0))
        fail("only large patches may be polygons");
    if (t.gap < 0 || t.placement_attempts < 1)
        fail("gap must be >= 0 and placement_attempts >= 1");
}

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Vec2&) const = default;
};

enum class Category : std::uint8_t { background, linear, large, medium, tiny };

inline const char* category_name(Category c)
{
    switch (c) {
    case Category::background: return "background";
    case Category::linear: return "linear";
    case Category::large: return "large";
    case Category::medium: return "medium";
    case Category::tiny: return "tiny";
    }
    return "?";
}

enum class LineStyle : std::uint8_t { angular, organic };

/// A sampled polyline in canvas pixel coordinates (x right, y down). Vertices
/// may lie off-canvas; rendering clips.
struct Polyline {
    LineStyle style = LineStyle::angular;
    std::vector<Vec2> points;
    double width = 1.0;
    // Audit trail of the sampled quantities.
    std::vector<double> segment_lengths;  // angular: per segment; organic: per step
    std::vector<double> turns_deg;        // signed heading change before each segment/step
    double variation_deg = 0.0;           // organic only
    int level = -1;                       // organic curvature level index
};

struct Patch {
    ByteRaster mask;                      // local window, mask8
    int col_off = 0;                      // window placement on the canvas
    int row_off = 0;
    bool polygon = false;
    std::optional<Ring> outline;          // polygon patches: local-window ring
    double size = 0.0;
    double coverage = 0.0;                // fBm target coverage
    int octaves = 0;
    double base_frequency = 0.0;
};

struct SceneElement {
    Category category = Category::background;
    int order = 0;
    std::optional<Polyline> line;
    std::optional<Patch> patch;
};

namespace detail {

constexpr double kDeg = std::numbers::pi / 180.0;

inline Vec2 initial_point_and_heading(CounterRng& rng, int canvas, double& heading)
{
    const Vec2 start{rng.uniform(0.0, canvas), rng.uniform(0.0, canvas)};
    // Aim at a point in the central half so few lines leave immediately.
    const Vec2 aim{rng.uniform(0.25, 0.75) * canvas, rng.uniform(0.25, 0.75) * canvas};
    const double jitter = rng.uniform(-0.5, 0.5);
    heading = std::atan2(aim.y - start.y, aim.x - start.x) + jitter;
    return start;
}

} // namespace detail

/// Piecewise-straight line: segment lengths from the template range, a turn
/// of (random sign) x (one of the allowed angles) between segments.
inline Polyline gen_angular_polyline(CounterRng& rng, const SceneTemplate& t)
{
    const auto& a = t.linear.angular;
    Polyline pl;
    pl.style = LineStyle::angular;
    pl.width = t.linear.width.sample(rng);
    double heading = 0.0;
    Vec2 p = detail::initial_point_and_heading(rng, t.canvas_size, heading);
    pl.points.push_back(p);
    const int n = a.segments.sample(rng);
    for (int i = 0; i < n; ++i) {
        double turn = 0.0;
        if (i > 0) {
            const double mag = a.turn_angles_deg[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(a.turn_angles_deg.size()) - 1))];
            turn = rng.bernoulli(0.5) ? mag : -mag;
        }
        heading += turn * detail::kDeg;
        const double len = a.segment_length.sample(rng);
        p = {p.x + len * std::cos(heading), p.y + len * std::sin(heading)};
        pl.points.push_back(p);
        pl.segment_lengths.push_back(len);
        pl.turns_deg.push_back(turn);
    }
    return pl;
}

/// Random walk: fixed curvature level per line, per-step heading change
/// uniform in [-variation, +variation].
inline Polyline gen_organic_polyline(CounterRng& rng, const SceneTemplate& t)
{
    const auto& o = t.linear.organic;
    Polyline pl;
    pl.style = LineStyle::organic;
    pl.width = t.linear.width.sample(rng);
    pl.level = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(o.levels.size()) - 1));
    const CurvatureLevel& lv = o.levels[static_cast<std::size_t>(pl.level)];
    pl.variation_deg = lv.variation_deg.sample(rng);
    double heading = 0.0;
    Vec2 p = detail::initial_point_and_heading(rng, t.canvas_size, heading);
    pl.points.push_back(p);
    const int n = o.steps.sample(rng);
    for (int i = 0; i < n; ++i) {
        const double turn = i == 0 ? 0.0 : rng.uniform(-pl.variation_deg, pl.variation_deg);
        heading += turn * detail::kDeg;
        const double step = lv.step.sample(rng);
        p = {p.x + step * std::cos(heading), p.y + step * std::sin(heading)};
        pl.points.push_back(p);
        pl.segment_lengths.push_back(step);
        pl.turns_deg.push_back(turn);
    }
    return pl;
}

/// Calls fn(col, row) for every canvas pixel whose centre lies within
/// width/2 of the polyline (round caps and joins).
template <typename Fn>
void for_each_line_pixel(const Polyline& pl, int canvas_w, int canvas_h, Fn fn)
{
    const double r = pl.width / 2.0;
    const double r2 = r * r;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(canvas_w) * canvas_h, 0);
    for (std::size_t i = 0; i + 1 < pl.points.size(); ++i) {
        const Vec2 a = pl.points[i];
        const Vec2 b = pl.points[i + 1];
        const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r - 1)));
        const int c1 = std::min(canvas_w - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r + 1)));
        const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r - 1)));
        const int r1 = std::min(canvas_h - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r + 1)));
        const double vx = b.x - a.x, vy = b.y - a.y;
        const double len2 = vx * vx + vy * vy;
        for (int y = r0; y <= r1; ++y)
            for (int x = c0; x <= c1; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
                if (dx * dx + dy * dy <= r2) {
                    auto& s = seen[static_cast<std::size_t>(y) * canvas_w + x];
                    if (!s) {
                        s = 1;
                        fn(x, y);
                    }
                }
            }
    }
}

// ---------------------------------------------------------------------------
// Patches
// ---------------------------------------------------------------------------

struct FbmParams {
    int size = 32;                // square window side, pixels
    int octaves = 4;
    double base_frequency = 2.0;  // lattice cells across the window, octave 0
    double coverage = 0.4;        // target foreground fraction
    double falloff = 0.0;         // radial bias subtracted from the field
    double lacunarity = 2.0;
    double gain = 0.5;
};

namespace detail {

inline double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy)
{
    const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ull ^
                                               static_cast<std::uint64_t>(iy)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double value_noise(std::uint64_t seed, double x, double y)
{
    const double fx = std::floor(x), fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const double tx = x - fx, ty = y - fy;
    const double sx = tx * tx * (3.0 - 2.0 * tx);
    const double sy = ty * ty * (3.0 - 2.0 * ty);
    const double v00 = lattice_value(seed, ix, iy), v10 = lattice_value(seed, ix + 1, iy);
    const double v01 = lattice_value(seed, ix, iy + 1), v11 = lattice_value(seed, ix + 1, iy + 1);
    const double top = v00 + sx * (v10 - v00);
    const double bottom = v01 + sx * (v11 - v01);
    return top + sy * (bottom - top);
}

} // namespace detail

/// Value-noise fractional Brownian motion on a size x size window.
inline std::vector<double> fbm_field(CounterRng& rng, const FbmParams& p)
{
    std::vector<std::uint64_t> octave_seeds(static_cast<std::size_t>(p.octaves));
    std::vector<Vec2> shifts(static_cast<std::size_t>(p.octaves));
    for (int o = 0; o < p.octaves; ++o) {
        octave_seeds[o] = rng.next();
        shifts[o] = {rng.uniform(0.0, 64.0), rng.uniform(0.0, 64.0)};
    }
    std::vector<double> field(static_cast<std::size_t>(p.size) * p.size);
    const double c = (p.size - 1) / 2.0;
    const double rmax = std::max(c, 0.5) * std::numbers::sqrt2;
    for (int y = 0; y < p.size; ++y)
        for (int x = 0; x < p.size; ++x) {
            double v = 0.0, amp = 1.0, freq = p.base_frequency / p.size;
            for (int o = 0; o < p.octaves; ++o) {
                v += amp * detail::value_noise(octave_seeds[o], x * freq + shifts[o].x, y * freq + shifts[o].y);
                amp *= p.gain;
                freq *= p.lacunarity;
            }
            const double rr = std::hypot(x - c, y - c) / rmax;
            field[static_cast<std::size_t>(y) * p.size + x] = v - p.falloff * rr * rr;
        }
    return field;
}

/// Foreground = field >= the (1 - coverage) quantile, i.e. the `coverage`
/// fraction of highest values. A constant field gives an empty mask.
inline ByteRaster threshold_by_coverage(const std::vector<double>& field, int w, int h, double coverage)
{
    ByteRaster out(w, h, Band::mask8);
    const std::size_t n = field.size();
    const auto [mn, mx] = std::minmax_element(field.begin(), field.end());
    if (coverage <= 0.0 || *mn == *mx)
        return out;
    if (coverage >= 1.0) {
        std::fill(out.pixels().begin(), out.pixels().end(), 1);
        return out;
    }
    const auto k = static_cast<std::size_t>(std::llround(coverage * static_cast<double>(n)));
    if (k == 0)
        return out;
    std::vector<double> sorted(field);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                     std::greater<>());
    const double thr = sorted[k - 1];
    auto px = out.pixels();
    for (std::size_t i = 0; i < n; ++i)
        px[i] = field[i] >= thr ? 1 : 0;
    return out;
}

inline ByteRaster gen_fbm_patch(CounterRng& rng, const FbmParams& p)
{
    if (p.octaves < 1 || p.size < 1)
        throw Error("fBm patch needs octaves >= 1 and size >= 1");
    return threshold_by_coverage(fbm_field(rng, p), p.size, p.size, p.coverage);
}

struct PolygonPatchParams {
    int size = 32;
    IntRange vertices{5, 9};
    Range radius_fraction{0.55, 1.0};  // of size / 2
    double angle_jitter = 0.8;         // fraction of the mean angular step
    Range rotation_deg{0.0, 360.0};
    int max_retries = 16;
};

/// True when no two non-adjacent edges of the closed ring intersect.
inline bool ring_is_simple(const Ring& ring)
{
    auto orient = [](const Point& a, const Point& b, const Point& c) {
        const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        return (v > 0) - (v < 0);
    };
    auto on_segment = [](const Point& a, const Point& b, const Point& p) {
        return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
               p.y <= std::max(a.y, b.y);
    };
    auto intersects = [&](const Point& a, const Point& b, const Point& c, const Point& d) {
        const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
        if (o1 != o2 && o3 != o4)
            return true;
        return (o1 == 0 && on_segment(a, b, c)) || (o2 == 0 && on_segment(a, b, d)) ||
               (o3 == 0 && on_segment(c, d, a)) || (o4 == 0 && on_segment(c, d, b));
    };
    const std::size_t n = ring.size() - 1;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1))
                continue;
            if (intersects(ring[i], ring[i + 1], ring[j], ring[j + 1]))
                return false;
        }
    return true;
}

/// Random polygon around the window centre (angles sorted, random radii),
/// rasterised with pixel-centre containment. Self-intersecting samples are
/// redrawn; after max_retries a regular polygon is used.
inline Patch gen_polygon_patch(CounterRng& rng, const PolygonPatchParams& p)
{
    const int n = p.vertices.sample(rng);
    const double c = p.size / 2.0;
    const double rot = p.rotation_deg.sample(rng) * detail::kDeg;
    Ring ring;
    for (int attempt = 0; attempt <= p.max_retries; ++attempt) {
        ring.clear();
        const bool fallback = attempt == p.max_retries;
        for (int i = 0; i < n; ++i) {
            const double step = 2.0 * std::numbers::pi / n;
            const double jitter = fallback ? 0.0 : rng.uniform(-0.5, 0.5) * p.angle_jitter * step;
            const double ang = rot + i * step + jitter;
            const double rad = (fallback ? p.radius_fraction.hi : p.radius_fraction.sample(rng)) * c;
            ring.push_back({c + rad * std::cos(ang), c + rad * std::sin(ang)});
        }
        ring.push_back(ring.front());
        if (ring_is_simple(ring))
            break;
    }
    // Local window: x right, y down; mirror y so the raster's north-up
    // convention (row 0 at the top) maps y=0 to row 0.
    ByteRaster tmpl(p.size, p.size, Band::mask8, {0.0, 0.0, 1.0, 0});
    PolygonSet set;
    Polygon poly;
    for (const auto& q : ring)
        poly.outer.push_back({q.x, -q.y});
    set.polygons.push_back(poly);
    Patch out;
    out.mask = rasterize(set, tmpl);
    out.polygon = true;
    out.outline = ring;
    out.size = p.size;
    return out;
}

// ---------------------------------------------------------------------------
// Scenes
// ---------------------------------------------------------------------------

struct Scene {
    ByteRaster input;   // mask8
    ByteRaster label;   // class8
    std::uint64_t seed = 0;
    std::string template_id;
    std::vector<SceneElement> elements;
};

namespace detail {

class Canvas {
public:
    Canvas(const SceneTemplate& t)
        : t_(t),
          label_(t.canvas_size, t.canvas_size, Band::class8, {0.0, double(t.canvas_size), 1.0, 0}),
          blocked_(t.canvas_size, t.canvas_size, Band::mask8, label_.geo())
    {
    }

    // Pixels of a footprint may be placed unless overlap is forbidden and
    // any of them is blocked.
    bool fits(const std::vector<std::pair<int, int>>& px) const
    {
        if (px.empty())
            return false;
        if (t_.allow_overlap)
            return true;
        for (auto [c, r] : px)
            if (blocked_(c, r))
                return false;
        return true;
    }

    void paint(const std::vector<std::pair<int, int>>& px, std::uint8_t cls)
    {
        for (auto [c, r] : px)
            label_(c, r) = cls;
        if (t_.allow_overlap)
            return;
        const int g = t_.gap;
        for (auto [c, r] : px)
            for (int dy = -g; dy <= g; ++dy)
                for (int dx = -g; dx <= g; ++dx)
                    if (blocked_.contains(c + dx, r + dy))
                        blocked_(c + dx, r + dy) = 1;
    }

    ByteRaster& label() { return label_; }

private:
    const SceneTemplate& t_;
    ByteRaster label_;
    ByteRaster blocked_;
};

inline std::vector<std::pair<int, int>> patch_footprint(const Patch& p, int canvas)
{
    std::vector<std::pair<int, int>> px;
    for (int r = 0; r < p.mask.height(); ++r)
        for (int c = 0; c < p.mask.width(); ++c) {
            const int x = p.col_off + c, y = p.row_off + r;
            if (p.mask(c, r) && x >= 0 && y >= 0 && x < canvas && y < canvas)
                px.emplace_back(x, y);
        }
    return px;
}

inline std::vector<std::pair<int, int>> line_footprint(const Polyline& pl, int canvas)
{
    std::vector<std::pair<int, int>> px;
    for_each_line_pixel(pl, canvas, canvas, [&](int c, int r) { px.emplace_back(c, r); });
    return px;
}

inline Patch sample_patch(CounterRng& rng, const PatchSpec& spec, int canvas)
{
    const int size = std::max(2, static_cast<int>(std::lround(spec.size.sample(rng))));
    Patch patch;
    if (spec.polygon_probability > 0.0 && rng.bernoulli(spec.polygon_probability)) {
        PolygonPatchParams pp;
        pp.size = size;
        pp.vertices = spec.polygon_vertices;
        patch = gen_polygon_patch(rng, pp);
    } else {
        FbmParams fp;
        fp.size = size;
        fp.octaves = spec.octaves.sample(rng);
        fp.base_frequency = spec.base_frequency.sample(rng);
        fp.coverage = spec.coverage.sample(rng);
        fp.falloff = spec.falloff;
        patch.mask = gen_fbm_patch(rng, fp);
        patch.size = size;
        patch.coverage = fp.coverage;
        patch.octaves = fp.octaves;
        patch.base_frequency = fp.base_frequency;
    }
    patch.col_off = static_cast<int>(rng.uniform_int(-size / 2, canvas - 1 - size / 2));
    patch.row_off = static_cast<int>(rng.uniform_int(-size / 2, canvas - 1 - size / 2));
    return patch;
}

} // namespace detail

/// Renders one scene. (template, seed) fully determines the result.
inline Scene compose_scene(const SceneTemplate& t, std::uint64_t seed)
{
    validate(t);
    CounterRng rng(derive_seed(seed, t.id));
    detail::Canvas canvas(t);
    Scene scene;
    scene.seed = seed;
    scene.template_id = t.id;
    int order = 0;
    scene.elements.push_back({Category::background, order++, std::nullopt, std::nullopt});

    const std::pair<const PatchSpec*, Category> classes[] = {
        {&t.large, Category::large}, {&t.medium, Category::medium}, {&t.tiny, Category::tiny}};
    for (const auto& [spec, cat] : classes) {
        const int n = spec->count.sample(rng);
        for (int i = 0; i < n; ++i) {
            for (int attempt = 0; attempt < t.placement_attempts; ++attempt) {
                Patch patch = detail::sample_patch(rng, *spec, t.canvas_size);
                const auto px = detail::patch_footprint(patch, t.canvas_size);
                if (!canvas.fits(px))
                    continue;
                canvas.paint(px, kNonLinear);
                scene.elements.push_back({cat, order++, std::nullopt, std::move(patch)});
                break;
            }
        }
    }

    const int n_lines = t.linear.count.sample(rng);
    for (int i = 0; i < n_lines; ++i) {
        for (int attempt = 0; attempt < t.placement_attempts; ++attempt) {
            Polyline pl = rng.bernoulli(t.linear.angular_fraction) ? gen_angular_polyline(rng, t)
                                                                    : gen_organic_polyline(rng, t);
            const auto px = detail::line_footprint(pl, t.canvas_size);
            if (!canvas.fits(px))
                continue;
            canvas.paint(px, kLinear);
            scene.elements.push_back({Category::linear, order++, std::move(pl), std::nullopt});
            break;
        }
    }

    scene.label = std::move(canvas.label());
    scene.input = ByteRaster(t.canvas_size, t.canvas_size, Band::mask8, scene.label.geo());
    auto in = scene.input.pixels();
    auto lab = scene.label.pixels();
    for (std::size_t k = 0; k < in.size(); ++k)
        in[k] = lab[k] != 0 ? 1 : 0;
    return scene;
}

/// Checks every sampled quantity of a scene against its template; returns a
/// list of violations (empty when compliant).
inline std::vector<std::string> audit_scene(const Scene& s, const SceneTemplate& t)
{
    std::vector<std::string> v;
    auto bad = [&](const std::string& what) { v.push_back(t.id + "/" + std::to_string(s.seed) + ": " + what); };
    const auto& L = t.linear;
    for (const auto& e : s.elements) {
        if (e.line) {
            const Polyline& pl = *e.line;
            if (pl.points.size() < 2)
                bad("polyline with < 2 vertices");
            if (!L.width.contains(pl.width))
                bad("line width out of range");
            if (pl.style == LineStyle::angular) {
                if (!L.angular.segments.contains(static_cast<int>(pl.segment_lengths.size())))
                    bad("segment count out of range");
                for (double len : pl.segment_lengths)
                    if (!L.angular.segment_length.contains(len))
                        bad("segment length out of range");
                for (std::size_t i = 0; i < pl.turns_deg.size(); ++i) {
                    const double mag = std::abs(pl.turns_deg[i]);
                    const bool allowed = i == 0 ? mag == 0.0
                                                : std::find(L.angular.turn_angles_deg.begin(),
                                                            L.angular.turn_angles_deg.end(),
                                                            mag) != L.angular.turn_angles_deg.end();
                    if (!allowed || mag > 120.0)
                        bad("turn angle not in the allowed set");
                }
            } else {
                if (pl.level < 0 || pl.level >= static_cast<int>(L.organic.levels.size())) {
                    bad("curvature level out of range");
                    continue;
                }
                const auto& lv = L.organic.levels[static_cast<std::size_t>(pl.level)];
                if (!lv.variation_deg.contains(pl.variation_deg))
                    bad("angular variation out of range");
                if (!L.organic.steps.contains(static_cast<int>(pl.segment_lengths.size())))
                    bad("step count out of range");
                for (double st : pl.segment_lengths)
                    if (!lv.step.contains(st))
                        bad("step size out of range");
                for (double d : pl.turns_deg)
                    if (std::abs(d) > pl.variation_deg + 1e-12)
                        bad("heading change exceeds the angular variation");
            }
        }
        if (e.patch) {
            const PatchSpec& spec = e.category == Category::large    ? t.large
                                    : e.category == Category::medium ? t.medium
                                                                     : t.tiny;
            const Patch& p = *e.patch;
            if (!spec.size.contains(p.size, 0.5 + 1e-9))
                bad("patch size out of range");
            if (count_nonzero(p.mask) == 0)
                bad("empty patch mask");
            if (p.polygon) {
                if (spec.polygon_probability <= 0.0)
                    bad("polygon patch in a class without polygons");
                if (!p.outline || !ring_is_simple(*p.outline))
                    bad("polygon patch is not simple");
                else if (!spec.polygon_vertices.contains(static_cast<int>(p.outline->size()) - 1))
                    bad("polygon vertex count out of range");
            } else {
                if (!spec.coverage.contains(p.coverage))
                    bad("fBm coverage out of range");
                if (!spec.octaves.contains(p.octaves))
                    bad("fBm octave count out of range");
                if (!spec.base_frequency.contains(p.base_frequency))
                    bad("fBm frequency out of range");
            }
        }
    }
    for (std::size_t k = 0; k < s.input.size(); ++k)
        if (s.input.pixels()[k] != (s.label.pixels()[k] != 0 ? 1 : 0))
            bad("input differs from (label != 0)");
    return v;
}

// ---------------------------------------------------------------------------
// Template library and JSON
// ---------------------------------------------------------------------------

/// Built-in layouts from sparse agricultural to dense mixed landscapes. Sizes
/// are given for a 1024 px canvas and scaled to `canvas`.
inline std::vector<SceneTemplate> builtin_templates(int canvas = 256)
{
    const double s = canvas / 1024.0;
    auto sc = [&](double lo, double hi) { return Range{lo * s, hi * s}; };
    auto base = [&](std::string id) {
        SceneTemplate t;
        t.id = std::move(id);
        t.canvas_size = canvas;
        t.linear.angular.segment_length = sc(100, 800);
        t.linear.width = sc(12, 24);
        const Range step = canvas == 1024 ? Range{15, 20} : Range{std::ceil(15 * s), 20 * s};
        t.linear.organic.levels = {{"low", step, {10, 20}}, {"mid", step, {20, 30}}, {"high", step, {30, 40}}};
        // Walks of roughly 180 to 270 px at 256, scaled with the canvas.
        const double px = canvas / 256.0;
        t.linear.organic.steps = {static_cast<int>(std::lround(180 * px / step.hi)),
                                  static_cast<int>(std::lround(270 * px / step.lo))};
        t.large = {{0, 0}, sc(200, 400), {4, 6}, {1.5, 3.0}, {0.35, 0.5}, 2.0, 0.0, {5, 9}};
        t.medium = {{0, 0}, sc(80, 160), {4, 6}, {1.5, 3.0}, {0.35, 0.5}, 2.0, 0.0, {5, 9}};
        t.tiny = {{0, 0}, sc(20, 48), {4, 5}, {1.0, 2.0}, {0.3, 0.45}, 2.0, 0.0, {5, 9}};
        return t;
    };
    std::vector<SceneTemplate> lib;

    auto t = base("sparse_agricultural");
    t.linear.count = {2, 4};
    t.linear.angular_fraction = 0.8;
    t.large.count = {0, 1};
    t.medium.count = {1, 2};
    t.tiny.count = {2, 5};
    lib.push_back(t);

    t = base("hedgerow_network");
    t.linear.count = {4, 7};
    t.linear.angular_fraction = 0.9;
    t.linear.angular.turn_angles_deg = {0, 15, 30, 45, 60, 75, 90};
    t.medium.count = {1, 2};
    t.tiny.count = {2, 6};
    lib.push_back(t);

    t = base("meandering_riparian");
    t.linear.count = {2, 3};
    t.linear.angular_fraction = 0.1;
    t.medium.count = {1, 3};
    t.tiny.count = {3, 8};
    lib.push_back(t);

    t = base("mixed_woodland");
    t.linear.count = {2, 4};
    t.linear.angular_fraction = 0.5;
    t.large.count = {1, 2};
    t.medium.count = {2, 4};
    t.tiny.count = {4, 10};
    lib.push_back(t);

    t = base("dense_mixed");
    t.linear.count = {4, 6};
    t.linear.angular_fraction = 0.5;
    t.large.count = {2, 3};
    t.medium.count = {3, 5};
    t.tiny.count = {8, 15};
    lib.push_back(t);

    t = base("polygon_fields");
    t.linear.count = {3, 5};
    t.linear.angular_fraction = 1.0;
    t.linear.angular.turn_angles_deg = {0, 90};
    t.large.count = {1, 3};
    t.large.polygon_probability = 0.8;
    t.medium.count = {1, 2};
    lib.push_back(t);

    t = base("occlusion_free");
    t.linear.count = {2, 4};
    t.linear.angular_fraction = 0.5;
    t.large.count = {1, 1};
    t.large.polygon_probability = 0.3;
    t.medium.count = {1, 2};
    t.tiny.count = {1, 3};
    t.allow_overlap = false;
    t.gap = 3;
    lib.push_back(t);

    return lib;
}

/// Ids of the default training mix (every built-in except occlusion_free).
inline std::vector<std::string> default_template_mix()
{
    return {"sparse_agricultural", "hedgerow_network", "meandering_riparian",
            "mixed_woodland",      "dense_mixed",      "polygon_fields"};
}

inline std::optional<SceneTemplate> find_builtin(const std::string& id, int canvas = 256)
{
    for (auto& t : builtin_templates(canvas))
        if (t.id == id)
            return t;
    return std::nullopt;
}

namespace detail {

inline nlohmann::json range_json(const Range& r) { return nlohmann::json::array({r.lo, r.hi}); }
inline nlohmann::json range_json(const IntRange& r) { return nlohmann::json::array({r.lo, r.hi}); }

inline Range range_from(const nlohmann::json& j, const char* key)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw SchemaError(std::string("'") + key + "' must be a [lo, hi] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline IntRange int_range_from(const nlohmann::json& j, const char* key)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw SchemaError(std::string("'") + key + "' must be an integer [lo, hi] pair");
    return {j[0].get<int>(), j[1].get<int>()};
}

inline nlohmann::json patch_json(const PatchSpec& p)
{
    return {{"count", range_json(p.count)},
            {"size", range_json(p.size)},
            {"octaves", range_json(p.octaves)},
            {"base_frequency", range_json(p.base_frequency)},
            {"coverage", range_json(p.coverage)},
            {"falloff", p.falloff},
            {"polygon_probability", p.polygon_probability},
            {"polygon_vertices", range_json(p.polygon_vertices)}};
}

inline void patch_from(const nlohmann::json& j, PatchSpec& p)
{
    if (!j.is_object())
        throw SchemaError("patch spec must be an object");
    if (j.contains("count")) p.count = int_range_from(j["count"], "count");
    if (j.contains("size")) p.size = range_from(j["size"], "size");
    if (j.contains("octaves")) p.octaves = int_range_from(j["octaves"], "octaves");
    if (j.contains("base_frequency")) p.base_frequency = range_from(j["base_frequency"], "base_frequency");
    if (j.contains("coverage")) p.coverage = range_from(j["coverage"], "coverage");
    if (j.contains("falloff")) p.falloff = j["falloff"].get<double>();
    if (j.contains("polygon_probability")) p.polygon_probability = j["polygon_probability"].get<double>();
    if (j.contains("polygon_vertices"))
        p.polygon_vertices = int_range_from(j["polygon_vertices"], "polygon_vertices");
}

} // namespace detail

inline nlohmann::json template_to_json(const SceneTemplate& t)
{
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& lv : t.linear.organic.levels)
        levels.push_back({{"name", lv.name},
                          {"step", detail::range_json(lv.step)},
                          {"variation_deg", detail::range_json(lv.variation_deg)}});
    return {{"id", t.id},
            {"canvas_size", t.canvas_size},
            {"allow_overlap", t.allow_overlap},
            {"gap", t.gap},
            {"placement_attempts", t.placement_attempts},
            {"linear",
             {{"count", detail::range_json(t.linear.count)},
              {"angular_fraction", t.linear.angular_fraction},
              {"width", detail::range_json(t.linear.width)},
              {"angular",
               {{"segments", detail::range_json(t.linear.angular.segments)},
                {"segment_length", detail::range_json(t.linear.angular.segment_length)},
                {"turn_angles_deg", t.linear.angular.turn_angles_deg}}},
              {"organic", {{"steps", detail::range_json(t.linear.organic.steps)}, {"levels", levels}}}}},
            {"large", detail::patch_json(t.large)},
            {"medium", detail::patch_json(t.medium)},
            {"tiny", detail::patch_json(t.tiny)}};
}

/// Parses a template. Missing fields fall back to the built-in template named
/// by "base" (default: sparse_agricultural at the given canvas size).
inline SceneTemplate template_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw SchemaError("template must be a JSON object");
    const int canvas = j.value("canvas_size", 256);
    const std::string base_id = j.value("base", std::string("sparse_agricultural"));
    auto base = find_builtin(base_id, canvas);
    if (!base)
        throw SchemaError("unknown base template '" + base_id + "'");
    SceneTemplate t = *base;
    t.id = j.value("id", t.id);
    t.canvas_size = canvas;
    t.allow_overlap = j.value("allow_overlap", t.allow_overlap);
    t.gap = j.value("gap", t.gap);
    t.placement_attempts = j.value("placement_attempts", t.placement_attempts);
    if (j.contains("linear")) {
        const auto& l = j["linear"];
        if (l.contains("count")) t.linear.count = detail::int_range_from(l["count"], "linear.count");
        if (l.contains("angular_fraction")) t.linear.angular_fraction = l["angular_fraction"].get<double>();
        if (l.contains("width")) t.linear.width = detail::range_from(l["width"], "linear.width");
        if (l.contains("angular")) {
            const auto& a = l["angular"];
            if (a.contains("segments"))
                t.linear.angular.segments = detail::int_range_from(a["segments"], "angular.segments");
            if (a.contains("segment_length"))
                t.linear.angular.segment_length = detail::range_from(a["segment_length"], "segment_length");
            if (a.contains("turn_angles_deg"))
                t.linear.angular.turn_angles_deg = a["turn_angles_deg"].get<std::vector<double>>();
        }
        if (l.contains("organic")) {
            const auto& o = l["organic"];
            if (o.contains("steps")) t.linear.organic.steps = detail::int_range_from(o["steps"], "organic.steps");
            if (o.contains("levels")) {
                t.linear.organic.levels.clear();
                for (const auto& lv : o["levels"])
                    t.linear.organic.levels.push_back({lv.value("name", std::string()),
                                                       detail::range_from(lv.at("step"), "step"),
                                                       detail::range_from(lv.at("variation_deg"), "variation_deg")});
            }
        }
    }
    if (j.contains("large")) detail::patch_from(j["large"], t.large);
    if (j.contains("medium")) detail::patch_from(j["medium"], t.medium);
    if (j.contains("tiny")) detail::patch_from(j["tiny"], t.tiny);
    validate(t);
    return t;
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct DatasetConfig {
    std::uint64_t seed = 0;
    std::vector<SceneTemplate> templates;
    bool write_skeletons = false;
};

/// Accepts {"seed": int, "templates": [id | template object, ...],
/// "canvas_size": int, "write_skeletons": bool}. Templates default to the
/// built-in training mix.
inline DatasetConfig dataset_config_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw SchemaError("dataset config must be a JSON object");
    DatasetConfig cfg;
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.write_skeletons = j.value("write_skeletons", false);
    const int canvas = j.value("canvas_size", 256);
    if (j.contains("templates")) {
        if (!j["templates"].is_array() || j["templates"].empty())
            throw SchemaError("'templates' must be a non-empty array");
        for (const auto& t : j["templates"]) {
            if (t.is_string()) {
                auto b = find_builtin(t.get<std::string>(), canvas);
                if (!b)
                    throw SchemaError("unknown template '" + t.get<std::string>() + "'");
                cfg.templates.push_back(*b);
            } else {
                nlohmann::json tj = t;
                if (!tj.contains("canvas_size"))
                    tj["canvas_size"] = canvas;
                cfg.templates.push_back(template_from_json(tj));
            }
        }
    } else {
        for (const auto& id : default_template_mix())
            cfg.templates.push_back(*find_builtin(id, canvas));
    }
    return cfg;
}

/// Template and seed of scene `index`; depends only on (config, index).
inline std::pair<const SceneTemplate*, std::uint64_t> scene_assignment(const DatasetConfig& cfg,
                                                                       std::uint64_t index)
{
    const std::uint64_t s = derive_seed(cfg.seed, index);
    return {&cfg.templates[mix64(s) % cfg.templates.size()], s};
}

/// Writes n scenes and a manifest.json into out_dir; returns the manifest.
inline nlohmann::json generate_dataset(const DatasetConfig& cfg, std::size_t n, const std::filesystem::path& out_dir,
                                       int workers = 1)
{
    if (n < 1)
        throw Error("dataset size must be >= 1");
    if (cfg.templates.empty())
        throw SchemaError("dataset config has no templates");
    std::filesystem::create_directories(out_dir);
    std::vector<nlohmann::json> entries(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const auto [tmpl, seed] = scene_assignment(cfg, i);
        const Scene s = compose_scene(*tmpl, seed);
        char stem[32];
        std::snprintf(stem, sizeof stem, "scene_%06zu", i);
        const std::string in_name = std::string(stem) + ".input.pgm";
        const std::string label_name = std::string(stem) + ".label.pgm";
        write_raster(s.input, out_dir / in_name);
        write_raster(s.label, out_dir / label_name);
        nlohmann::json e;
        e["input"] = in_name;
        e["label"] = label_name;
        if (cfg.write_skeletons) {
            const std::string skel_name = std::string(stem) + ".skeleton.pgm";
            write_raster(skeletonize(threshold_mask(s.label, [](std::uint8_t v) { return v == kLinear; })),
                         out_dir / skel_name);
            e["skeleton"] = skel_name;
        }
        e["seed"] = seed;
        e["template"] = tmpl->id;
        entries[i] = std::move(e);
    });
    nlohmann::json manifest;
    manifest["seed"] = cfg.seed;
    manifest["count"] = n;
    manifest["canvas_size"] = cfg.templates.front().canvas_size;
    manifest["templates"] = nlohmann::json::array();
    for (const auto& t : cfg.templates)
        manifest["templates"].push_back(template_to_json(t));
    manifest["entries"] = std::move(entries);
    std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
    if (!out)
        throw Error("cannot write manifest in " + out_dir.string());
    out << manifest.dump(2) << "\n";
    return manifest;
}

} // namespace lwf
