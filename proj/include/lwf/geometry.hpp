// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lwf/errors.hpp"
#include "lwf/raster.hpp"

namespace lwf {

struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point&) const = default;
    auto operator<=>(const Point&) const = default;
};

/// Closed ring: first vertex repeated as the last one.
using Ring = std::vector<Point>;

/// A polygon with an exterior ring and optional holes. Filling uses the
/// even-odd rule over all rings, so a ring may touch itself at a vertex.
struct Polygon {
    Ring outer;
    std::vector<Ring> holes;
    int cls = 0;
    std::map<std::string, std::string> attributes;
};

struct PolygonSet {
    std::vector<Polygon> polygons;
    int epsg = 0;

    bool empty() const { return polygons.empty(); }
    std::size_t size() const { return polygons.size(); }
};

inline bool ring_is_valid(const Ring& r)
{
    return r.size() >= 4 && r.front() == r.back();
}

inline void validate(const PolygonSet& set)
{
    for (const auto& p : set.polygons) {
        if (!ring_is_valid(p.outer))
            throw FormatError("polygon exterior ring is not closed or has < 4 vertices");
        for (const auto& h : p.holes)
            if (!ring_is_valid(h))
                throw FormatError("polygon hole is not closed or has < 4 vertices");
    }
}

/// Shoelace area; positive for counter-clockwise rings in a y-up frame.
inline double signed_area(const Ring& r)
{
    double a = 0.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i)
        a += r[i].x * r[i + 1].y - r[i + 1].x * r[i].y;
    return 0.5 * a;
}

inline Ring rectangle_ring(double x0, double y0, double x1, double y1)
{
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

namespace detail {

// Appends the x coordinates where the ring crosses the horizontal line y.
// Half-open rule on y so vertices are counted once.
inline void ring_crossings(const Ring& ring, double y, std::vector<double>& xs)
{
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const Point& a = ring[i];
        const Point& b = ring[i + 1];
        if ((a.y <= y) != (b.y <= y)) {
            const double t = (y - a.y) / (b.y - a.y);
            xs.push_back(a.x + t * (b.x - a.x));
        }
    }
}

template <typename Fill>
void scan_polygon(const Polygon& poly, const GeoTransform& geo, int width, int height, Fill fill)
{
    double min_y = poly.outer.front().y, max_y = min_y;
    for (const Point& p : poly.outer) {
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    for (const auto& h : poly.holes)
        for (const Point& p : h) {
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
    const int r0 = static_cast<int>(std::clamp(std::floor(geo.y_to_row(max_y)) - 1, 0.0, double(height)));
    const int r1 = static_cast<int>(std::clamp(std::ceil(geo.y_to_row(min_y)) + 1, -1.0, double(height - 1)));

    std::vector<double> xs;
    for (int r = r0; r <= r1; ++r) {
        const double cy = geo.row_to_y(r + 0.5);
        xs.clear();
        ring_crossings(poly.outer, cy, xs);
        for (const auto& h : poly.holes)
            ring_crossings(h, cy, xs);
        std::sort(xs.begin(), xs.end());
        // Pixel centre cx is inside iff an odd number of crossings lie
        // strictly to its right, i.e. cx in [xs[2k], xs[2k+1]).
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const double c_lo = std::ceil(geo.x_to_col(xs[k]) - 0.5);
            const double c_hi = std::ceil(geo.x_to_col(xs[k + 1]) - 0.5) - 1;
            const int lo = static_cast<int>(std::clamp(c_lo, 0.0, double(width)));
            const int hi = static_cast<int>(std::clamp(c_hi, -1.0, double(width - 1)));
            for (int c = lo; c <= hi; ++c)
                fill(c, r);
        }
    }
}

} // namespace detail

/// Burns polygons into a mask8 raster on `tmpl`'s grid: a pixel is set iff
/// its centre lies inside any polygon (even-odd rule per polygon).
template <typename T>
ByteRaster rasterize(const PolygonSet& polys, const Raster<T>& tmpl)
{
    if (!polys.empty() && polys.epsg != tmpl.geo().epsg)
        throw GridMismatch("polygon set and template raster use different EPSG codes");
    ByteRaster out(tmpl.width(), tmpl.height(), Band::mask8, tmpl.geo());
    for (const auto& p : polys.polygons) {
        if (p.outer.size() < 4)
            continue;
        detail::scan_polygon(p, tmpl.geo(), tmpl.width(), tmpl.height(),
                             [&](int c, int r) { out(c, r) = 1; });
    }
    return out;
}

/// Like rasterize() but writes each polygon's class label (class8 output,
/// later polygons win). Labels outside {1,2} are skipped.
template <typename T>
ByteRaster rasterize_classes(const PolygonSet& polys, const Raster<T>& tmpl)
{
    if (!polys.empty() && polys.epsg != tmpl.geo().epsg)
        throw GridMismatch("polygon set and template raster use different EPSG codes");
    ByteRaster out(tmpl.width(), tmpl.height(), Band::class8, tmpl.geo());
    for (const auto& p : polys.polygons) {
        if (p.outer.size() < 4 || (p.cls != kLinear && p.cls != kNonLinear))
            continue;
        const auto v = static_cast<std::uint8_t>(p.cls);
        detail::scan_polygon(p, tmpl.geo(), tmpl.width(), tmpl.height(),
                             [&](int c, int r) { out(c, r) = v; });
    }
    return out;
}

/// Bounding box (min_x, min_y, max_x, max_y) of all exterior rings.
struct BBox {
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

inline BBox bounds(const PolygonSet& set)
{
    BBox b{1e300, 1e300, -1e300, -1e300};
    for (const auto& p : set.polygons)
        for (const Point& q : p.outer) {
            b.min_x = std::min(b.min_x, q.x);
            b.min_y = std::min(b.min_y, q.y);
            b.max_x = std::max(b.max_x, q.x);
            b.max_y = std::max(b.max_y, q.y);
        }
    return b;
}

} // namespace lwf
