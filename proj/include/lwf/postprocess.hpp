// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Polygon post-processing: boundary selection, erasure, area filter and
// optional simplification.

#pragma once

#include <map>
#include <string>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

#include "lwf/geometry.hpp"

namespace lwf {

namespace bg = boost::geometry;

using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint, false, true>;  // counter-clockwise, closed
using BgMulti = bg::model::multi_polygon<BgPolygon>;

namespace detail {

/// Splits a ring at repeated vertices into loops that visit each vertex once.
inline std::vector<Ring> simple_loops(const Ring& ring)
{
    std::vector<Ring> loops;
    std::vector<Point> stack;
    std::map<Point, std::size_t> seen;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const Point& p = ring[i];
        auto it = seen.find(p);
        if (it != seen.end()) {
            Ring loop(stack.begin() + static_cast<std::ptrdiff_t>(it->second), stack.end());
            for (std::size_t k = it->second + 1; k < stack.size(); ++k)
                seen.erase(stack[k]);
            stack.resize(it->second + 1);
            loop.push_back(loop.front());
            if (loop.size() >= 4)
                loops.push_back(std::move(loop));
            continue;
        }
        seen.emplace(p, stack.size());
        stack.push_back(p);
    }
    if (stack.size() >= 3) {
        stack.push_back(stack.front());
        loops.push_back(std::move(stack));
    }
    return loops;
}

inline BgMulti loop_geometry(const Ring& loop)
{
    BgPolygon p;
    for (const Point& q : loop)
        bg::append(p.outer(), BgPoint(q.x, q.y));
    bg::correct(p);
    BgMulti m;
    if (bg::area(p) > 0)
        m.push_back(std::move(p));
    return m;
}

inline BgMulti sym_diff(const BgMulti& a, const BgMulti& b)
{
    BgMulti out;
    bg::sym_difference(a, b, out);
    return out;
}

} // namespace detail

/// Area set of a polygon: the even-odd combination of all its rings. Rings
/// that touch themselves are split into simple loops first, so pixel-traced
/// polygons convert to valid geometry.
inline BgMulti to_boost(const Polygon& p)
{
    BgMulti acc;
    auto add_ring = [&](const Ring& r) {
        for (const Ring& loop : detail::simple_loops(r))
            acc = detail::sym_diff(acc, detail::loop_geometry(loop));
    };
    add_ring(p.outer);
    for (const Ring& h : p.holes)
        add_ring(h);
    return acc;
}

inline Polygon from_boost(const BgPolygon& bp, const Polygon& proto)
{
    Polygon p;
    p.cls = proto.cls;
    p.attributes = proto.attributes;
    for (const auto& q : bp.outer())
        p.outer.push_back({q.x(), q.y()});
    for (const auto& in : bp.inners()) {
        Ring h;
        for (const auto& q : in)
            h.push_back({q.x(), q.y()});
        p.holes.push_back(std::move(h));
    }
    return p;
}

inline BgMulti union_of(const PolygonSet& set)
{
    BgMulti acc;
    for (const Polygon& p : set.polygons) {
        if (!ring_is_valid(p.outer))
            continue;
        BgMulti out;
        bg::union_(acc, to_boost(p), out);
        acc = std::move(out);
    }
    return acc;
}

struct PostprocessParams {
    double min_area = 250.0;          // map units squared
    double simplify_tolerance = 0.0;  // map units; 0 disables
};

struct PostprocessResult {
    PolygonSet polygons;
    std::vector<std::string> warnings;
};

/// Keeps polygons that intersect the boundary (when one is given), subtracts
/// the union of the erase layer, then drops results smaller than min_area.
/// A result is everything left of one input polygon and may have several parts.
inline PostprocessResult postprocess(const PolygonSet& polys, const PostprocessParams& params,
                                     const PolygonSet& erase = {}, const PolygonSet& boundary = {})
{
    PostprocessResult res;
    res.polygons.epsg = polys.epsg;
    const BgMulti erase_u = union_of(erase);
    const BgMulti bound_u = union_of(boundary);
    const bool use_boundary = !boundary.empty();
    for (std::size_t i = 0; i < polys.polygons.size(); ++i) {
        const Polygon& p = polys.polygons[i];
        bool valid = ring_is_valid(p.outer);
        for (const Ring& h : p.holes)
            valid = valid && ring_is_valid(h);
        if (!valid) {
            res.warnings.push_back("polygon " + std::to_string(i) + ": invalid ring skipped");
            continue;
        }
        BgMulti geom = to_boost(p);
        if (use_boundary && !bg::intersects(geom, bound_u))
            continue;
        if (!erase_u.empty()) {
            BgMulti diff;
            bg::difference(geom, erase_u, diff);
            geom = std::move(diff);
        }
        // The area filter applies to the whole result of one input polygon.
        if (geom.empty() || bg::area(geom) < params.min_area)
            continue;
        for (const BgPolygon& part : geom) {
            if (params.simplify_tolerance > 0.0) {
                BgPolygon s;
                bg::simplify(part, s, params.simplify_tolerance);
                if (bg::is_valid(s) && bg::area(s) > 0.0) {
                    res.polygons.polygons.push_back(from_boost(s, p));
                    continue;
                }
            }
            res.polygons.polygons.push_back(from_boost(part, p));
        }
    }
    return res;
}

inline double total_area(const PolygonSet& set)
{
    double a = 0.0;
    for (const Polygon& p : set.polygons)
        a += bg::area(to_boost(p));
    return a;
}

} // namespace lwf
