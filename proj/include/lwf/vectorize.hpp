// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Class raster to polygons by pixel-edge tracing.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lwf/geometry.hpp"
#include "lwf/morphology.hpp"
#include "lwf/raster.hpp"

namespace lwf {

namespace detail {

// Edge directions in pixel-corner coordinates (x right, y down).
constexpr std::array<std::array<int, 2>, 4> kDirs{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};  // E S W N

inline int dir_index(int dx, int dy)
{
    for (int k = 0; k < 4; ++k)
        if (kDirs[k][0] == dx && kDirs[k][1] == dy)
            return k;
    return -1;
}

struct CornerRing {
    std::vector<std::array<int, 2>> pts;  // closed, corner coordinates
    std::int64_t twice_area = 0;          // shoelace, y-down orientation
};

/// Boundary cycles of the pixels with labels[i] == id inside the bounding
/// box. Edges keep the region on the same side; at a vertex shared by two
/// diagonal pixels the walk turns right, which keeps 8-connected pixels on
/// one ring.
inline std::vector<CornerRing> trace_region(const Components& cc, int id, const ComponentStats& st)
{
    const int x0 = st.min_col, y0 = st.min_row;
    const int w = st.max_col - st.min_col + 1, h = st.max_row - st.min_row + 1;
    const int vw = w + 1;
    auto inside = [&](int c, int r) {
        return c >= 0 && r >= 0 && c < cc.width && r < cc.height && cc(c, r) == id;
    };
    // Outgoing edge bits per local vertex.
    std::vector<std::uint8_t> out(static_cast<std::size_t>(vw) * (h + 1), 0);
    auto add = [&](int vx, int vy, int d) { out[static_cast<std::size_t>(vy) * vw + vx] |= std::uint8_t(1u << d); };
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int gc = x0 + c, gr = y0 + r;
            if (cc(gc, gr) != id)
                continue;
            if (!inside(gc, gr - 1)) add(c + 1, r, 2);      // top, westward
            if (!inside(gc, gr + 1)) add(c, r + 1, 0);      // bottom, eastward
            if (!inside(gc - 1, gr)) add(c, r, 1);          // left, southward
            if (!inside(gc + 1, gr)) add(c + 1, r + 1, 3);  // right, northward
        }
    std::vector<CornerRing> rings;
    for (int vy = 0; vy <= h; ++vy)
        for (int vx = 0; vx <= w; ++vx) {
            while (out[static_cast<std::size_t>(vy) * vw + vx]) {
                CornerRing ring;
                int cx = vx, cy = vy;
                int d = -1;
                for (;;) {
                    std::uint8_t& bits = out[static_cast<std::size_t>(cy) * vw + cx];
                    if (!bits)
                        break;
                    int nd = -1;
                    if (d >= 0 && (bits & (1u << ((d + 1) % 4))))
                        nd = (d + 1) % 4;  // right turn in y-down coordinates
                    else
                        for (int k = 0; k < 4 && nd < 0; ++k)
                            if (bits & (1u << k))
                                nd = k;
                    bits = std::uint8_t(bits & ~(1u << nd));
                    if (nd != d)
                        ring.pts.push_back({cx + x0, cy + y0});
                    cx += kDirs[nd][0];
                    cy += kDirs[nd][1];
                    d = nd;
                }
                // Drop the start vertex if the ring runs straight through it.
                if (ring.pts.size() > 2) {
                    const auto& a = ring.pts.back();
                    const auto& b = ring.pts.front();
                    const auto& c = ring.pts[1];
                    if ((b[0] - a[0]) * (c[1] - b[1]) == (b[1] - a[1]) * (c[0] - b[0]))
                        ring.pts.erase(ring.pts.begin());
                }
                std::int64_t a2 = 0;
                for (std::size_t i = 0; i < ring.pts.size(); ++i) {
                    const auto& p = ring.pts[i];
                    const auto& q = ring.pts[(i + 1) % ring.pts.size()];
                    a2 += static_cast<std::int64_t>(p[0]) * q[1] - static_cast<std::int64_t>(q[0]) * p[1];
                }
                ring.twice_area = a2;
                ring.pts.push_back(ring.pts.front());
                rings.push_back(std::move(ring));
            }
        }
    return rings;
}

inline bool corner_ring_contains(const CornerRing& ring, double x, double y)
{
    bool in = false;
    const auto& p = ring.pts;
    for (std::size_t i = 0, j = p.size() - 2; i + 1 < p.size(); j = i++) {
        const double xi = p[i][0], yi = p[i][1], xj = p[j][0], yj = p[j][1];
        if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi)
            in = !in;
    }
    return in;
}

inline Ring to_geo_ring(const CornerRing& r, const GeoTransform& g, bool reverse)
{
    Ring out;
    out.reserve(r.pts.size());
    for (const auto& p : r.pts)
        out.push_back({g.col_to_x(p[0]), g.row_to_y(p[1])});
    if (reverse)
        std::reverse(out.begin(), out.end());
    return out;
}

} // namespace detail

/// One polygon with holes per 8-connected region of class 1 and of class 2.
/// Boundaries follow pixel edges; collinear vertices are removed. Exterior
/// rings are counter-clockwise and holes clockwise in map coordinates.
inline PolygonSet vectorize(const ByteRaster& classes)
{
    PolygonSet set;
    set.epsg = classes.geo().epsg;
    const GeoTransform& g = classes.geo();
    for (std::uint8_t cls : {kLinear, kNonLinear}) {
        const ByteRaster m = threshold_mask(classes, [cls](std::uint8_t v) { return v == cls; });
        const Components cc = connected_components(m, 8, false);
        for (int id = 1; id <= cc.count; ++id) {
            const auto rings = detail::trace_region(cc, id, cc.stats[static_cast<std::size_t>(id - 1)]);
            // Walking with the region on the left in y-down coordinates gives
            // negative shoelace area for exteriors.
            std::vector<const detail::CornerRing*> outers, holes;
            for (const auto& r : rings)
                (r.twice_area < 0 ? outers : holes).push_back(&r);
            std::vector<Polygon> polys;
            for (const auto* o : outers) {
                Polygon p;
                p.cls = cls;
                p.outer = detail::to_geo_ring(*o, g, false);
                polys.push_back(std::move(p));
            }
            for (const auto* hr : holes) {
                // Test a point just inside the hole next to its first edge.
                const auto& a = hr->pts[0];
                const auto& b = hr->pts[1];
                const double mx = (a[0] + b[0]) / 2.0, my = (a[1] + b[1]) / 2.0;
                const double dx = b[0] - a[0], dy = b[1] - a[1];
                const double len = std::hypot(dx, dy);
                const double px = mx + 0.25 * (-dy) / len, py = my + 0.25 * dx / len;
                std::size_t best = 0;
                std::int64_t best_area = -1;
                for (std::size_t k = 0; k < outers.size(); ++k)
                    if (detail::corner_ring_contains(*outers[k], px, py) &&
                        (best_area < 0 || -outers[k]->twice_area < best_area)) {
                        best = k;
                        best_area = -outers[k]->twice_area;
                    }
                polys[best].holes.push_back(detail::to_geo_ring(*hr, g, false));
            }
            for (auto& p : polys)
                set.polygons.push_back(std::move(p));
        }
    }
    return set;
}

} // namespace lwf
