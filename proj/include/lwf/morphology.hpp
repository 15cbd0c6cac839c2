// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lwf/raster.hpp"

namespace lwf {

// ---------------------------------------------------------------------------
// Thinning
// ---------------------------------------------------------------------------

namespace detail {

// 8-neighbourhood in Zhang-Suen order P2..P9 (N, NE, E, SE, S, SW, W, NW)
// for a buffer padded by one pixel on every side.
inline std::array<std::uint8_t, 8> neighbours(const std::vector<std::uint8_t>& img, std::size_t i,
                                              std::size_t stride)
{
    return {img[i - stride],     img[i - stride + 1], img[i + 1], img[i + stride + 1],
            img[i + stride],     img[i + stride - 1], img[i - 1], img[i - stride - 1]};
}

inline bool zhang_suen_deletable(const std::array<std::uint8_t, 8>& p, int pass)
{
    int b = 0;
    int a = 0;
    for (int k = 0; k < 8; ++k) {
        b += p[k];
        if (p[k] == 0 && p[(k + 1) % 8] == 1)
            ++a;
    }
    if (b < 2 || b > 6 || a != 1)
        return false;
    // p[0]=P2 N, p[2]=P4 E, p[4]=P6 S, p[6]=P8 W
    if (pass == 0)
        return (p[0] & p[2] & p[4]) == 0 && (p[2] & p[4] & p[6]) == 0;
    return (p[0] & p[2] & p[6]) == 0 && (p[0] & p[4] & p[6]) == 0;
}

// Yokoi 8-connectivity number; 1 means removing the pixel changes neither
// the foreground nor the background topology.
inline int connectivity_number8(const std::array<std::uint8_t, 8>& p)
{
    int n = 0;
    for (int k = 0; k < 8; k += 2) {
        const int a = 1 - p[k];
        const int b = 1 - p[(k + 1) % 8];
        const int c = 1 - p[(k + 2) % 8];
        n += a - a * b * c;
    }
    return n;
}

inline bool in_2x2_block(const std::vector<std::uint8_t>& img, std::size_t i, std::size_t stride)
{
    const auto p = neighbours(img, i, stride);
    // (N, NE, E), (E, SE, S), (S, SW, W), (W, NW, N)
    for (int k = 0; k < 8; k += 2)
        if (p[k] && p[k + 1] && p[(k + 2) % 8])
            return true;
    return false;
}

} // namespace detail

/// Zhang-Suen thinning of an 8-connected foreground.
///
/// Each sub-iteration marks candidates against a snapshot of the image and
/// then removes them in raster order, re-testing every candidate against the
/// current image. The re-test only admits simple points, so components never
/// split or vanish (plain parallel Zhang-Suen erases 2x2 blocks entirely).
/// Pixels of leftover 2x2 blocks are removed when they are simple and not
/// end points; a block survives only where all four pixels carry topology.
inline ByteRaster skeletonize(const ByteRaster& mask)
{
    const int w = mask.width();
    const int h = mask.height();
    const std::size_t stride = static_cast<std::size_t>(w) + 2;
    std::vector<std::uint8_t> img(stride * (static_cast<std::size_t>(h) + 2), 0);
    std::vector<std::size_t> fg;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (mask(c, r)) {
                const std::size_t i = (r + 1) * stride + (c + 1);
                img[i] = 1;
                fg.push_back(i);
            }

    std::vector<std::size_t> marked;
    for (bool changed = true; changed;) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            marked.clear();
            for (std::size_t i : fg)
                if (detail::zhang_suen_deletable(detail::neighbours(img, i, stride), pass))
                    marked.push_back(i);
            for (std::size_t i : marked) {
                if (detail::zhang_suen_deletable(detail::neighbours(img, i, stride), pass)) {
                    img[i] = 0;
                    changed = true;
                }
            }
            if (!marked.empty())
                std::erase_if(fg, [&](std::size_t i) { return img[i] == 0; });
        }
        if (changed)
            continue;
        for (std::size_t i : fg) {
            if (!detail::in_2x2_block(img, i, stride))
                continue;
            const auto p = detail::neighbours(img, i, stride);
            int b = 0;
            for (auto v : p)
                b += v;
            if (b >= 2 && detail::connectivity_number8(p) == 1) {
                img[i] = 0;
                changed = true;
            }
        }
        if (changed)
            std::erase_if(fg, [&](std::size_t i) { return img[i] == 0; });
    }

    ByteRaster out(w, h, Band::mask8, mask.geo());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            out(c, r) = img[(r + 1) * stride + (c + 1)];
    return out;
}

// ---------------------------------------------------------------------------
// Exact Euclidean distance transform
// ---------------------------------------------------------------------------

/// Squared distances in pixel units, row-major. Pixels with no foreground
/// anywhere hold kUnreachable.
struct SquaredDistanceField {
    static constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::max() / 4;

    int width = 0;
    int height = 0;
    std::vector<std::int64_t> d2;

    std::int64_t operator()(int col, int row) const
    {
        return d2[static_cast<std::size_t>(row) * width + col];
    }
    bool empty_source() const { return !d2.empty() && d2.front() == kUnreachable; }
};

namespace detail {

// Lower envelope of parabolas (q - v)^2 + f(v) over the finite samples of f.
inline void edt_1d(const std::int64_t* f, std::size_t fstride, int n, std::int64_t* d, std::size_t dstride,
                   std::vector<int>& v, std::vector<double>& z)
{
    constexpr std::int64_t inf = SquaredDistanceField::kUnreachable;
    v.resize(n);
    z.resize(n + 1);
    int k = -1;
    auto f_at = [&](int q) { return f[q * fstride]; };
    for (int q = 0; q < n; ++q) {
        const std::int64_t fq = f_at(q);
        if (fq >= inf)
            continue;
        for (;;) {
            if (k < 0) {
                k = 0;
                v[0] = q;
                z[0] = -std::numeric_limits<double>::infinity();
                z[1] = std::numeric_limits<double>::infinity();
                break;
            }
            const int p = v[k];
            const double s = (static_cast<double>(fq + std::int64_t(q) * q) -
                              static_cast<double>(f_at(p) + std::int64_t(p) * p)) /
                             (2.0 * (q - p));
            if (s <= z[k]) {
                --k;
                continue;
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = std::numeric_limits<double>::infinity();
            break;
        }
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q)
            d[q * dstride] = inf;
        return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q)
            ++k;
        const std::int64_t dq = q - v[k];
        d[q * dstride] = dq * dq + f_at(v[k]);
    }
}

inline SquaredDistanceField squared_edt_of(const std::vector<std::uint8_t>& src, int w, int h)
{
    constexpr std::int64_t inf = SquaredDistanceField::kUnreachable;
    SquaredDistanceField out{w, h, std::vector<std::int64_t>(static_cast<std::size_t>(w) * h)};
    std::vector<std::int64_t> f(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = src[i] ? 0 : inf;

    std::vector<int> v;
    std::vector<double> z;
    std::vector<std::int64_t> col(static_cast<std::size_t>(h));
    // Columns first, then rows over the column results.
    for (int c = 0; c < w; ++c) {
        edt_1d(f.data() + c, w, h, col.data(), 1, v, z);
        for (int r = 0; r < h; ++r)
            f[static_cast<std::size_t>(r) * w + c] = col[r];
    }
    for (int r = 0; r < h; ++r)
        edt_1d(f.data() + static_cast<std::size_t>(r) * w, 1, w,
               out.d2.data() + static_cast<std::size_t>(r) * w, 1, v, z);
    return out;
}

} // namespace detail

/// Exact squared Euclidean distance from every pixel to the nearest
/// foreground pixel.
inline SquaredDistanceField squared_distance_transform(const ByteRaster& mask)
{
    std::vector<std::uint8_t> src(mask.pixels().begin(), mask.pixels().end());
    return detail::squared_edt_of(src, mask.width(), mask.height());
}

/// Value written where no foreground exists: never smaller than the image
/// diagonal.
inline float distance_sentinel(int width, int height)
{
    return static_cast<float>(width + height);
}

/// Exact Euclidean distance (pixel units) to the nearest foreground pixel;
/// 0 on foreground. An all-background mask yields distance_sentinel().
inline FloatRaster distance_transform(const ByteRaster& mask)
{
    const auto sq = squared_distance_transform(mask);
    FloatRaster out(mask.width(), mask.height(), Band::index_f32, mask.geo());
    auto px = out.pixels();
    const float sentinel = distance_sentinel(mask.width(), mask.height());
    for (std::size_t i = 0; i < px.size(); ++i)
        px[i] = sq.d2[i] >= SquaredDistanceField::kUnreachable
                    ? sentinel
                    : static_cast<float>(std::sqrt(static_cast<double>(sq.d2[i])));
    return out;
}

/// Distance from each foreground pixel to the nearest background pixel,
/// treating everything outside the raster as background. 0 on background.
inline FloatRaster distance_to_background(const ByteRaster& mask)
{
    const int w = mask.width() + 2;
    const int h = mask.height() + 2;
    std::vector<std::uint8_t> bg(static_cast<std::size_t>(w) * h, 1);
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            bg[static_cast<std::size_t>(r + 1) * w + c + 1] = mask(c, r) ? 0 : 1;
    const auto sq = detail::squared_edt_of(bg, w, h);
    FloatRaster out(mask.width(), mask.height(), Band::index_f32, mask.geo());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            out(c, r) = static_cast<float>(std::sqrt(static_cast<double>(sq(c + 1, r + 1))));
    return out;
}

// ---------------------------------------------------------------------------
// Connected components
// ---------------------------------------------------------------------------

struct ComponentStats {
    int label = 0;
    std::size_t area = 0;
    int min_col = 0, min_row = 0, max_col = 0, max_row = 0;
    std::size_t skeleton_length = 0;
    double mean_radius = 0.0;
};

/// Dense labels 1..count in raster order of each component's first pixel;
/// background is 0.
struct Components {
    int width = 0;
    int height = 0;
    std::vector<int> labels;
    int count = 0;
    std::vector<ComponentStats> stats;  // stats[k] describes label k + 1

    int operator()(int col, int row) const { return labels[static_cast<std::size_t>(row) * width + col]; }
};

/// Labels foreground components. With `with_stats`, fills area, bounding
/// box, skeleton length (pixels of skeletonize()) and mean radius (mean of
/// distance_to_background() over the skeleton pixels).
inline Components connected_components(const ByteRaster& mask, int connectivity = 8, bool with_stats = true)
{
    if (connectivity != 4 && connectivity != 8)
        throw Error("connectivity must be 4 or 8");
    const int w = mask.width();
    const int h = mask.height();
    Components cc{w, h, std::vector<int>(static_cast<std::size_t>(w) * h, 0), 0, {}};
    std::vector<std::pair<int, int>> stack;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (!mask(c, r) || cc.labels[static_cast<std::size_t>(r) * w + c])
                continue;
            const int id = ++cc.count;
            ComponentStats st{id, 0, c, r, c, r, 0, 0.0};
            cc.labels[static_cast<std::size_t>(r) * w + c] = id;
            stack.assign(1, {c, r});
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                ++st.area;
                st.min_col = std::min(st.min_col, x);
                st.max_col = std::max(st.max_col, x);
                st.min_row = std::min(st.min_row, y);
                st.max_row = std::max(st.max_row, y);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if ((dx == 0 && dy == 0) || (connectivity == 4 && dx != 0 && dy != 0))
                            continue;
                        const int nx = x + dx, ny = y + dy;
                        if (!mask.contains(nx, ny) || !mask(nx, ny))
                            continue;
                        int& l = cc.labels[static_cast<std::size_t>(ny) * w + nx];
                        if (l == 0) {
                            l = id;
                            stack.emplace_back(nx, ny);
                        }
                    }
            }
            cc.stats.push_back(st);
        }

    if (with_stats && cc.count > 0) {
        const ByteRaster skel = skeletonize(mask);
        const FloatRaster radius = distance_to_background(mask);
        std::vector<double> radius_sum(cc.count, 0.0);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                if (skel(c, r)) {
                    const int id = cc(c, r);
                    ++cc.stats[id - 1].skeleton_length;
                    radius_sum[id - 1] += radius(c, r);
                }
        for (int k = 0; k < cc.count; ++k)
            if (cc.stats[k].skeleton_length > 0)
                cc.stats[k].mean_radius = radius_sum[k] / static_cast<double>(cc.stats[k].skeleton_length);
    }
    return cc;
}

} // namespace lwf
