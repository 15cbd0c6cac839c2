// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Overlapping chip inference over large rasters with centre-crop stitching.

#pragma once

#include <string>
#include <vector>

#include "lwf/errors.hpp"
#include "lwf/parallel.hpp"
#include "lwf/raster.hpp"
#include "lwf/separator.hpp"

namespace lwf {

struct PixelRect {
    int col = 0, row = 0, width = 0, height = 0;
    int col_end() const { return col + width; }
    int row_end() const { return row + height; }
    bool operator==(const PixelRect&) const = default;
};

/// A chip window; `keep` is in raster coordinates and lies inside `window`
/// clipped to the raster.
struct ChipWindow {
    int grid_col = 0;
    int grid_row = 0;
    PixelRect window;
    PixelRect keep;

    std::string id() const { return "r" + std::to_string(grid_row) + "_c" + std::to_string(grid_col); }
};

struct ChipPlan {
    int raster_width = 0;
    int raster_height = 0;
    int chip_size = 0;
    int stride = 0;
    int cols = 0;
    int rows = 0;
    std::vector<ChipWindow> windows;  // row-major
};

namespace detail {

struct AxisSpan {
    int offset, keep_begin, keep_end;
};

inline std::vector<AxisSpan> plan_axis(int extent, int chip)
{
    const int stride = chip / 2;
    const int n = extent <= chip ? 1 : (extent - chip + stride - 1) / stride + 1;
    std::vector<AxisSpan> spans;
    for (int k = 0; k < n; ++k) {
        const int off = k * stride;
        const int begin = k == 0 ? 0 : off + chip / 4;
        const int end = k == n - 1 ? extent : off + 3 * chip / 4;
        spans.push_back({off, begin, end});
    }
    return spans;
}

} // namespace detail

/// Windows at multiples of chip/2. Interior keep-regions are the central
/// chip/2 squares; edge keep-regions extend to the raster border, so the
/// keep-regions partition the raster.
inline ChipPlan plan_chips(int width, int height, int chip_size = 1024)
{
    if (width < 1 || height < 1)
        throw Error("plan_chips: empty extent");
    if (chip_size < 4 || chip_size % 4 != 0)
        throw Error("plan_chips: chip size must be a positive multiple of 4");
    ChipPlan plan{width, height, chip_size, chip_size / 2, 0, 0, {}};
    const auto xs = detail::plan_axis(width, chip_size);
    const auto ys = detail::plan_axis(height, chip_size);
    plan.cols = static_cast<int>(xs.size());
    plan.rows = static_cast<int>(ys.size());
    for (int j = 0; j < plan.rows; ++j)
        for (int i = 0; i < plan.cols; ++i) {
            const auto& x = xs[static_cast<std::size_t>(i)];
            const auto& y = ys[static_cast<std::size_t>(j)];
            plan.windows.push_back({i, j, {x.offset, y.offset, chip_size, chip_size},
                                    {x.keep_begin, y.keep_begin, x.keep_end - x.keep_begin, y.keep_end - y.keep_begin}});
        }
    return plan;
}

/// Window contents, zero outside the raster.
inline ByteRaster extract_chip(const ByteRaster& mosaic, const PixelRect& w)
{
    GeoTransform geo = mosaic.geo();
    geo.origin_x = mosaic.geo().col_to_x(w.col);
    geo.origin_y = mosaic.geo().row_to_y(w.row);
    ByteRaster chip(w.width, w.height, Band::mask8, geo);
    for (int r = 0; r < w.height; ++r) {
        const int y = w.row + r;
        if (y < 0 || y >= mosaic.height())
            continue;
        for (int c = 0; c < w.width; ++c) {
            const int x = w.col + c;
            if (x >= 0 && x < mosaic.width())
                chip(c, r) = mosaic(x, y) ? 1 : 0;
        }
    }
    return chip;
}

struct TiledOptions {
    int chip_size = 1024;
    bool refine_skeleton = false;
    double refine_distance = 25.0;
    int workers = 1;
};

struct TiledResult {
    ByteRaster classes;       // class8
    FloatRaster skeleton;     // stitched skeleton probability
};

/// Runs the separator on every chip and writes each chip's keep-region into
/// the output. Keep-regions are disjoint, so chips can run in any order.
inline TiledResult run_tiled(const Separator& sep, const ByteRaster& mosaic, const TiledOptions& opt = {})
{
    const ChipPlan plan = plan_chips(mosaic.width(), mosaic.height(), opt.chip_size);
    TiledResult res{ByteRaster(mosaic.width(), mosaic.height(), Band::class8, mosaic.geo()),
                    FloatRaster(mosaic.width(), mosaic.height(), Band::index_f32, mosaic.geo())};
    parallel_for(plan.windows.size(), opt.workers, [&](std::size_t i) {
        const ChipWindow& w = plan.windows[i];
        SeparatorOutput out;
        try {
            const ByteRaster chip = extract_chip(mosaic, w.window);
            out = sep.separate(prepare_input(chip), w.id());
            conform_to_mask(out, chip);
            if (opt.refine_skeleton)
                out = skeleton_refine(out, opt.refine_distance);
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(w.id(), e.what());
        }
        for (int r = w.keep.row; r < w.keep.row_end(); ++r)
            for (int c = w.keep.col; c < w.keep.col_end(); ++c) {
                res.classes(c, r) = out.class_mask(c - w.window.col, r - w.window.row);
                res.skeleton(c, r) = out.skeleton_prob(c - w.window.col, r - w.window.row);
            }
    });
    return res;
}

} // namespace lwf
