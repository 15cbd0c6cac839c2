// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lwf/errors.hpp"
#include "lwf/geometry.hpp"
#include "lwf/raster.hpp"
#include "lwf/raster_io.hpp"

namespace lwf {

/// Explicit list of mask tiles making up a mosaic.
///
/// Stored as {"epsg": int, "entries": [{"path": str, "bbox": [minx, miny,
/// maxx, maxy]}]}; relative paths resolve against the catalog file.
struct GridCatalog {
    struct Entry {
        std::filesystem::path path;
        BBox bbox;
    };
    std::vector<Entry> entries;
    int epsg = 0;
};

template <typename T>
BBox raster_bbox(const Raster<T>& r)
{
    const auto& g = r.geo();
    return {g.origin_x, g.origin_y - r.height() * g.pixel_size, g.origin_x + r.width() * g.pixel_size,
            g.origin_y};
}

inline GridCatalog build_catalog(const std::vector<std::filesystem::path>& rasters)
{
    GridCatalog cat;
    for (std::size_t i = 0; i < rasters.size(); ++i) {
        const ByteRaster r = read_byte_raster(rasters[i]);
        if (i == 0)
            cat.epsg = r.geo().epsg;
        else if (r.geo().epsg != cat.epsg)
            throw GridMismatch("catalog entries must share one EPSG code");
        cat.entries.push_back({rasters[i], raster_bbox(r)});
    }
    return cat;
}

inline void write_catalog(const GridCatalog& cat, const std::filesystem::path& path)
{
    nlohmann::ordered_json j;
    j["epsg"] = cat.epsg;
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : cat.entries)
        j["entries"].push_back(
            {{"path", e.path.string()}, {"bbox", {e.bbox.min_x, e.bbox.min_y, e.bbox.max_x, e.bbox.max_y}}});
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

inline GridCatalog read_catalog(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array() || !j.contains("epsg"))
        throw FormatError(path.string() + ": catalog needs 'epsg' and 'entries'");
    GridCatalog cat;
    cat.epsg = j["epsg"].get<int>();
    for (const auto& e : j["entries"]) {
        if (!e.contains("path") || !e.contains("bbox") || e["bbox"].size() != 4)
            throw FormatError(path.string() + ": catalog entry needs 'path' and 4-element 'bbox'");
        std::filesystem::path p = e["path"].get<std::string>();
        if (p.is_relative())
            p = path.parent_path() / p;
        const auto& b = e["bbox"];
        cat.entries.push_back({p, {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                   b[3].get<double>()}});
    }
    return cat;
}

/// Assembles catalog tiles into one mask on their common pixel grid.
/// Uncovered pixels are 0; tiles must share pixel size and be offset by
/// whole pixels.
inline ByteRaster load_mosaic(const GridCatalog& cat)
{
    if (cat.entries.empty())
        throw Error("catalog has no entries");
    std::vector<ByteRaster> tiles;
    tiles.reserve(cat.entries.size());
    for (const auto& e : cat.entries) {
        tiles.push_back(read_byte_raster(e.path));
        if (tiles.back().geo().epsg != cat.epsg)
            throw GridMismatch(e.path.string() + ": EPSG differs from catalog");
    }
    const double ps = tiles.front().geo().pixel_size;
    double min_x = 1e300, max_y = -1e300, max_x = -1e300, min_y = 1e300;
    for (const auto& t : tiles) {
        if (t.geo().pixel_size != ps)
            throw AlignmentError("catalog tiles have different pixel sizes");
        const BBox b = raster_bbox(t);
        min_x = std::min(min_x, b.min_x);
        min_y = std::min(min_y, b.min_y);
        max_x = std::max(max_x, b.max_x);
        max_y = std::max(max_y, b.max_y);
    }
    auto whole = [&](double v) {
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-6)
            throw AlignmentError("catalog tiles are not aligned to a common pixel grid");
        return static_cast<int>(r);
    };
    GeoTransform geo{min_x, max_y, ps, cat.epsg};
    ByteRaster out(whole((max_x - min_x) / ps), whole((max_y - min_y) / ps), Band::mask8, geo);
    for (const auto& t : tiles) {
        const int c0 = whole((t.geo().origin_x - min_x) / ps);
        const int r0 = whole((max_y - t.geo().origin_y) / ps);
        for (int r = 0; r < t.height(); ++r)
            for (int c = 0; c < t.width(); ++c)
                out(c0 + c, r0 + r) = t(c, r) ? 1 : 0;
    }
    return out;
}

} // namespace lwf
