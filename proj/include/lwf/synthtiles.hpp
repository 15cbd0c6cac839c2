// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Synthetic elevation and orthophoto tiles built from synthetic scenes, for
// exercising the mask-processing and inference stages end to end.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lwf/geojson.hpp"
#include "lwf/morphology.hpp"
#include "lwf/raster_io.hpp"
#include "lwf/rng.hpp"
#include "lwf/synthgen.hpp"
#include "lwf/vectorize.hpp"

namespace lwf {

struct SynthTilesParams {
    int cols = 2;
    int rows = 2;
    int size = 256;  // pixels per tile side at 1 m
    std::uint64_t seed = 0;
    std::string template_id = "dense_mixed";
    std::string acquisition_date = "2023-06-20";
    int epsg = 25832;
    double origin_x = 500000.0;
    double origin_y = 5800000.0;
};

namespace detail {

// Approximately normal noise from four uniforms; unit variance.
inline double soft_noise(CounterRng& rng)
{
    const double s = rng.uniform() + rng.uniform() + rng.uniform() + rng.uniform() - 2.0;
    return s * std::sqrt(3.0);
}

struct Structure {
    int c0, r0, c1, r1;  // inclusive pixel bounds
    bool mapped;         // listed in the building layer
};

inline std::vector<Structure> place_structures(const ByteRaster& label, std::size_t target_area, CounterRng& rng)
{
    std::vector<Structure> out;
    ByteRaster blocked = label;
    std::size_t area = 0;
    for (int attempt = 0; attempt < 400 && area < target_area; ++attempt) {
        const int w = static_cast<int>(rng.uniform_int(6, 14));
        const int h = static_cast<int>(rng.uniform_int(6, 14));
        const int c0 = static_cast<int>(rng.uniform_int(3, label.width() - w - 4));
        const int r0 = static_cast<int>(rng.uniform_int(3, label.height() - h - 4));
        bool free = true;
        for (int r = r0 - 3; r <= r0 + h + 2 && free; ++r)
            for (int c = c0 - 3; c <= c0 + w + 2 && free; ++c)
                free = !blocked(c, r);
        if (!free)
            continue;
        for (int r = r0; r < r0 + h; ++r)
            for (int c = c0; c < c0 + w; ++c)
                blocked(c, r) = 1;
        out.push_back({c0, r0, c0 + w - 1, r0 + h - 1, out.size() % 2 == 0});
        area += static_cast<std::size_t>(w * h);
    }
    return out;
}

} // namespace detail

/// Writes per-tile DSM, DTM and 0.5 m red/NIR rasters, a building layer, tile
/// metadata, a tiles.json list for the maskproc stage, and the reference
/// class raster and polygons of the whole mosaic. Returns the written paths.
inline nlohmann::json synth_tiles(const SynthTilesParams& p, const std::filesystem::path& out_dir)
{
    namespace fs = std::filesystem;
    if (p.cols < 1 || p.rows < 1 || p.size < 64)
        throw SchemaError("synth-tiles needs cols, rows >= 1 and size >= 64");
    const auto tmpl = find_builtin(p.template_id, p.size);
    if (!tmpl)
        throw SchemaError("unknown template '" + p.template_id + "'");
    fs::create_directories(out_dir);
    const int W = p.cols * p.size, H = p.rows * p.size;
    ByteRaster reference(W, H, Band::class8, {p.origin_x, p.origin_y, 1.0, p.epsg});
    PolygonSet buildings;
    buildings.epsg = p.epsg;
    nlohmann::json tiles = nlohmann::json::array();

    for (int tr = 0; tr < p.rows; ++tr)
        for (int tc = 0; tc < p.cols; ++tc) {
            const std::string id = "t" + std::to_string(tr) + "_" + std::to_string(tc);
            const std::uint64_t tile_seed = derive_seed(p.seed, id);
            const Scene scene = compose_scene(*tmpl, tile_seed);
            CounterRng rng(derive_seed(tile_seed, "surface"));
            const GeoTransform geo{p.origin_x + tc * p.size, p.origin_y - tr * p.size, 1.0, p.epsg};
            const int n = p.size;

            const auto structures =
                detail::place_structures(scene.label, count_nonzero(scene.input) / 4, rng);
            ByteRaster kind(n, n, Band::class8, geo);  // 0 ground, 1 woody, 2 building, 3 unmapped structure
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c)
                    kind(c, r) = scene.label(c, r) ? 1 : 0;
            for (const auto& s : structures) {
                for (int r = s.r0; r <= s.r1; ++r)
                    for (int c = s.c0; c <= s.c1; ++c)
                        kind(c, r) = s.mapped ? 2 : 3;
                if (s.mapped) {
                    Polygon b;
                    b.outer = rectangle_ring(geo.col_to_x(s.c0), geo.row_to_y(s.r1 + 1), geo.col_to_x(s.c1 + 1),
                                             geo.row_to_y(s.r0));
                    b.attributes["tile"] = id;
                    buildings.polygons.push_back(std::move(b));
                }
            }

            FloatRaster dtm(n, n, Band::height_f32, geo), dsm(n, n, Band::height_f32, geo);
            FloatRaster red(2 * n, 2 * n, Band::index_f32, {geo.origin_x, geo.origin_y, 0.5, p.epsg});
            FloatRaster nir(2 * n, 2 * n, Band::index_f32, red.geo());
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    const double gx = tc * n + c, gy = tr * n + r;
                    const double ground = 100.0 + 0.01 * gx + 0.02 * gy;
                    dtm(c, r) = static_cast<float>(ground);
                    double h = 0.05 * rng.uniform(), v_mean = 0.1, v_sd = 0.05;
                    switch (kind(c, r)) {
                    case 1:
                        h = 6.0 + 6.0 * rng.uniform();
                        v_mean = 0.6;
                        v_sd = 0.06;
                        break;
                    case 2:
                        h = 9.0;
                        v_mean = 0.02;
                        v_sd = 0.03;
                        break;
                    case 3:
                        h = 5.0;
                        v_mean = 0.0;
                        v_sd = 0.03;
                        break;
                    default:
                        break;
                    }
                    dsm(c, r) = static_cast<float>(ground + h);
                    reference(tc * n + c, tr * n + r) = scene.label(c, r);
                    for (int k = 0; k < 4; ++k) {
                        const double v = std::clamp(v_mean + v_sd * detail::soft_noise(rng), -0.9, 0.95);
                        const double ir = 0.35 + 0.02 * detail::soft_noise(rng);
                        const int sc = 2 * c + k % 2, sr = 2 * r + k / 2;
                        nir(sc, sr) = static_cast<float>(ir);
                        red(sc, sr) = static_cast<float>(ir * (1.0 - v) / (1.0 + v));
                    }
                }
            const fs::path dir = out_dir / "tiles";
            fs::create_directories(dir);
            write_raster(dsm, dir / (id + ".dsm.f32"));
            write_raster(dtm, dir / (id + ".dtm.f32"));
            write_raster(red, dir / (id + ".red.f32"));
            write_raster(nir, dir / (id + ".nir.f32"));
            tiles.push_back({{"id", id},
                             {"dsm", "tiles/" + id + ".dsm.f32"},
                             {"dtm", "tiles/" + id + ".dtm.f32"},
                             {"dop_red", "tiles/" + id + ".red.f32"},
                             {"dop_nir", "tiles/" + id + ".nir.f32"},
                             {"buildings", "buildings.geojson"},
                             {"meta", "meta.json"}});
        }

    write_geojson(buildings, out_dir / "buildings.geojson");
    std::ofstream(out_dir / "meta.json") << nlohmann::json{{"acquisition_dates", {p.acquisition_date}}}.dump(2)
                                         << '\n';
    std::ofstream(out_dir / "tiles.json") << tiles.dump(2) << '\n';
    write_raster(reference, out_dir / "reference.pgm");
    const PolygonSet ref_polys = vectorize(reference);
    write_geojson(ref_polys, out_dir / "reference.geojson");

    // Large non-linear patches stand in for a forest layer used as an erase mask.
    PolygonSet forest;
    forest.epsg = p.epsg;
    const double min_forest = 0.02 * p.size * p.size;
    for (const Polygon& poly : ref_polys.polygons)
        if (poly.cls == kNonLinear && signed_area(poly.outer) >= min_forest) {
            Polygon f;
            f.outer = poly.outer;
            forest.polygons.push_back(std::move(f));
        }
    write_geojson(forest, out_dir / "forest.geojson");
    PolygonSet aoi;
    aoi.epsg = p.epsg;
    aoi.polygons.push_back({rectangle_ring(p.origin_x, p.origin_y - H, p.origin_x + W, p.origin_y), {}, 0, {}});
    write_geojson(aoi, out_dir / "boundary.geojson");

    return {{"tiles", "tiles.json"},
            {"buildings", "buildings.geojson"},
            {"meta", "meta.json"},
            {"reference_raster", "reference.pgm"},
            {"reference", "reference.geojson"},
            {"forest", "forest.geojson"},
            {"boundary", "boundary.geojson"},
            {"count", tiles.size()}};
}

} // namespace lwf
