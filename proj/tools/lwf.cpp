// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line entry point. Every subcommand except separate-chip and catalog
// runs through the pipeline. Exit codes: 0 success, 1 stage failure,
// 2 configuration or usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lwf/catalog.hpp"
#include "lwf/pipeline.hpp"
#include "lwf/separator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    bool log_json = false;
};

std::string abs_path(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

lwf::PipelineOptions options(const Globals& g, fs::path base = fs::current_path())
{
    lwf::PipelineOptions o;
    o.seed = g.seed;
    o.workers = g.workers;
    o.log_json = g.log_json;
    o.base_dir = std::move(base);
    return o;
}

// One-stage run whose log lands next to the output.
void run_stage(const Globals& g, json stage, const fs::path& log_dir)
{
    json cfg{{"out_dir", abs_path(log_dir.empty() ? "." : log_dir.string())}, {"stages", json::array({stage})}};
    lwf::run_pipeline(cfg, options(g));
}

fs::path parent_or_cwd(const std::string& file)
{
    const fs::path p = fs::absolute(file).parent_path();
    return p.empty() ? fs::current_path() : p;
}

int separate_chip(const std::string& dir, const std::string& id, double ratio)
{
    const lwf::SeparatorInput in = lwf::read_chip_input(dir, id);
    lwf::SeparatorOutput out = lwf::baseline_separate(in, {ratio});
    lwf::conform_to_mask(out, in.mask);
    lwf::write_chip_prediction(dir, id, out);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Linear woody feature mapping toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed = 0;
    int workers = 1;
    app.add_option("--seed", seed, "Top-level random seed")->each([&](const std::string&) { g.seed = seed; });
    app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber)->each([&](const std::string&) {
        g.workers = workers;
    });
    app.add_flag("--log-json", g.log_json, "Log one JSON line per stage to stderr");

    // synthgen
    auto* syn = app.add_subcommand("synthgen", "Generate a synthetic training or evaluation dataset");
    std::size_t syn_n = 0;
    std::string syn_out, syn_config;
    std::vector<std::string> syn_templates;
    int syn_canvas = 256;
    bool syn_skel = false;
    syn->add_option("--n", syn_n, "Number of scenes")->required()->check(CLI::PositiveNumber);
    syn->add_option("--out", syn_out, "Output directory")->required();
    syn->add_option("--config", syn_config, "Dataset config JSON (templates, canvas_size, write_skeletons)")
        ->check(CLI::ExistingFile);
    syn->add_option("--template", syn_templates, "Built-in template id (repeatable)");
    syn->add_option("--canvas", syn_canvas, "Canvas size in pixels");
    syn->add_flag("--skeletons", syn_skel, "Also write linear-class skeleton labels");

    // maskproc
    auto* mp = app.add_subcommand("maskproc", "Woody vegetation mask from DSM/DTM and optional orthophoto bands");
    std::string mp_dsm, mp_dtm, mp_red, mp_nir, mp_bld, mp_meta, mp_out, mp_tiles, mp_id = "tile";
    double mp_height = 2.0;
    mp->add_option("--dsm", mp_dsm, "Surface model raster");
    mp->add_option("--dtm", mp_dtm, "Terrain model raster");
    mp->add_option("--dop-red", mp_red, "Orthophoto red band");
    mp->add_option("--dop-nir", mp_nir, "Orthophoto near-infrared band");
    mp->add_option("--buildings", mp_bld, "Building footprints (GeoJSON or mask raster)");
    mp->add_option("--meta", mp_meta, "Tile metadata JSON");
    mp->add_option("--id", mp_id, "Tile id used in logs and file names");
    mp->add_option("--tiles", mp_tiles, "JSON list of tiles instead of single-tile flags");
    mp->add_option("--height-threshold", mp_height, "Minimum object height in metres");
    mp->add_option("--out", mp_out, "Output directory");
    auto* chm = mp->add_subcommand("chm", "Threshold a canopy height model");
    std::string chm_in, chm_out;
    double chm_thr = 2.0;
    chm->add_option("--chm", chm_in, "Canopy height raster")->required();
    chm->add_option("--threshold", chm_thr, "Height threshold in metres");
    chm->add_option("--out", chm_out, "Output mask raster")->required();

    // separate
    auto* sp = app.add_subcommand("separate", "Tiled linear / non-linear separation");
    std::string sp_catalog, sp_input, sp_manifest, sp_sep = "baseline", sp_out;
    int sp_chip = 1024;
    bool sp_refine = false;
    double sp_refine_dist = 25.0;
    auto* sp_src = sp->add_option_group("source");
    sp_src->add_option("--input-catalog", sp_catalog, "Mask catalog JSON");
    sp_src->add_option("--input", sp_input, "Single mask raster");
    sp_src->add_option("--manifest", sp_manifest, "synthgen manifest (one prediction per scene)");
    sp_src->require_option(1);
    sp->add_option("--separator", sp_sep, "baseline or external:<command>");
    sp->add_option("--chip", sp_chip, "Chip size in pixels (multiple of 4)");
    sp->add_flag("--refine-skeleton", sp_refine, "Demote linear pixels far from the predicted skeleton");
    sp->add_option("--refine-distance", sp_refine_dist, "Refinement distance in pixels");
    sp->add_option("--out", sp_out, "Output directory")->required();

    // separate-chip
    auto* sc = app.add_subcommand("separate-chip", "Baseline separator over the chip file contract");
    std::string sc_dir, sc_id;
    double sc_ratio = 5.0;
    sc->add_option("dir", sc_dir, "Chip directory")->required();
    sc->add_option("id", sc_id, "Chip id")->required();
    sc->add_option("--ratio", sc_ratio, "Elongation threshold");

    // postprocess
    auto* pp = app.add_subcommand("postprocess", "Boundary selection, erasure and area filter");
    std::string pp_in, pp_boundary, pp_out;
    std::vector<std::string> pp_erase;
    double pp_min = 250.0, pp_simplify = 0.0;
    pp->add_option("--input", pp_in, "Input polygons (GeoJSON)")->required();
    pp->add_option("--min-area", pp_min, "Minimum area in square map units");
    pp->add_option("--erase", pp_erase, "Erase layers (GeoJSON)");
    pp->add_option("--boundary", pp_boundary, "Boundary polygons (GeoJSON)");
    pp->add_option("--simplify", pp_simplify, "Douglas-Peucker tolerance in map units (0 = off)");
    pp->add_option("--out", pp_out, "Output GeoJSON")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Pixel and skeleton-tolerance metrics");
    std::string ev_gt, ev_pred, ev_preds, ev_out, ev_plots, ev_site = "site", ev_product = "prediction";
    double ev_grid = 1.0;
    int ev_tau = 12;
    std::optional<int> ev_class;
    ev->add_option("--gt", ev_gt, "Reference raster or GeoJSON");
    ev->add_option("--pred", ev_pred, "Predicted raster or GeoJSON");
    ev->add_option("--predictions", ev_preds, "predictions.json from separate --manifest");
    ev->add_option("--grid", ev_grid, "Common grid pixel size");
    ev->add_option("--tau-max", ev_tau, "Largest tolerance in pixels")->check(CLI::NonNegativeNumber);
    ev->add_option("--class", ev_class, "Evaluate only this class value");
    ev->add_option("--site", ev_site, "Site name");
    ev->add_option("--product", ev_product, "Product name");
    ev->add_option("--out", ev_out, "Report JSON")->required();
    ev->add_option("--plots", ev_plots, "Directory for SVG curves");

    // catalog
    auto* cat = app.add_subcommand("catalog", "Mask catalogs");
    cat->require_subcommand(1);
    auto* cat_build = cat->add_subcommand("build", "Build a catalog from mask rasters");
    std::vector<std::string> cat_rasters;
    std::string cat_out;
    cat_build->add_option("rasters", cat_rasters, "Mask rasters")->required()->check(CLI::ExistingFile);
    cat_build->add_option("--out", cat_out, "Catalog JSON")->required();

    // demo
    auto* demo = app.add_subcommand("demo", "Run a preset pipeline");
    std::string demo_name, demo_out;
    int demo_n = 50;
    demo->add_option("name", demo_name, "Preset name")->required()->check(CLI::IsMember(lwf::demo_names()));
    demo->add_option("--out", demo_out, "Output directory")->required();
    demo->add_option("--n", demo_n, "Scene count (synthetic-eval)")->check(CLI::PositiveNumber);

    // run
    auto* run = app.add_subcommand("run", "Run a pipeline config");
    std::string run_cfg;
    run->add_option("config", run_cfg, "Pipeline JSON")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*syn) {
            json stage{{"stage", "synthgen"}, {"n", syn_n}, {"out", abs_path(syn_out)}};
            if (!syn_config.empty()) {
                std::ifstream in(syn_config);
                json c;
                try {
                    c = json::parse(in);
                } catch (const json::exception& e) {
                    throw lwf::SchemaError(syn_config + ": " + e.what());
                }
                if (!c.is_object())
                    throw lwf::SchemaError(syn_config + ": expected an object");
                if (c.contains("seed") && !g.seed)
                    g.seed = c["seed"].get<std::uint64_t>();
                for (const char* k : {"templates", "canvas_size", "write_skeletons"})
                    if (c.contains(k))
                        stage[k] = c[k];
            }
            if (!syn_templates.empty())
                stage["templates"] = syn_templates;
            if (syn->count("--canvas"))
                stage["canvas_size"] = syn_canvas;
            if (syn_skel)
                stage["write_skeletons"] = true;
            run_stage(g, stage, syn_out);
        } else if (*mp) {
            if (*chm) {
                run_stage(g, {{"stage", "maskproc-chm"}, {"chm", abs_path(chm_in)}, {"threshold", chm_thr},
                              {"out", abs_path(chm_out)}},
                          parent_or_cwd(chm_out));
            } else {
                if (mp_out.empty())
                    throw lwf::SchemaError("maskproc: --out is required");
                json tiles;
                if (!mp_tiles.empty()) {
                    tiles = abs_path(mp_tiles);
                } else {
                    if (mp_dsm.empty() || mp_dtm.empty())
                        throw lwf::SchemaError("maskproc: --dsm and --dtm are required (or --tiles)");
                    json t{{"id", mp_id}, {"dsm", abs_path(mp_dsm)}, {"dtm", abs_path(mp_dtm)}};
                    if (!mp_red.empty())
                        t["dop_red"] = abs_path(mp_red);
                    if (!mp_nir.empty())
                        t["dop_nir"] = abs_path(mp_nir);
                    if (!mp_bld.empty())
                        t["buildings"] = abs_path(mp_bld);
                    if (!mp_meta.empty())
                        t["meta"] = abs_path(mp_meta);
                    tiles = json::array({t});
                }
                run_stage(g, {{"stage", "maskproc"}, {"tiles", tiles}, {"height_threshold", mp_height},
                              {"out", abs_path(mp_out)}},
                          mp_out);
            }
        } else if (*sp) {
            json stage{{"stage", "separate"}, {"separator", sp_sep}, {"chip", sp_chip},
                       {"refine_skeleton", sp_refine}, {"refine_distance", sp_refine_dist}, {"out", abs_path(sp_out)}};
            if (!sp_catalog.empty())
                stage["input_catalog"] = abs_path(sp_catalog);
            else if (!sp_input.empty())
                stage["input"] = abs_path(sp_input);
            else
                stage["manifest"] = abs_path(sp_manifest);
            run_stage(g, stage, sp_out);
        } else if (*sc) {
            return separate_chip(sc_dir, sc_id, sc_ratio);
        } else if (*pp) {
            json stage{{"stage", "postprocess"}, {"input", abs_path(pp_in)}, {"min_area", pp_min},
                       {"simplify", pp_simplify}, {"out", abs_path(pp_out)}};
            if (!pp_erase.empty()) {
                json e = json::array();
                for (const auto& p : pp_erase)
                    e.push_back(abs_path(p));
                stage["erase"] = e;
            }
            if (!pp_boundary.empty())
                stage["boundary"] = abs_path(pp_boundary);
            run_stage(g, stage, parent_or_cwd(pp_out));
        } else if (*ev) {
            json stage{{"stage", "evaluate"}, {"tau_max", ev_tau}, {"out", abs_path(ev_out)}};
            if (!ev_preds.empty()) {
                stage["predictions"] = abs_path(ev_preds);
            } else {
                if (ev_gt.empty() || ev_pred.empty())
                    throw lwf::SchemaError("evaluate: give --gt and --pred, or --predictions");
                stage["gt"] = abs_path(ev_gt);
                stage["pred"] = abs_path(ev_pred);
                stage["grid"] = ev_grid;
                stage["site"] = ev_site;
                stage["product"] = ev_product;
            }
            if (ev_class)
                stage["class"] = *ev_class;
            if (!ev_plots.empty())
                stage["plots"] = abs_path(ev_plots);
            run_stage(g, stage, parent_or_cwd(ev_out));
        } else if (*cat_build) {
            std::vector<fs::path> paths(cat_rasters.begin(), cat_rasters.end());
            lwf::write_catalog(lwf::build_catalog(paths), cat_out);
        } else if (*demo) {
            lwf::run_pipeline(lwf::demo_config(demo_name, abs_path(demo_out), g.seed.value_or(7), demo_n),
                              options(g));
        } else if (*run) {
            std::ifstream in(run_cfg);
            json cfg;
            try {
                cfg = json::parse(in);
            } catch (const json::exception& e) {
                throw lwf::SchemaError(run_cfg + ": " + e.what());
            }
            lwf::run_pipeline(cfg, options(g, fs::absolute(run_cfg).parent_path()));
        }
    } catch (const lwf::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const lwf::StageError& e) {
        std::cerr << "stage failed (" << e.unit_id() << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
