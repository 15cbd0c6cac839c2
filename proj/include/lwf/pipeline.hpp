// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Config-driven pipeline: validates a JSON run description and executes its
// stages in order, logging one JSON record per stage.

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lwf/catalog.hpp"
#include "lwf/errors.hpp"
#include "lwf/geojson.hpp"
#include "lwf/maskproc.hpp"
#include "lwf/postprocess.hpp"
#include "lwf/raster_io.hpp"
#include "lwf/rng.hpp"
#include "lwf/separator.hpp"
#include "lwf/skeleval.hpp"
#include "lwf/synthgen.hpp"
#include "lwf/synthtiles.hpp"
#include "lwf/tiling.hpp"
#include "lwf/vectorize.hpp"

namespace lwf {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

enum class FieldKind { integer, number, boolean, string, strings, object, array, string_or_array, any };

struct FieldSpec {
    FieldKind kind;
    bool required = false;
};

namespace detail {

inline bool kind_matches(const json& v, FieldKind k)
{
    switch (k) {
    case FieldKind::integer: return v.is_number_integer();
    case FieldKind::number: return v.is_number();
    case FieldKind::boolean: return v.is_boolean();
    case FieldKind::string: return v.is_string();
    case FieldKind::strings:
        return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); });
    case FieldKind::object: return v.is_object();
    case FieldKind::array: return v.is_array();
    case FieldKind::string_or_array: return v.is_string() || v.is_array();
    case FieldKind::any: return true;
    }
    return false;
}

inline const char* kind_label(FieldKind k)
{
    switch (k) {
    case FieldKind::integer: return "an integer";
    case FieldKind::number: return "a number";
    case FieldKind::boolean: return "a boolean";
    case FieldKind::string: return "a string";
    case FieldKind::strings: return "an array of strings";
    case FieldKind::object: return "an object";
    case FieldKind::array: return "an array";
    case FieldKind::string_or_array: return "a string or an array";
    case FieldKind::any: return "a value";
    }
    return "?";
}

inline void check_fields(const json& obj, const std::map<std::string, FieldSpec>& fields, const std::string& where)
{
    if (!obj.is_object())
        throw SchemaError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        const auto it = fields.find(key);
        if (it == fields.end())
            throw SchemaError(where + ": unknown key '" + key + "'");
        if (!kind_matches(value, it->second.kind))
            throw SchemaError(where + "." + key + ": expected " + kind_label(it->second.kind));
    }
    for (const auto& [key, spec] : fields)
        if (spec.required && !obj.contains(key))
            throw SchemaError(where + ": missing required key '" + key + "'");
}

} // namespace detail

struct StageContext {
    std::uint64_t seed = 0;  // child seed of this stage
    int workers = 1;
    fs::path base_dir;       // relative input paths resolve here
    fs::path out_dir;        // outputs, and inputs written as "$out/..."

    fs::path input(const std::string& p) const
    {
        const std::string tag = "$out/";
        if (p.rfind(tag, 0) == 0)
            return out_dir / p.substr(tag.size());
        const fs::path q(p);
        return q.is_absolute() ? q : base_dir / q;
    }

    fs::path output(const std::string& p) const
    {
        const fs::path q(p);
        return q.is_absolute() ? q : out_dir / q;
    }
};

/// What a stage reports for the run log.
struct StageReport {
    json inputs = json::object();
    json outputs = json::object();
    json decisions = json::array();
};

struct StageDef {
    std::map<std::string, FieldSpec> fields;
    std::function<void(const json&)> extra_check;  // cross-field rules, may be empty
    std::function<StageReport(const json&, const StageContext&)> run;
};

// ---------------------------------------------------------------------------
// Stage implementations
// ---------------------------------------------------------------------------

namespace stages {

inline std::string str(const json& cfg, const char* key, const std::string& def = {})
{
    return cfg.contains(key) ? cfg[key].get<std::string>() : def;
}

inline StageReport synthgen(const json& cfg, const StageContext& ctx)
{
    json ds{{"seed", ctx.seed}};
    for (const char* k : {"templates", "canvas_size", "write_skeletons"})
        if (cfg.contains(k))
            ds[k] = cfg[k];
    const DatasetConfig dc = dataset_config_from_json(ds);
    const fs::path out = ctx.output(cfg["out"]);
    const json manifest = generate_dataset(dc, cfg["n"].get<std::size_t>(), out, ctx.workers);
    StageReport r;
    r.outputs = {{"manifest", (out / "manifest.json").string()}, {"count", manifest["count"]}};
    return r;
}

inline StageReport synth_tiles_stage(const json& cfg, const StageContext& ctx)
{
    SynthTilesParams p;
    p.seed = ctx.seed;
    p.cols = cfg.value("cols", p.cols);
    p.rows = cfg.value("rows", p.rows);
    p.size = cfg.value("size", p.size);
    p.template_id = cfg.value("template", p.template_id);
    p.acquisition_date = cfg.value("acquisition_date", p.acquisition_date);
    const fs::path out = ctx.output(cfg["out"]);
    json written = synth_tiles(p, out);
    StageReport r;
    for (auto& [k, v] : written.items())
        r.outputs[k] = v.is_string() ? json((out / v.get<std::string>()).string()) : v;
    return r;
}

inline FloatRaster load_float(const fs::path& p) { return read_float_raster(p); }

/// Building footprints as a mask on the height grid, from a raster or GeoJSON.
inline ByteRaster load_buildings(const fs::path& p, const FloatRaster& grid)
{
    const auto ext = p.extension().string();
    if (ext == ".geojson" || ext == ".json") {
        PolygonSet set = read_geojson(p, grid.geo().epsg);
        if (set.empty())
            set.epsg = grid.geo().epsg;
        return rasterize(set, grid);
    }
    ByteRaster b = read_byte_raster(p);
    require_same_grid(b, grid, "building mask");
    return b;
}

inline json read_json_file(const fs::path& p)
{
    std::ifstream in(p);
    if (!in)
        throw Error("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

inline const std::map<std::string, FieldSpec>& tile_fields()
{
    static const std::map<std::string, FieldSpec> f{
        {"id", {FieldKind::string, true}},       {"dsm", {FieldKind::string, true}},
        {"dtm", {FieldKind::string, true}},      {"dop_red", {FieldKind::string}},
        {"dop_nir", {FieldKind::string}},        {"buildings", {FieldKind::string}},
        {"meta", {FieldKind::any}},
    };
    return f;
}

inline StageReport maskproc(const json& cfg, const StageContext& ctx)
{
    json tiles = cfg["tiles"];
    fs::path tiles_base = ctx.base_dir;
    StageContext tctx = ctx;
    if (tiles.is_string()) {
        const fs::path list = ctx.input(tiles.get<std::string>());
        tiles = read_json_file(list);
        tctx.base_dir = list.parent_path();
        if (!tiles.is_array())
            throw SchemaError(list.string() + ": tile list must be a JSON array");
    }
    for (std::size_t i = 0; i < tiles.size(); ++i)
        detail::check_fields(tiles[i], tile_fields(), "tiles[" + std::to_string(i) + "]");

    MaskParams mp;
    mp.height_threshold = cfg.value("height_threshold", mp.height_threshold);
    mp.ndvi.vegetation_split = cfg.value("vegetation_split", mp.ndvi.vegetation_split);
    mp.ndvi.percentile = cfg.value("percentile", mp.ndvi.percentile);
    const fs::path out = ctx.output(cfg["out"]);
    fs::create_directories(out);

    std::vector<json> logs(tiles.size());
    std::vector<fs::path> masks(tiles.size());
    parallel_for(tiles.size(), ctx.workers, [&](std::size_t i) {
        const json& t = tiles[i];
        const std::string id = t["id"];
        try {
            TileInputs in;
            in.id = id;
            in.dsm = load_float(tctx.input(t["dsm"]));
            in.dtm = load_float(tctx.input(t["dtm"]));
            if (t.contains("dop_red") != t.contains("dop_nir"))
                throw SchemaError("tile " + id + ": dop_red and dop_nir go together");
            if (t.contains("dop_red")) {
                in.red = load_float(tctx.input(t["dop_red"]));
                in.nir = load_float(tctx.input(t["dop_nir"]));
            }
            if (t.contains("buildings"))
                in.buildings = load_buildings(tctx.input(t["buildings"]), in.dsm);
            if (t.contains("meta"))
                in.meta = tile_meta_from_json(t["meta"].is_string() ? read_json_file(tctx.input(t["meta"])) : t["meta"]);
            const TileResult res = process_tile(in, mp);
            masks[i] = out / (id + ".mask.pgm");
            write_raster(res.mask, masks[i]);
            logs[i] = decision_log(id, res);
        } catch (const SchemaError&) {
            throw;
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(id, e.what());
        }
    });
    write_catalog(build_catalog(masks), out / "catalog.json");
    std::ofstream dl(out / "decisions.jsonl", std::ios::trunc);
    for (const json& l : logs)
        dl << l.dump() << '\n';
    StageReport r;
    r.inputs = {{"tiles", tiles.size()}};
    r.outputs = {{"catalog", (out / "catalog.json").string()}, {"decisions", (out / "decisions.jsonl").string()}};
    r.decisions = logs;
    return r;
}

inline StageReport maskproc_chm(const json& cfg, const StageContext& ctx)
{
    const fs::path in = ctx.input(cfg["chm"]);
    const fs::path out = ctx.output(cfg["out"]);
    const double thr = cfg.value("threshold", 2.0);
    if (out.has_parent_path())
        fs::create_directories(out.parent_path());
    write_raster(chm_mask(read_float_raster(in), thr), out);
    StageReport r;
    r.inputs = {{"chm", in.string()}};
    r.outputs = {{"mask", out.string()}};
    r.decisions.push_back({{"branch", "chm"}, {"threshold", thr}});
    return r;
}

inline TiledOptions tiled_options(const json& cfg, int workers)
{
    TiledOptions o;
    o.chip_size = cfg.value("chip", o.chip_size);
    o.refine_skeleton = cfg.value("refine_skeleton", o.refine_skeleton);
    o.refine_distance = cfg.value("refine_distance", o.refine_distance);
    o.workers = workers;
    return o;
}

inline std::string stem_of(const std::string& name)
{
    const auto dot = name.find('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

inline StageReport separate(const json& cfg, const StageContext& ctx)
{
    const fs::path out = ctx.output(cfg["out"]);
    fs::create_directories(out);
    const std::string spec = cfg.value("separator", std::string("baseline"));
    const auto sep = make_separator(spec, out / "chips", cfg.value("ratio_threshold", 5.0));
    StageReport r;
    r.inputs["separator"] = sep->name();

    if (cfg.contains("manifest")) {
        const fs::path mpath = ctx.input(cfg["manifest"]);
        const json manifest = read_json_file(mpath);
        if (!manifest.contains("entries") || !manifest["entries"].is_array())
            throw FormatError(mpath.string() + ": manifest needs 'entries'");
        const auto& entries = manifest["entries"];
        std::vector<json> preds(entries.size());
        TiledOptions opt = tiled_options(cfg, 1);
        parallel_for(entries.size(), ctx.workers, [&](std::size_t i) {
            const std::string input = entries[i]["input"];
            const std::string id = stem_of(input);
            try {
                const ByteRaster m = read_byte_raster(mpath.parent_path() / input);
                const TiledResult res = run_tiled(*sep, m, opt);
                write_raster(res.classes, out / (id + ".pred.pgm"));
                json p{{"id", id}, {"pred", id + ".pred.pgm"}};
                if (entries[i].contains("label"))
                    p["label"] = (mpath.parent_path() / entries[i]["label"].get<std::string>())
                                     .lexically_relative(out)
                                     .generic_string();
                preds[i] = std::move(p);
            } catch (const StageError& e) {
                throw StageError(id + "/" + e.unit_id(), e.what());
            } catch (const std::exception& e) {
                throw StageError(id, e.what());
            }
        });
        std::ofstream(out / "predictions.json", std::ios::trunc)
            << json{{"separator", sep->name()}, {"entries", preds}}.dump(2) << '\n';
        r.inputs["manifest"] = mpath.string();
        r.outputs = {{"predictions", (out / "predictions.json").string()}, {"count", preds.size()}};
        return r;
    }

    ByteRaster mosaic;
    if (cfg.contains("input_catalog")) {
        const fs::path c = ctx.input(cfg["input_catalog"]);
        mosaic = load_mosaic(read_catalog(c));
        r.inputs["catalog"] = c.string();
    } else {
        const fs::path m = ctx.input(cfg["input"]);
        mosaic = read_byte_raster(m);
        r.inputs["mask"] = m.string();
    }
    const TiledOptions opt = tiled_options(cfg, ctx.workers);
    const TiledResult res = run_tiled(*sep, mosaic, opt);
    write_raster(res.classes, out / "classes.pgm");
    write_raster(res.skeleton, out / "skeleton.f32");
    r.outputs = {{"classes", (out / "classes.pgm").string()}, {"skeleton", (out / "skeleton.f32").string()}};
    if (cfg.value("vectorize", true)) {
        write_geojson(vectorize(res.classes), out / "polygons.geojson");
        r.outputs["polygons"] = (out / "polygons.geojson").string();
    }
    const ChipPlan plan = plan_chips(mosaic.width(), mosaic.height(), opt.chip_size);
    r.decisions.push_back({{"chips", plan.windows.size()},
                           {"chip_size", opt.chip_size},
                           {"refine_skeleton", opt.refine_skeleton},
                           {"linear_px", std::count(res.classes.pixels().begin(), res.classes.pixels().end(), kLinear)},
                           {"nonlinear_px",
                            std::count(res.classes.pixels().begin(), res.classes.pixels().end(), kNonLinear)}});
    return r;
}

inline StageReport postprocess_stage(const json& cfg, const StageContext& ctx)
{
    const fs::path in = ctx.input(cfg["input"]);
    const PolygonSet polys = read_geojson(in);
    PolygonSet erase;
    erase.epsg = polys.epsg;
    std::vector<std::string> erase_paths;
    if (cfg.contains("erase"))
        for (const auto& e : cfg["erase"]) {
            const fs::path p = ctx.input(e);
            const PolygonSet s = read_geojson(p, polys.epsg);
            if (!s.empty() && s.epsg != polys.epsg)
                throw GridMismatch(p.string() + ": EPSG differs from the input polygons");
            erase.polygons.insert(erase.polygons.end(), s.polygons.begin(), s.polygons.end());
            erase_paths.push_back(p.string());
        }
    PolygonSet boundary;
    if (cfg.contains("boundary")) {
        boundary = read_geojson(ctx.input(cfg["boundary"]), polys.epsg);
        if (!boundary.empty() && boundary.epsg != polys.epsg)
            throw GridMismatch("boundary EPSG differs from the input polygons");
    }
    PostprocessParams pp;
    pp.min_area = cfg.value("min_area", pp.min_area);
    pp.simplify_tolerance = cfg.value("simplify", pp.simplify_tolerance);
    const PostprocessResult res = postprocess(polys, pp, erase, boundary);
    const fs::path out = ctx.output(cfg["out"]);
    if (out.has_parent_path())
        fs::create_directories(out.parent_path());
    write_geojson(res.polygons, out);
    StageReport r;
    r.inputs = {{"polygons", in.string()}, {"erase", erase_paths}, {"count", polys.size()}};
    r.outputs = {{"polygons", out.string()}, {"count", res.polygons.size()}};
    r.decisions.push_back({{"min_area", pp.min_area},
                           {"simplify", pp.simplify_tolerance},
                           {"area_in", total_area(polys)},
                           {"area_out", total_area(res.polygons)},
                           {"warnings", res.warnings}});
    return r;
}

/// Evaluation operand: a raster or a polygon file, reduced to a binary mask.
struct Operand {
    std::optional<ByteRaster> raster;
    std::optional<PolygonSet> polygons;
};

inline Operand load_operand(const fs::path& p, std::optional<int> cls)
{
    Operand o;
    const auto ext = p.extension().string();
    if (ext == ".geojson" || ext == ".json") {
        PolygonSet s = read_geojson(p);
        if (cls) {
            std::erase_if(s.polygons, [&](const Polygon& q) { return q.cls != *cls; });
        }
        for (auto& q : s.polygons)
            q.cls = kLinear;  // rasterized as a plain mask below
        o.polygons = std::move(s);
    } else {
        const ByteRaster r = read_byte_raster(p);
        o.raster = threshold_mask(r, [&](std::uint8_t v) { return cls ? v == *cls : v != 0; });
    }
    return o;
}

/// Common grid for two operands: a raster operand's own grid (which must use
/// the requested pixel size), otherwise the polygon extent snapped outward.
inline ByteRaster evaluation_grid(const Operand& a, const Operand& b, double grid)
{
    for (const Operand* o : {&a, &b})
        if (o->raster) {
            if (std::abs(o->raster->geo().pixel_size - grid) > 1e-9)
                throw AlignmentError("raster pixel size differs from the evaluation grid");
            return make_mask(o->raster->width(), o->raster->height(), o->raster->geo());
        }
    PolygonSet all;
    all.epsg = a.polygons->epsg;
    for (const Operand* o : {&a, &b})
        all.polygons.insert(all.polygons.end(), o->polygons->polygons.begin(), o->polygons->polygons.end());
    if (all.empty())
        return make_mask(1, 1, {0.0, grid, grid, all.epsg});
    const BBox bb = bounds(all);
    const double x0 = std::floor(bb.min_x / grid) * grid, y1 = std::ceil(bb.max_y / grid) * grid;
    const int w = static_cast<int>(std::ceil((bb.max_x - x0) / grid));
    const int h = static_cast<int>(std::ceil((y1 - bb.min_y) / grid));
    return make_mask(std::max(1, w), std::max(1, h), {x0, y1, grid, all.epsg});
}

inline ByteRaster to_mask(const Operand& o, const ByteRaster& grid)
{
    if (o.raster) {
        require_same_grid(*o.raster, grid, "evaluation operand");
        return *o.raster;
    }
    PolygonSet s = *o.polygons;
    if (s.empty())
        s.epsg = grid.geo().epsg;
    return rasterize(s, grid);
}

inline StageReport evaluate(const json& cfg, const StageContext& ctx)
{
    const int tau_max = cfg.value("tau_max", 12);
    if (tau_max < 0)
        throw SchemaError("evaluate.tau_max must be >= 0");
    std::optional<int> cls;
    if (cfg.contains("class"))
        cls = cfg["class"].get<int>();
    std::vector<EvalCase> cases;
    StageReport r;
    if (cfg.contains("predictions")) {
        const fs::path pp = ctx.input(cfg["predictions"]);
        const json preds = read_json_file(pp);
        const std::string product = preds.value("separator", std::string("prediction"));
        const int c = cls.value_or(kLinear);
        for (const auto& e : preds["entries"]) {
            if (!e.contains("label"))
                throw FormatError(pp.string() + ": entry without a label");
            auto pick = [c](std::uint8_t v) { return v == c; };
            cases.push_back({e["id"], product,
                             threshold_mask(read_byte_raster(pp.parent_path() / e["label"].get<std::string>()), pick),
                             threshold_mask(read_byte_raster(pp.parent_path() / e["pred"].get<std::string>()), pick)});
        }
        r.inputs = {{"predictions", pp.string()}, {"class", c}};
    } else {
        const double grid = cfg.value("grid", 1.0);
        const fs::path gp = ctx.input(cfg["gt"]), pp = ctx.input(cfg["pred"]);
        const Operand g = load_operand(gp, cls), p = load_operand(pp, cls);
        const ByteRaster tmpl = evaluation_grid(g, p, grid);
        cases.push_back({cfg.value("site", std::string("site")), cfg.value("product", std::string("prediction")),
                         to_mask(g, tmpl), to_mask(p, tmpl)});
        r.inputs = {{"gt", gp.string()}, {"pred", pp.string()}, {"grid", grid}};
    }
    const EvalReport rep = evaluate_cases(cases, tau_max, ctx.workers);
    const fs::path out = ctx.output(cfg["out"]);
    fs::path plots;
    if (cfg.contains("plots"))
        plots = ctx.output(cfg["plots"]);
    write_report(rep, out, plots);
    r.outputs = {{"report", out.string()}, {"entries", rep.entries.size()}};
    if (!plots.empty())
        r.outputs["plots"] = plots.string();
    for (const EvalEntry& e : rep.entries)
        r.decisions.push_back({{"site", e.site},
                               {"pixel_f1", e.pixel.f1},
                               {"auc_f1", e.skeleton.auc_f1}});
    return r;
}

} // namespace stages

inline const std::map<std::string, StageDef>& stage_registry()
{
    using K = FieldKind;
    auto exactly_one = [](std::vector<std::string> keys, std::string stage) {
        return [keys, stage](const json& cfg) {
            int n = 0;
            for (const auto& k : keys)
                n += cfg.contains(k);
            if (n != 1) {
                std::string names;
                for (const auto& k : keys)
                    names += (names.empty() ? "" : ", ") + k;
                throw SchemaError(stage + ": exactly one of " + names + " is required");
            }
        };
    };
    static const std::map<std::string, StageDef> reg{
        {"synthgen",
         {{{"n", {K::integer, true}},
           {"out", {K::string, true}},
           {"templates", {K::array}},
           {"canvas_size", {K::integer}},
           {"write_skeletons", {K::boolean}}},
          {},
          stages::synthgen}},
        {"synth-tiles",
         {{{"out", {K::string, true}},
           {"cols", {K::integer}},
           {"rows", {K::integer}},
           {"size", {K::integer}},
           {"template", {K::string}},
           {"acquisition_date", {K::string}}},
          {},
          stages::synth_tiles_stage}},
        {"maskproc",
         {{{"tiles", {K::string_or_array, true}},
           {"out", {K::string, true}},
           {"height_threshold", {K::number}},
           {"vegetation_split", {K::number}},
           {"percentile", {K::number}}},
          {},
          stages::maskproc}},
        {"maskproc-chm",
         {{{"chm", {K::string, true}}, {"out", {K::string, true}}, {"threshold", {K::number}}}, {}, stages::maskproc_chm}},
        {"separate",
         {{{"input_catalog", {K::string}},
           {"input", {K::string}},
           {"manifest", {K::string}},
           {"separator", {K::string}},
           {"chip", {K::integer}},
           {"refine_skeleton", {K::boolean}},
           {"refine_distance", {K::number}},
           {"ratio_threshold", {K::number}},
           {"vectorize", {K::boolean}},
           {"out", {K::string, true}}},
          exactly_one({"input_catalog", "input", "manifest"}, "separate"),
          stages::separate}},
        {"postprocess",
         {{{"input", {K::string, true}},
           {"out", {K::string, true}},
           {"min_area", {K::number}},
           {"erase", {K::strings}},
           {"boundary", {K::string}},
           {"simplify", {K::number}}},
          {},
          stages::postprocess_stage}},
        {"evaluate",
         {{{"gt", {K::string}},
           {"pred", {K::string}},
           {"predictions", {K::string}},
           {"grid", {K::number}},
           {"tau_max", {K::integer}},
           {"class", {K::integer}},
           {"site", {K::string}},
           {"product", {K::string}},
           {"out", {K::string, true}},
           {"plots", {K::string}}},
          [](const json& cfg) {
              const bool pair = cfg.contains("gt") && cfg.contains("pred");
              if (pair == cfg.contains("predictions") || (!pair && (cfg.contains("gt") || cfg.contains("pred"))))
                  throw SchemaError("evaluate: give either gt and pred, or predictions");
          },
          stages::evaluate}},
    };
    return reg;
}

/// Checks a run description; throws SchemaError naming the offending key.
inline void validate_pipeline_config(const json& cfg)
{
    detail::check_fields(cfg,
                         {{"seed", {FieldKind::integer}},
                          {"workers", {FieldKind::integer}},
                          {"out_dir", {FieldKind::string, true}},
                          {"description", {FieldKind::string}},
                          {"stages", {FieldKind::array, true}}},
                         "config");
    if (cfg["stages"].empty())
        throw SchemaError("config.stages: at least one stage is required");
    if (cfg.contains("seed") && cfg["seed"].is_number_integer() && !cfg["seed"].is_number_unsigned())
        throw SchemaError("config.seed: must be non-negative");
    const auto& reg = stage_registry();
    for (std::size_t i = 0; i < cfg["stages"].size(); ++i) {
        const json& s = cfg["stages"][i];
        const std::string where = "stages[" + std::to_string(i) + "]";
        if (!s.is_object() || !s.contains("stage") || !s["stage"].is_string())
            throw SchemaError(where + ": needs a string 'stage'");
        const auto it = reg.find(s["stage"].get<std::string>());
        if (it == reg.end())
            throw SchemaError(where + ": unknown stage '" + s["stage"].get<std::string>() + "'");
        json body = s;
        body.erase("stage");
        detail::check_fields(body, it->second.fields, where + "(" + it->first + ")");
        if (it->second.extra_check)
            it->second.extra_check(body);
    }
}

struct PipelineOptions {
    std::optional<std::uint64_t> seed;  // overrides the config seed
    std::optional<int> workers;         // overrides the config worker count
    bool log_json = false;              // JSON lines instead of short text on the log stream
    std::ostream* log = &std::cerr;
    fs::path base_dir;                  // defaults to the current directory
};

struct PipelineResult {
    std::vector<json> records;
};

/// Validates and runs a pipeline. Every stage appends one JSON record to
/// <out_dir>/run.log.jsonl; SchemaError propagates before any stage runs and
/// StageError carries the failing tile or chip id.
inline PipelineResult run_pipeline(const json& cfg, const PipelineOptions& opt = {})
{
    validate_pipeline_config(cfg);
    const std::uint64_t seed = opt.seed.value_or(cfg.value("seed", std::uint64_t{0}));
    const int workers = std::max(1, opt.workers.value_or(cfg.value("workers", 1)));
    const fs::path base = opt.base_dir.empty() ? fs::current_path() : opt.base_dir;
    fs::path out_dir = cfg["out_dir"].get<std::string>();
    if (out_dir.is_relative())
        out_dir = base / out_dir;
    fs::create_directories(out_dir);
    std::ofstream log_file(out_dir / "run.log.jsonl", std::ios::trunc);

    PipelineResult result;
    const auto& reg = stage_registry();
    for (std::size_t i = 0; i < cfg["stages"].size(); ++i) {
        json body = cfg["stages"][i];
        const std::string name = body["stage"];
        body.erase("stage");
        StageContext ctx{derive_seed(seed, name), workers, base, out_dir};
        json rec{{"stage", name}, {"index", i}, {"seed", ctx.seed}};
        const auto t0 = std::chrono::steady_clock::now();
        auto finish = [&](const char* status) {
            rec["status"] = status;
            rec["duration_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            log_file << rec.dump() << '\n';
            log_file.flush();
            if (opt.log)
                *opt.log << (opt.log_json ? rec.dump() : "[" + name + "] " + status) << std::endl;
            result.records.push_back(rec);
        };
        try {
            const StageReport r = reg.at(name).run(body, ctx);
            rec["inputs"] = r.inputs;
            rec["outputs"] = r.outputs;
            rec["decisions"] = r.decisions;
            finish("ok");
        } catch (const SchemaError& e) {
            rec["error"] = e.what();
            finish("schema_error");
            throw;
        } catch (const StageError& e) {
            rec["error"] = e.what();
            rec["unit"] = e.unit_id();
            finish("failed");
            throw;
        } catch (const std::exception& e) {
            rec["error"] = e.what();
            rec["unit"] = name;
            finish("failed");
            throw StageError(name, e.what());
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Demo presets
// ---------------------------------------------------------------------------

inline std::vector<std::string> demo_names() { return {"synthetic-eval", "bkg-style"}; }

/// Ready-made run descriptions. synthetic-eval scores the baseline separator
/// on held-out occlusion-free scenes; bkg-style runs mask processing, tiled
/// separation with skeleton refinement, post-processing and evaluation on
/// synthetic elevation tiles.
inline json demo_config(const std::string& name, const std::string& out_dir, std::uint64_t seed = 7, int n = 50)
{
    if (name == "synthetic-eval")
        return {{"seed", seed},
                {"out_dir", out_dir},
                {"description", "baseline separator on held-out occlusion-free scenes"},
                {"stages",
                 {{{"stage", "synthgen"}, {"n", n}, {"templates", {"occlusion_free"}}, {"out", "scenes"}},
                  {{"stage", "separate"},
                   {"manifest", "$out/scenes/manifest.json"},
                   {"separator", "baseline"},
                   {"out", "separated"}},
                  {{"stage", "evaluate"},
                   {"predictions", "$out/separated/predictions.json"},
                   {"class", 1},
                   {"out", "report.json"},
                   {"plots", "plots"}}}}};
    if (name == "bkg-style")
        return {{"seed", seed},
                {"out_dir", out_dir},
                {"description", "mask processing to evaluated polygons on synthetic elevation tiles"},
                {"stages",
                 {{{"stage", "synth-tiles"}, {"cols", 2}, {"rows", 2}, {"size", 512}, {"out", "inputs"}},
                  {{"stage", "maskproc"}, {"tiles", "$out/inputs/tiles.json"}, {"out", "masks"}},
                  {{"stage", "separate"},
                   {"input_catalog", "$out/masks/catalog.json"},
                   {"separator", "baseline"},
                   {"chip", 512},
                   {"refine_skeleton", true},
                   {"out", "separated"}},
                  {{"stage", "postprocess"},
                   {"input", "$out/separated/polygons.geojson"},
                   {"min_area", 250.0},
                   {"erase", {"$out/inputs/forest.geojson"}},
                   {"boundary", "$out/inputs/boundary.geojson"},
                   {"out", "final/polygons.geojson"}},
                  {{"stage", "evaluate"},
                   {"gt", "$out/inputs/reference.geojson"},
                   {"pred", "$out/final/polygons.geojson"},
                   {"class", 1},
                   {"grid", 1.0},
                   {"site", "synthetic"},
                   {"product", "baseline_refined"},
                   {"out", "report.json"},
                   {"plots", "plots"}}}}};
    throw SchemaError("unknown demo '" + name + "'");
}

} // namespace lwf
