// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "lwf/synthgen.hpp"
#include "test_support.hpp"

using namespace lwf;

namespace {

SceneTemplate tmpl(const std::string& id)
{
    auto t = find_builtin(id);
    EXPECT_TRUE(t.has_value()) << id;
    return *t;
}

SceneTemplate empty_template()
{
    SceneTemplate t = tmpl("sparse_agricultural");
    t.id = "empty";
    t.linear.count = {0, 0};
    t.large.count = t.medium.count = t.tiny.count = {0, 0};
    return t;
}

// Segment intersection by solving for the two line parameters; touching
// counts as intersecting.
bool segments_cross(const Point& p1, const Point& p2, const Point& q1, const Point& q2)
{
    const double rx = p2.x - p1.x, ry = p2.y - p1.y;
    const double sx = q2.x - q1.x, sy = q2.y - q1.y;
    const double den = rx * sy - ry * sx;
    const double qpx = q1.x - p1.x, qpy = q1.y - p1.y;
    if (std::abs(den) < 1e-12) {
        if (std::abs(qpx * ry - qpy * rx) > 1e-9)
            return false;
        const double rr = rx * rx + ry * ry;
        const double t0 = (qpx * rx + qpy * ry) / rr;
        const double t1 = t0 + (sx * rx + sy * ry) / rr;
        return std::max(std::min(t0, t1), 0.0) <= std::min(std::max(t0, t1), 1.0);
    }
    const double t = (qpx * sy - qpy * sx) / den;
    const double u = (qpx * ry - qpy * rx) / den;
    return t >= -1e-12 && t <= 1 + 1e-12 && u >= -1e-12 && u <= 1 + 1e-12;
}

bool simple_by_oracle(const Ring& ring)
{
    const std::size_t n = ring.size() - 1;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1)
                continue;
            if (segments_cross(ring[i], ring[i + 1], ring[j], ring[j + 1]))
                return false;
        }
    return true;
}

std::uint64_t hash_bytes(std::string_view s) { return fnv1a(s); }

std::string file_bytes(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t scene_hash(const Scene& s)
{
    std::string buf(s.label.pixels().begin(), s.label.pixels().end());
    return hash_bytes(buf);
}

} // namespace

TEST(SynthTemplates, BuiltinsAreValidAndRoundTrip)
{
    const auto lib = builtin_templates();
    EXPECT_GE(lib.size(), 6u);
    for (const auto& t : lib) {
        EXPECT_NO_THROW(validate(t)) << t.id;
        const SceneTemplate back = template_from_json(template_to_json(t));
        EXPECT_EQ(template_to_json(back), template_to_json(t)) << t.id;
    }
    for (const auto& t : builtin_templates(1024))
        EXPECT_NO_THROW(validate(t)) << t.id;
}

TEST(SynthTemplates, RejectsOutOfBoundRanges)
{
    SceneTemplate t = tmpl("hedgerow_network");
    t.linear.angular.segment_length = {10.0, 200.0};
    EXPECT_THROW(validate(t), SchemaError);
    t = tmpl("hedgerow_network");
    t.linear.angular.turn_angles_deg = {0, 135};
    EXPECT_THROW(validate(t), SchemaError);
    t = tmpl("hedgerow_network");
    t.linear.organic.levels[0].variation_deg = {5.0, 20.0};
    EXPECT_THROW(validate(t), SchemaError);
    t = tmpl("hedgerow_network");
    t.canvas_size = 32;
    EXPECT_THROW(validate(t), SchemaError);
    t = tmpl("hedgerow_network");
    t.tiny.coverage = {0.4, 0.3};
    EXPECT_THROW(validate(t), SchemaError);
    EXPECT_THROW(template_from_json(nlohmann::json{{"base", "nope"}}), SchemaError);
    EXPECT_THROW(template_from_json(nlohmann::json{{"linear", {{"count", {1}}}}}), SchemaError);
}

TEST(AngularPolyline, ZeroTurnSetIsStraight)
{
    SceneTemplate t = tmpl("hedgerow_network");
    t.linear.angular.turn_angles_deg = {0};
    t.linear.angular.segments = {3, 4};
    for (std::uint64_t s = 0; s < 20; ++s) {
        CounterRng rng(s);
        const Polyline pl = gen_angular_polyline(rng, t);
        const Vec2 a = pl.points.front(), b = pl.points[1];
        for (const Vec2& p : pl.points) {
            const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            EXPECT_NEAR(cross / std::hypot(b.x - a.x, b.y - a.y), 0.0, 1e-9);
        }
    }
}

TEST(AngularPolyline, Deterministic)
{
    const SceneTemplate t = tmpl("mixed_woodland");
    CounterRng a(42), b(42);
    const Polyline p = gen_angular_polyline(a, t), q = gen_angular_polyline(b, t);
    EXPECT_EQ(p.points, q.points);
}

TEST(AngularPolyline, ThousandSampleAudit)
{
    const SceneTemplate t = tmpl("mixed_woodland");
    const auto b = TemplateBounds::for_canvas(t.canvas_size);
    for (std::uint64_t s = 0; s < 1000; ++s) {
        CounterRng rng(derive_seed(7, s));
        const Polyline pl = gen_angular_polyline(rng, t);
        ASSERT_GE(pl.points.size(), 2u);
        for (std::size_t i = 0; i + 1 < pl.points.size(); ++i) {
            const double len = std::hypot(pl.points[i + 1].x - pl.points[i].x, pl.points[i + 1].y - pl.points[i].y);
            ASSERT_GE(len, b.segment_length.lo - 1e-9);
            ASSERT_LE(len, b.segment_length.hi + 1e-9);
        }
        for (std::size_t i = 1; i + 1 < pl.points.size(); ++i) {
            const double h0 = std::atan2(pl.points[i].y - pl.points[i - 1].y, pl.points[i].x - pl.points[i - 1].x);
            const double h1 = std::atan2(pl.points[i + 1].y - pl.points[i].y, pl.points[i + 1].x - pl.points[i].x);
            double d = std::remainder(h1 - h0, 2 * std::numbers::pi) * 180.0 / std::numbers::pi;
            ASSERT_LE(std::abs(d), 120.0 + 1e-6);
            // Measured turn must be one of the set members up to rounding.
            const double m = std::abs(d);
            EXPECT_NEAR(m, std::round(m / 15.0) * 15.0, 1e-6);
        }
    }
}

TEST(OrganicPolyline, ThousandWalkAudit)
{
    const SceneTemplate t = tmpl("meandering_riparian");
    const auto b = TemplateBounds::for_canvas(t.canvas_size);
    for (std::uint64_t s = 0; s < 1000; ++s) {
        CounterRng rng(derive_seed(11, s));
        const Polyline pl = gen_organic_polyline(rng, t);
        ASSERT_GE(pl.points.size(), 2u);
        ASSERT_GE(pl.variation_deg, 10.0);
        ASSERT_LE(pl.variation_deg, 40.0);
        for (std::size_t i = 0; i + 1 < pl.points.size(); ++i) {
            const double len = std::hypot(pl.points[i + 1].x - pl.points[i].x, pl.points[i + 1].y - pl.points[i].y);
            ASSERT_GE(len, b.step.lo - 1e-9);
            ASSERT_LE(len, b.step.hi + 1e-9);
        }
        for (std::size_t i = 1; i + 1 < pl.points.size(); ++i) {
            const double h0 = std::atan2(pl.points[i].y - pl.points[i - 1].y, pl.points[i].x - pl.points[i - 1].x);
            const double h1 = std::atan2(pl.points[i + 1].y - pl.points[i].y, pl.points[i + 1].x - pl.points[i].x);
            const double d = std::remainder(h1 - h0, 2 * std::numbers::pi) * 180.0 / std::numbers::pi;
            ASSERT_LE(std::abs(d), pl.variation_deg + 1e-6);
        }
    }
}

TEST(OrganicPolyline, SmallVariationBoundsNetCurvature)
{
    SceneTemplate t = tmpl("meandering_riparian");
    const double eps = 10.0;
    t.linear.organic.levels = {{"flat", {4.0, 5.0}, {eps, eps}}};
    CounterRng rng(3);
    const Polyline pl = gen_organic_polyline(rng, t);
    const double h0 = std::atan2(pl.points[1].y - pl.points[0].y, pl.points[1].x - pl.points[0].x);
    double net = 0.0, prev = h0;
    for (std::size_t i = 1; i + 1 < pl.points.size(); ++i) {
        const double h = std::atan2(pl.points[i + 1].y - pl.points[i].y, pl.points[i + 1].x - pl.points[i].x);
        net += std::remainder(h - prev, 2 * std::numbers::pi) * 180.0 / std::numbers::pi;
        prev = h;
        ASSERT_LE(std::abs(net), static_cast<double>(i) * eps + 1e-6);
    }
}

TEST(FbmPatch, CoverageExtremes)
{
    FbmParams p;
    p.size = 64;
    CounterRng rng(1);
    p.coverage = 0.0;
    EXPECT_EQ(count_nonzero(gen_fbm_patch(rng, p)), 0u);
    p.coverage = 1.0;
    EXPECT_EQ(count_nonzero(gen_fbm_patch(rng, p)), 64u * 64u);
}

TEST(FbmPatch, CoverageIsHitOn256Field)
{
    FbmParams p;
    p.size = 256;
    p.coverage = 0.3;
    for (std::uint64_t s = 0; s < 5; ++s) {
        CounterRng rng(s);
        p.octaves = 4 + static_cast<int>(s % 3);
        const double frac = static_cast<double>(count_nonzero(gen_fbm_patch(rng, p))) / (256.0 * 256.0);
        EXPECT_GE(frac, 0.28);
        EXPECT_LE(frac, 0.32);
    }
}

TEST(FbmPatch, ConstantFieldIsEmpty)
{
    const std::vector<double> flat(100, 0.25);
    EXPECT_EQ(count_nonzero(threshold_by_coverage(flat, 10, 10, 0.5)), 0u);
}

TEST(FbmPatch, RejectsZeroOctaves)
{
    FbmParams p;
    p.octaves = 0;
    CounterRng rng(0);
    EXPECT_THROW(gen_fbm_patch(rng, p), Error);
}

TEST(PolygonPatch, SquareParametersFillSquare)
{
    PolygonPatchParams p;
    p.size = 20;
    p.vertices = {4, 4};
    p.radius_fraction = {1.0, 1.0};
    p.angle_jitter = 0.0;
    p.rotation_deg = {45.0, 45.0};
    CounterRng rng(5);
    const Patch patch = gen_polygon_patch(rng, p);
    // Axis-aligned square of half-diagonal 10 around (10,10): side 10*sqrt2.
    const double h = 10.0 / std::numbers::sqrt2;
    for (int r = 0; r < 20; ++r)
        for (int c = 0; c < 20; ++c) {
            const double x = c + 0.5 - 10.0, y = r + 0.5 - 10.0;
            if (std::abs(std::abs(x) - h) < 1e-6 || std::abs(std::abs(y) - h) < 1e-6)
                continue;
            EXPECT_EQ(patch.mask(c, r), (std::abs(x) < h && std::abs(y) < h) ? 1 : 0) << c << "," << r;
        }
}

TEST(PolygonPatch, FiveHundredSamplesAreSimple)
{
    PolygonPatchParams p;
    p.size = 48;
    p.vertices = {3, 12};
    p.angle_jitter = 1.8;  // wide jitter forces the rejection path
    for (std::uint64_t s = 0; s < 500; ++s) {
        CounterRng rng(derive_seed(13, s));
        const Patch patch = gen_polygon_patch(rng, p);
        ASSERT_TRUE(patch.outline.has_value());
        ASSERT_TRUE(simple_by_oracle(*patch.outline)) << "sample " << s;
        EXPECT_GT(count_nonzero(patch.mask), 0u);
    }
    CounterRng a(9), b(9);
    EXPECT_EQ(gen_polygon_patch(a, p).mask, gen_polygon_patch(b, p).mask);
}

TEST(ComposeScene, EmptyTemplateIsAllBackground)
{
    const Scene s = compose_scene(empty_template(), 17);
    EXPECT_EQ(count_nonzero(s.label), 0u);
    EXPECT_EQ(count_nonzero(s.input), 0u);
    EXPECT_EQ(s.input.width(), 256);
}

TEST(ComposeScene, LinesOccludePatches)
{
    SceneTemplate t = empty_template();
    t.large.count = {1, 1};
    t.large.size = {50.0, 100.0};
    t.large.coverage = {0.5, 0.5};
    t.linear.count = {1, 1};
    int crossings = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Scene s = compose_scene(t, seed);
        ASSERT_EQ(s.elements.size(), 3u);
        const Patch& patch = *s.elements[1].patch;
        const Polyline& line = *s.elements[2].line;
        for_each_line_pixel(line, 256, 256, [&](int c, int r) {
            EXPECT_EQ(s.label(c, r), kLinear);
            const int lc = c - patch.col_off, lr = r - patch.row_off;
            if (patch.mask.contains(lc, lr) && patch.mask(lc, lr))
                ++crossings;
        });
    }
    EXPECT_GT(crossings, 0);
}

TEST(ComposeScene, LineBufferMatchesDistanceOracle)
{
    SceneTemplate t = empty_template();
    t.linear.count = {1, 1};
    const Scene s = compose_scene(t, 4);
    const Polyline& pl = *s.elements.back().line;
    for (int r = 0; r < 256; ++r)
        for (int c = 0; c < 256; ++c) {
            double best = 1e300;
            for (std::size_t i = 0; i + 1 < pl.points.size(); ++i) {
                // Sample the segment densely; the oracle is coarse but independent.
                const Vec2 a = pl.points[i], b = pl.points[i + 1];
                const double vx = b.x - a.x, vy = b.y - a.y;
                const double L2 = vx * vx + vy * vy;
                double t = ((c + 0.5 - a.x) * vx + (r + 0.5 - a.y) * vy) / L2;
                t = std::min(1.0, std::max(0.0, t));
                best = std::min(best, std::hypot(c + 0.5 - a.x - t * vx, r + 0.5 - a.y - t * vy));
            }
            const double half = pl.width / 2.0;
            if (std::abs(best - half) < 1e-9)
                continue;
            ASSERT_EQ(s.label(c, r), best < half ? kLinear : kBackground) << c << "," << r;
        }
}

TEST(ComposeScene, DeterministicAndInvariant)
{
    for (const auto& t : builtin_templates()) {
        const Scene a = compose_scene(t, 123), b = compose_scene(t, 123);
        EXPECT_EQ(a.label, b.label) << t.id;
        EXPECT_EQ(a.input, b.input) << t.id;
        EXPECT_TRUE(audit_scene(a, t).empty()) << t.id;
        for (std::size_t k = 0; k < a.label.size(); ++k)
            ASSERT_LE(a.label.pixels()[k], 2);
    }
}

TEST(ComposeScene, FrozenHashes)
{
    // Regression values; a change means scenes differ from earlier releases.
    EXPECT_EQ(scene_hash(compose_scene(tmpl("dense_mixed"), 1)), 8160194563056152198ull);
    EXPECT_EQ(scene_hash(compose_scene(tmpl("polygon_fields"), 2)), 11686677986273749969ull);
}

TEST(ComposeScene, OcclusionFreeKeepsElementsApart)
{
    const SceneTemplate t = tmpl("occlusion_free");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Scene s = compose_scene(t, seed);
        // Each element's footprint is fully visible in the final label.
        for (const auto& e : s.elements) {
            if (e.line)
                for_each_line_pixel(*e.line, 256, 256, [&](int c, int r) { ASSERT_EQ(s.label(c, r), kLinear); });
            if (e.patch)
                for (int r = 0; r < e.patch->mask.height(); ++r)
                    for (int c = 0; c < e.patch->mask.width(); ++c)
                        if (e.patch->mask(c, r) && s.label.contains(c + e.patch->col_off, r + e.patch->row_off)) {
                            ASSERT_EQ(s.label(c + e.patch->col_off, r + e.patch->row_off), kNonLinear);
                        }
        }
    }
}

TEST(ComposeScene, ClassPresenceInDefaultMix)
{
    DatasetConfig cfg;
    cfg.seed = 2024;
    for (const auto& id : default_template_mix())
        cfg.templates.push_back(tmpl(id));
    int both = 0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const auto [t, seed] = scene_assignment(cfg, i);
        const Scene s = compose_scene(*t, seed);
        bool lin = false, non = false;
        for (auto v : s.label.pixels()) {
            lin |= v == kLinear;
            non |= v == kNonLinear;
        }
        both += lin && non;
    }
    EXPECT_GE(both, 45);
}

TEST(GenerateDataset, SingleScene)
{
    const auto dir = test::temp_dir("synth_one");
    DatasetConfig cfg = dataset_config_from_json(nlohmann::json::object());
    const auto manifest = generate_dataset(cfg, 1, dir);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        files += e.path().extension() == ".pgm";
    EXPECT_EQ(files, 2u);
    ASSERT_EQ(manifest["entries"].size(), 1u);
    const auto& e = manifest["entries"][0];
    EXPECT_TRUE(e.contains("input") && e.contains("label") && e.contains("seed") && e.contains("template"));
    EXPECT_THROW(generate_dataset(cfg, 0, dir), Error);
}

TEST(GenerateDataset, RepeatableAcrossWorkerCounts)
{
    const auto d1 = test::temp_dir("synth_a"), d2 = test::temp_dir("synth_b");
    DatasetConfig cfg = dataset_config_from_json({{"seed", 99}});
    generate_dataset(cfg, 12, d1, 1);
    generate_dataset(cfg, 12, d2, 4);
    EXPECT_EQ(file_bytes(d1 / "manifest.json"), file_bytes(d2 / "manifest.json"));
    for (int i = 0; i < 12; ++i) {
        char name[40];
        std::snprintf(name, sizeof name, "scene_%06d.label.pgm", i);
        EXPECT_EQ(hash_bytes(file_bytes(d1 / name)), hash_bytes(file_bytes(d2 / name))) << name;
    }
}

TEST(GenerateDataset, HundredScenesInputMatchesLabel)
{
    const auto dir = test::temp_dir("synth_100");
    DatasetConfig cfg = dataset_config_from_json({{"seed", 5}, {"write_skeletons", false}});
    const auto manifest = generate_dataset(cfg, 100, dir, 2);
    for (const auto& e : manifest["entries"]) {
        const ByteRaster in = read_byte_raster(dir / e["input"].get<std::string>());
        const ByteRaster lab = read_byte_raster(dir / e["label"].get<std::string>());
        ASSERT_EQ(in.width(), 256);
        for (std::size_t k = 0; k < in.size(); ++k)
            ASSERT_EQ(in.pixels()[k], lab.pixels()[k] != 0 ? 1 : 0);
    }
}

TEST(GenerateDataset, ConfigErrors)
{
    EXPECT_THROW(dataset_config_from_json({{"templates", {"unknown"}}}), SchemaError);
    EXPECT_THROW(dataset_config_from_json({{"templates", nlohmann::json::array()}}), SchemaError);
    EXPECT_THROW(dataset_config_from_json(nlohmann::json::array()), SchemaError);
}
