// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "lwf/skeleval.hpp"
#include "test_support.hpp"

using namespace lwf;

namespace {

// All-pairs nearest neighbour between two skeletons.
std::vector<std::int64_t> nearest_sq(const ByteRaster& from, const ByteRaster& to)
{
    std::vector<std::pair<int, int>> targets;
    for (int r = 0; r < to.height(); ++r)
        for (int c = 0; c < to.width(); ++c)
            if (to(c, r))
                targets.emplace_back(c, r);
    std::vector<std::int64_t> out;
    for (int r = 0; r < from.height(); ++r)
        for (int c = 0; c < from.width(); ++c) {
            if (!from(c, r))
                continue;
            std::int64_t best = std::numeric_limits<std::int64_t>::max();
            for (auto [tc, tr] : targets) {
                const std::int64_t dx = tc - c, dy = tr - r;
                best = std::min(best, dx * dx + dy * dy);
            }
            out.push_back(best);
        }
    return out;
}

double fraction_within(const std::vector<std::int64_t>& d2, int tau)
{
    if (d2.empty())
        return 0.0;
    std::size_t k = 0;
    for (auto v : d2)
        k += v <= static_cast<std::int64_t>(tau) * tau;
    return static_cast<double>(k) / static_cast<double>(d2.size());
}

ByteRaster hline(int w, int h, int row, int c0, int c1)
{
    ByteRaster m = make_mask(w, h);
    for (int c = c0; c <= c1; ++c)
        m(c, row) = 1;
    return m;
}

} // namespace

TEST(PixelMetrics, Identical)
{
    const ByteRaster m = test::random_blobs(64, 64, 5, 3);
    const PixelMetrics p = pixel_metrics(m, m);
    EXPECT_EQ(p.precision, 1.0);
    EXPECT_EQ(p.recall, 1.0);
    EXPECT_EQ(p.f1, 1.0);
    EXPECT_EQ(p.iou, 1.0);
}

TEST(PixelMetrics, EmptyConventions)
{
    const ByteRaster empty = make_mask(10, 10);
    ByteRaster one = make_mask(10, 10);
    one(3, 3) = 1;
    const PixelMetrics miss = pixel_metrics(one, empty);
    EXPECT_EQ(miss.recall, 0.0);
    EXPECT_EQ(miss.precision, 0.0);
    EXPECT_EQ(miss.f1, 0.0);
    EXPECT_EQ(miss.iou, 0.0);
    const PixelMetrics both = pixel_metrics(empty, empty);
    EXPECT_EQ(both.f1, 1.0);
    EXPECT_EQ(both.iou, 1.0);
    EXPECT_THROW(pixel_metrics(empty, make_mask(10, 11)), GridMismatch);
}

TEST(PixelMetrics, ConfusionArithmetic)
{
    // gt: 100 px, pred: 80 px, 60 shared.
    ByteRaster gt = make_mask(20, 20), pred = make_mask(20, 20);
    for (int i = 0; i < 100; ++i)
        gt.pixels()[static_cast<std::size_t>(i)] = 1;
    for (int i = 40; i < 120; ++i)
        pred.pixels()[static_cast<std::size_t>(i)] = 1;
    const PixelMetrics p = pixel_metrics(gt, pred);
    EXPECT_EQ(p.tp, 60u);
    EXPECT_DOUBLE_EQ(p.precision, 0.75);
    EXPECT_DOUBLE_EQ(p.recall, 0.6);
    EXPECT_NEAR(p.f1, 2.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(p.iou, 0.5);
}

TEST(SkeletonCurve, IdenticalMasks)
{
    const ByteRaster m = test::random_blobs(96, 96, 6, 11);
    const SkeletonMetricCurve c = skeleton_curve(m, m);
    ASSERT_EQ(c.tau_values.size(), 13u);
    for (double v : c.f1)
        EXPECT_EQ(v, 1.0);
    EXPECT_EQ(c.auc_f1, 1.0);
}

TEST(SkeletonCurve, ParallelLinesFivePixelsApart)
{
    const ByteRaster gt = hline(128, 32, 10, 10, 99);
    const ByteRaster pred = hline(128, 32, 15, 10, 99);
    ASSERT_EQ(skeletonize(gt), gt);
    const SkeletonMetricCurve c = skeleton_curve(gt, pred);
    for (int t = 0; t <= 12; ++t)
        EXPECT_EQ(c.f1[static_cast<std::size_t>(t)], t < 5 ? 0.0 : 1.0) << "tau " << t;
    EXPECT_NEAR(c.auc_f1, 8.0 / 13.0, 1e-12);
    // Brute-force cross-check of the same instance.
    const auto d = nearest_sq(gt, pred);
    for (auto v : d)
        EXPECT_EQ(v, 25);
}

TEST(SkeletonCurve, EmptyConventions)
{
    const ByteRaster empty = make_mask(32, 32);
    const ByteRaster line = hline(32, 32, 5, 2, 20);
    const auto both = skeleton_curve(empty, empty);
    EXPECT_EQ(both.auc_f1, 1.0);
    EXPECT_EQ(both.auc_precision, 1.0);
    const auto miss = skeleton_curve(line, empty);
    const auto ghost = skeleton_curve(empty, line);
    for (std::size_t t = 0; t < 13; ++t) {
        EXPECT_EQ(miss.recall[t], 0.0);
        EXPECT_EQ(miss.precision[t], 0.0);
        EXPECT_EQ(ghost.precision[t], 0.0);
        EXPECT_EQ(ghost.f1[t], 0.0);
    }
}

TEST(SkeletonCurve, MatchesBruteForceOracle)
{
    for (std::uint32_t seed = 0; seed < 40; ++seed) {
        const ByteRaster gt = test::random_blobs(128, 128, 4 + seed % 5, seed);
        const ByteRaster pred = test::random_blobs(128, 128, 3 + seed % 7, seed + 1000);
        const ByteRaster sg = skeletonize(gt), sp = skeletonize(pred);
        const auto rec_d = nearest_sq(sg, sp);
        const auto prec_d = nearest_sq(sp, sg);
        const SkeletonMetricCurve c = skeleton_curve(gt, pred);
        for (int t = 0; t <= 12; ++t) {
            const auto i = static_cast<std::size_t>(t);
            ASSERT_EQ(c.recall[i], fraction_within(rec_d, t)) << seed << " tau " << t;
            ASSERT_EQ(c.precision[i], fraction_within(prec_d, t)) << seed << " tau " << t;
        }
    }
}

TEST(SkeletonCurve, Properties)
{
    for (std::uint32_t seed = 0; seed < 30; ++seed) {
        const ByteRaster a = test::random_blobs(80, 70, 5, seed + 50);
        const ByteRaster b = test::random_mask(80, 70, 0.08, seed + 60);
        const auto ab = skeleton_curve(a, b, 8);
        const auto ba = skeleton_curve(b, a, 8);
        ASSERT_EQ(ab.tau_values.size(), 9u);
        for (std::size_t t = 0; t < ab.tau_values.size(); ++t) {
            EXPECT_EQ(ab.precision[t], ba.recall[t]);
            EXPECT_EQ(ab.recall[t], ba.precision[t]);
            if (t > 0) {
                EXPECT_GE(ab.precision[t], ab.precision[t - 1]);
                EXPECT_GE(ab.recall[t], ab.recall[t - 1]);
            }
            EXPECT_GE(ab.f1[t], 0.0);
            EXPECT_LE(ab.f1[t], 1.0);
        }
        EXPECT_GE(ab.auc_f1, 0.0);
        EXPECT_LE(ab.auc_f1, 1.0);
        EXPECT_EQ(ab.auc_f1 == 1.0, ab.f1[0] == 1.0);
    }
}

TEST(Report, OneEntryPerSiteAndProduct)
{
    std::vector<EvalCase> cases;
    const std::vector<std::string> sites{"Site A", "Site B", "Site C"};
    const std::vector<std::string> products{"ours", "hrl_sws", "lbm_de", "reference_raster"};
    std::uint32_t seed = 0;
    for (const auto& s : sites)
        for (const auto& p : products) {
            const ByteRaster gt = test::random_blobs(64, 64, 4, 200 + seed);
            cases.push_back({s, p, gt, test::random_blobs(64, 64, 4, 300 + seed++)});
        }
    const EvalReport one = evaluate_cases({cases[0]});
    EXPECT_EQ(report_to_json(one)["entries"].size(), 1u);

    const EvalReport rep = evaluate_cases(cases, 12, 4);
    const EvalReport serial = evaluate_cases(cases, 12, 1);
    EXPECT_EQ(report_to_json(rep), report_to_json(serial));
    const auto j = report_to_json(rep);
    ASSERT_EQ(j["entries"].size(), sites.size() * products.size());
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& e : j["entries"]) {
        keys.emplace(e["site"], e["product"]);
        EXPECT_EQ(e["skeleton"]["f1"].size(), 13u);
    }
    EXPECT_EQ(keys.size(), sites.size() * products.size());
    std::set<std::string> top;
    for (const auto& [k, v] : j.items())
        top.insert(k);
    EXPECT_EQ(top, (std::set<std::string>{"entries", "tau_max"}));
}

TEST(Report, IdenticalSitesAreIndependentPerfectEntries)
{
    std::vector<EvalCase> cases;
    for (int i = 0; i < 3; ++i) {
        const ByteRaster m = test::random_blobs(48, 48, 3, 70 + i);
        cases.push_back({"site" + std::to_string(i), "p", m, m});
    }
    const auto j = report_to_json(evaluate_cases(cases));
    ASSERT_EQ(j["entries"].size(), 3u);
    for (const auto& e : j["entries"]) {
        EXPECT_EQ(e["pixel"]["f1"], 1.0);
        EXPECT_EQ(e["skeleton"]["auc_f1"], 1.0);
    }
}

TEST(Report, WritesJsonAndPlots)
{
    const auto dir = test::temp_dir("skeleval_report");
    const ByteRaster gt = hline(64, 32, 10, 5, 50);
    const EvalReport rep = evaluate_cases({{"s1", "ours", gt, hline(64, 32, 12, 5, 50)}});
    write_report(rep, dir / "report.json", dir / "plots");
    std::ifstream in(dir / "report.json");
    const auto j = nlohmann::json::parse(in);
    EXPECT_NEAR(j["entries"][0]["skeleton"]["auc_f1"].get<double>(), 11.0 / 13.0, 1e-12);
    const auto svg = dir / "plots" / "s1__ours.svg";
    ASSERT_TRUE(std::filesystem::exists(svg));
    std::ifstream s(svg);
    const std::string text((std::istreambuf_iterator<char>(s)), {});
    EXPECT_NE(text.find("<svg"), std::string::npos);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n') > 3, true);
}
