// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Pixel-wise and skeleton-tolerance evaluation with per-site reports.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lwf/errors.hpp"
#include "lwf/morphology.hpp"
#include "lwf/parallel.hpp"
#include "lwf/raster.hpp"

namespace lwf {

struct PixelMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double iou = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

namespace detail {

inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

} // namespace detail

/// Confusion-count metrics over foreground pixels. When both masks are empty
/// every metric is 1; otherwise an empty denominator gives 0.
inline PixelMetrics pixel_metrics(const ByteRaster& gt, const ByteRaster& pred)
{
    require_same_grid(gt, pred, "pixel_metrics");
    PixelMetrics m;
    const auto g = gt.pixels();
    const auto p = pred.pixels();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const bool a = g[i] != 0, b = p[i] != 0;
        m.tp += a && b;
        m.fp += !a && b;
        m.fn += a && !b;
    }
    if (m.tp + m.fp + m.fn == 0) {
        m.precision = m.recall = m.f1 = m.iou = 1.0;
        return m;
    }
    const auto tp = static_cast<double>(m.tp);
    m.precision = detail::ratio_or_zero(tp, tp + static_cast<double>(m.fp));
    m.recall = detail::ratio_or_zero(tp, tp + static_cast<double>(m.fn));
    m.f1 = detail::harmonic(m.precision, m.recall);
    m.iou = tp / (tp + static_cast<double>(m.fp + m.fn));
    return m;
}

struct SkeletonMetricCurve {
    std::vector<int> tau_values;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    double auc_precision = 0.0;
    double auc_recall = 0.0;
    double auc_f1 = 0.0;
};

/// Mean over the integer tolerance samples.
inline double curve_auc(const std::vector<double>& v)
{
    if (v.empty())
        return 0.0;
    double s = 0.0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

/// Tolerance curve from two skeletons (already thinned). A skeleton pixel
/// matches at tau when the other skeleton has a pixel within Euclidean
/// distance tau, tested exactly on squared integer distances.
inline SkeletonMetricCurve skeleton_curve_from_skeletons(const ByteRaster& s_gt, const ByteRaster& s_pred,
                                                         int tau_max = 12)
{
    require_same_grid(s_gt, s_pred, "skeleton_curve");
    if (tau_max < 0)
        throw Error("tau_max must be non-negative");
    const SquaredDistanceField d_gt = squared_distance_transform(s_gt);
    const SquaredDistanceField d_pred = squared_distance_transform(s_pred);
    const int n = tau_max + 1;
    // Histogram of matching tolerance per skeleton pixel; misses beyond tau_max are dropped.
    auto first_tau = [n](std::int64_t d2) {
        for (int t = 0; t < n; ++t)
            if (d2 <= static_cast<std::int64_t>(t) * t)
                return t;
        return n;
    };
    std::vector<std::size_t> hit_gt(n + 1, 0), hit_pred(n + 1, 0);
    std::size_t n_gt = 0, n_pred = 0;
    const auto g = s_gt.pixels();
    const auto p = s_pred.pixels();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i]) {
            ++n_gt;
            ++hit_gt[first_tau(d_pred.d2[i])];
        }
        if (p[i]) {
            ++n_pred;
            ++hit_pred[first_tau(d_gt.d2[i])];
        }
    }
    SkeletonMetricCurve c;
    std::size_t cum_gt = 0, cum_pred = 0;
    for (int t = 0; t < n; ++t) {
        cum_gt += hit_gt[t];
        cum_pred += hit_pred[t];
        c.tau_values.push_back(t);
        if (n_gt == 0 && n_pred == 0) {
            c.precision.push_back(1.0);
            c.recall.push_back(1.0);
            c.f1.push_back(1.0);
            continue;
        }
        const double rec = detail::ratio_or_zero(static_cast<double>(cum_gt), static_cast<double>(n_gt));
        const double prec = detail::ratio_or_zero(static_cast<double>(cum_pred), static_cast<double>(n_pred));
        c.recall.push_back(rec);
        c.precision.push_back(prec);
        c.f1.push_back(detail::harmonic(prec, rec));
    }
    c.auc_precision = curve_auc(c.precision);
    c.auc_recall = curve_auc(c.recall);
    c.auc_f1 = curve_auc(c.f1);
    return c;
}

inline SkeletonMetricCurve skeleton_curve(const ByteRaster& gt, const ByteRaster& pred, int tau_max = 12)
{
    require_same_grid(gt, pred, "skeleton_curve");
    return skeleton_curve_from_skeletons(skeletonize(gt), skeletonize(pred), tau_max);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct EvalCase {
    std::string site;
    std::string product;
    ByteRaster gt;
    ByteRaster pred;
};

struct EvalEntry {
    std::string site;
    std::string product;
    double resolution = 0.0;
    PixelMetrics pixel;
    SkeletonMetricCurve skeleton;
};

struct EvalReport {
    int tau_max = 12;
    std::vector<EvalEntry> entries;  // one per site and product, never aggregated
};

inline EvalReport evaluate_cases(const std::vector<EvalCase>& cases, int tau_max = 12, int workers = 1)
{
    EvalReport rep;
    rep.tau_max = tau_max;
    rep.entries.resize(cases.size());
    parallel_for(cases.size(), workers, [&](std::size_t i) {
        const EvalCase& c = cases[i];
        EvalEntry& e = rep.entries[i];
        e.site = c.site;
        e.product = c.product;
        e.resolution = c.gt.geo().pixel_size;
        e.pixel = pixel_metrics(c.gt, c.pred);
        e.skeleton = skeleton_curve(c.gt, c.pred, tau_max);
    });
    return rep;
}

inline nlohmann::json report_to_json(const EvalReport& rep)
{
    nlohmann::json sites = nlohmann::json::array();
    for (const EvalEntry& e : rep.entries) {
        const auto& s = e.skeleton;
        sites.push_back({
            {"site", e.site},
            {"product", e.product},
            {"resolution", e.resolution},
            {"pixel",
             {{"precision", e.pixel.precision},
              {"recall", e.pixel.recall},
              {"f1", e.pixel.f1},
              {"iou", e.pixel.iou},
              {"tp", e.pixel.tp},
              {"fp", e.pixel.fp},
              {"fn", e.pixel.fn}}},
            {"skeleton",
             {{"tau", s.tau_values},
              {"precision", s.precision},
              {"recall", s.recall},
              {"f1", s.f1},
              {"auc_precision", s.auc_precision},
              {"auc_recall", s.auc_recall},
              {"auc_f1", s.auc_f1}}},
        });
    }
    return {{"tau_max", rep.tau_max}, {"entries", sites}};
}

/// Precision, recall and F1 against tau as a standalone SVG line chart.
inline std::string curve_svg(const EvalEntry& e)
{
    constexpr double W = 360, H = 240, L = 40, R = 10, T = 24, B = 30;
    const auto& s = e.skeleton;
    const double tmax = s.tau_values.empty() ? 1.0 : std::max(1, s.tau_values.back());
    auto px = [&](double t) { return L + (W - L - R) * t / tmax; };
    auto py = [&](double v) { return T + (H - T - B) * (1.0 - v); };
    std::ostringstream o;
    o << std::fixed << std::setprecision(2);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<text x=\"" << L << "\" y=\"16\" font-size=\"12\">" << e.site << " / " << e.product << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
    const std::pair<const std::vector<double>*, const char*> series[] = {
        {&s.precision, "#1f77b4"}, {&s.recall, "#d62728"}, {&s.f1, "#2ca02c"}};
    for (const auto& [vals, colour] : series) {
        o << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
        for (std::size_t i = 0; i < vals->size(); ++i)
            o << px(s.tau_values[i]) << ',' << py((*vals)[i]) << ' ';
        o << "\"/>\n";
    }
    o << "<text x=\"" << L << "\" y=\"" << H - 8 << "\" font-size=\"11\">tau 0.." << s.tau_values.back()
      << "  AUC F1 " << std::setprecision(3) << s.auc_f1 << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

/// Writes report.json-style output and, when plot_dir is non-empty, one SVG per entry.
inline void write_report(const EvalReport& rep, const std::filesystem::path& json_path,
                         const std::filesystem::path& plot_dir = {})
{
    if (json_path.has_parent_path())
        std::filesystem::create_directories(json_path.parent_path());
    std::ofstream(json_path) << report_to_json(rep).dump(2) << '\n';
    if (plot_dir.empty())
        return;
    std::filesystem::create_directories(plot_dir);
    for (const EvalEntry& e : rep.entries)
        std::ofstream(plot_dir / (e.site + "__" + e.product + ".svg")) << curve_svg(e);
}

} // namespace lwf
