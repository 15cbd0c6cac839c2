// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Binary woody-vegetation masks from elevation models and orthophotos, or
// directly from a canopy height model.

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lwf/errors.hpp"
#include "lwf/raster.hpp"

namespace lwf {

// ---------------------------------------------------------------------------
// Height and index rasters
// ---------------------------------------------------------------------------

inline FloatRaster ndsm(const FloatRaster& dsm, const FloatRaster& dtm)
{
    require_same_grid(dsm, dtm, "ndsm");
    FloatRaster out(dsm.width(), dsm.height(), Band::height_f32, dsm.geo());
    auto a = dsm.pixels();
    auto b = dtm.pixels();
    auto o = out.pixels();
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] = a[i] - b[i];
    return out;
}

/// 1 where height >= threshold. NaN heights are never foreground.
inline ByteRaster height_mask(const FloatRaster& heights, double threshold = 2.0)
{
    return threshold_mask(heights, [threshold](float v) { return static_cast<double>(v) >= threshold; });
}

/// Canopy height model thresholding, applied when the model is loaded.
inline ByteRaster chm_mask(const FloatRaster& chm, double threshold)
{
    return height_mask(chm, threshold);
}

/// (nir - red) / (nir + red), 0 where the denominator is 0.
inline FloatRaster ndvi(const FloatRaster& red, const FloatRaster& nir)
{
    require_same_grid(red, nir, "ndvi");
    FloatRaster out(red.width(), red.height(), Band::index_f32, red.geo());
    auto r = red.pixels();
    auto n = nir.pixels();
    auto o = out.pixels();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double den = static_cast<double>(n[i]) + r[i];
        o[i] = den == 0.0 ? 0.0f : static_cast<float>((static_cast<double>(n[i]) - r[i]) / den);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Histogram and peaks
// ---------------------------------------------------------------------------

struct Histogram {
    static constexpr int kBins = 255;
    static constexpr double kLo = -0.5;
    static constexpr double kHi = 1.0;
    static constexpr double kWidth = (kHi - kLo) / kBins;

    std::array<std::int64_t, kBins> counts{};

    static double edge(int i) { return kLo + (kHi - kLo) * i / kBins; }
    static double center(int i) { return (edge(i) + edge(i + 1)) / 2.0; }

    /// Bin of an already clipped value; the last bin is closed on the right.
    static int bin_of(double v)
    {
        const int b = static_cast<int>(std::floor((v - kLo) / kWidth));
        return std::clamp(b, 0, kBins - 1);
    }

    std::int64_t total() const
    {
        std::int64_t s = 0;
        for (auto c : counts)
            s += c;
        return s;
    }
};

inline double clip_ndvi(double v) { return std::clamp(v, Histogram::kLo, Histogram::kHi); }

/// Clipped NDVI values under the sample mask (all finite pixels when absent).
inline std::vector<double> sample_ndvi(const FloatRaster& values, const ByteRaster* sample_mask)
{
    if (sample_mask)
        require_same_grid(values, *sample_mask, "ndvi sample");
    std::vector<double> out;
    auto v = values.pixels();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (sample_mask && !sample_mask->pixels()[i])
            continue;
        if (!std::isfinite(v[i]))
            continue;
        out.push_back(clip_ndvi(v[i]));
    }
    return out;
}

inline Histogram histogram_of(const std::vector<double>& clipped)
{
    Histogram h;
    for (double x : clipped)
        ++h.counts[static_cast<std::size_t>(Histogram::bin_of(x))];
    return h;
}

inline Histogram histogram_ndvi(const FloatRaster& values, const ByteRaster* sample_mask = nullptr)
{
    return histogram_of(sample_ndvi(values, sample_mask));
}

struct Peak {
    int index = 0;
    double height = 0.0;
    double prominence = 0.0;
};

struct PeakParams {
    double relative_prominence = 0.2;  // of (max count - min count)
    int min_distance = 10;             // bins
};

namespace detail {

/// Local maxima; a flat top counts once, at its (left-biased) middle.
inline std::vector<int> local_maxima(const std::vector<double>& x)
{
    std::vector<int> peaks;
    const int n = static_cast<int>(x.size());
    int i = 1;
    while (i < n - 1) {
        if (x[i - 1] < x[i]) {
            int ahead = i + 1;
            while (ahead < n - 1 && x[ahead] == x[i])
                ++ahead;
            if (x[ahead] < x[i]) {
                peaks.push_back((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        ++i;
    }
    return peaks;
}

/// Peak height minus the higher of the two lowest points reached before the
/// signal climbs above the peak (or hits an edge) on either side.
inline double prominence(const std::vector<double>& x, int peak)
{
    const double h = x[static_cast<std::size_t>(peak)];
    double left_min = h, right_min = h;
    for (int i = peak; i >= 0 && x[i] <= h; --i)
        left_min = std::min(left_min, x[i]);
    for (int i = peak; i < static_cast<int>(x.size()) && x[i] <= h; ++i)
        right_min = std::min(right_min, x[i]);
    return h - std::max(left_min, right_min);
}

} // namespace detail

/// Histogram peaks: local maxima, thinned so survivors are at least
/// min_distance bins apart (taller first, leftmost on equal height), then
/// kept when their prominence reaches the relative threshold.
inline std::vector<Peak> find_peaks(const std::vector<double>& x, const PeakParams& params = {})
{
    if (x.empty())
        return {};
    std::vector<int> cand = detail::local_maxima(x);
    std::vector<std::size_t> order(cand.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[cand[a]] > x[cand[b]]; });
    std::vector<char> keep(cand.size(), 1);
    for (const std::size_t j : order) {
        if (!keep[j])
            continue;
        for (std::size_t k = j; k-- > 0 && cand[j] - cand[k] < params.min_distance;)
            keep[k] = 0;
        for (std::size_t k = j + 1; k < cand.size() && cand[k] - cand[j] < params.min_distance; ++k)
            keep[k] = 0;
    }
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    const double pmin = params.relative_prominence * (*mx - *mn);
    std::vector<Peak> out;
    for (std::size_t j = 0; j < cand.size(); ++j) {
        if (!keep[j])
            continue;
        const double prom = detail::prominence(x, cand[j]);
        if (prom >= pmin)
            out.push_back({cand[j], x[static_cast<std::size_t>(cand[j])], prom});
    }
    return out;
}

inline std::vector<Peak> find_peaks(const Histogram& h, const PeakParams& params = {})
{
    return find_peaks(std::vector<double>(h.counts.begin(), h.counts.end()), params);
}

// ---------------------------------------------------------------------------
// Threshold decision
// ---------------------------------------------------------------------------

enum class ThresholdKind { valley, percentile3, none };

inline const char* kind_name(ThresholdKind k)
{
    switch (k) {
    case ThresholdKind::valley: return "valley";
    case ThresholdKind::percentile3: return "percentile3";
    case ThresholdKind::none: return "none";
    }
    return "?";
}

enum class SamplePass { height_masked, full_raster };

inline const char* pass_name(SamplePass p) { return p == SamplePass::height_masked ? "height_masked" : "full_raster"; }

struct ThresholdParams {
    double vegetation_split = 0.13;  // peaks with centre above are vegetation
    double percentile = 3.0;
    PeakParams peaks;
};

struct ThresholdDecision {
    ThresholdKind kind = ThresholdKind::none;
    std::optional<double> threshold;
    std::optional<SamplePass> pass;
    std::vector<Peak> peaks;
    // Defining peaks of a valley decision (bin indices).
    int low_peak = -1;
    int high_peak = -1;
};

/// Linear interpolation between order statistics (q in [0, 100]).
inline double percentile(std::vector<double> v, double q)
{
    if (v.empty())
        throw Error("percentile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = (static_cast<double>(v.size()) - 1.0) * q / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Decision from one clipped sample; kind none means "unresolved".
inline ThresholdDecision decide_from_sample(const std::vector<double>& clipped, const ThresholdParams& p = {})
{
    ThresholdDecision d;
    if (clipped.empty())
        return d;
    const Histogram h = histogram_of(clipped);
    d.peaks = find_peaks(h, p.peaks);
    int top_nonveg = -1, low_veg = -1;
    for (const Peak& pk : d.peaks) {
        if (Histogram::center(pk.index) > p.vegetation_split) {
            if (low_veg < 0 || pk.index < low_veg)
                low_veg = pk.index;
        } else {
            top_nonveg = std::max(top_nonveg, pk.index);
        }
    }
    if (low_veg >= 0 && top_nonveg >= 0 && low_veg - top_nonveg >= 2) {
        int best = top_nonveg + 1;
        for (int i = top_nonveg + 1; i < low_veg; ++i)
            if (h.counts[static_cast<std::size_t>(i)] < h.counts[static_cast<std::size_t>(best)])
                best = i;
        d.kind = ThresholdKind::valley;
        d.threshold = Histogram::center(best);
        d.low_peak = top_nonveg;
        d.high_peak = low_veg;
    } else if (low_veg >= 0 && top_nonveg < 0) {
        d.kind = ThresholdKind::percentile3;
        d.threshold = percentile(clipped, p.percentile);
    }
    return d;
}

/// Pass 1 samples NDVI under the height mask, pass 2 the whole raster.
inline ThresholdDecision detect_threshold(const FloatRaster& ndvi_raster, const ByteRaster& hmask,
                                          const ThresholdParams& p = {})
{
    require_same_grid(ndvi_raster, hmask, "detect_threshold");
    ThresholdDecision d = decide_from_sample(sample_ndvi(ndvi_raster, &hmask), p);
    if (d.kind != ThresholdKind::none) {
        d.pass = SamplePass::height_masked;
        return d;
    }
    d = decide_from_sample(sample_ndvi(ndvi_raster, nullptr), p);
    if (d.kind != ThresholdKind::none)
        d.pass = SamplePass::full_raster;
    return d;
}

/// height AND NOT building, additionally AND (ndvi >= threshold) when the
/// decision carries a threshold. Pass nullptr for `building` when there are
/// no buildings and for `ndvi_1m` when the decision is none.
inline ByteRaster build_woody_mask(const ByteRaster& hmask, const ByteRaster* building, const ThresholdDecision& d,
                                   const FloatRaster* ndvi_1m)
{
    if (building)
        require_same_grid(hmask, *building, "build_woody_mask");
    const bool use_ndvi = d.kind != ThresholdKind::none && d.threshold.has_value();
    if (use_ndvi) {
        if (!ndvi_1m)
            throw Error("build_woody_mask: threshold decision without an NDVI raster");
        require_same_grid(hmask, *ndvi_1m, "build_woody_mask");
    }
    ByteRaster out(hmask.width(), hmask.height(), Band::mask8, hmask.geo());
    auto o = out.pixels();
    auto h = hmask.pixels();
    for (std::size_t i = 0; i < o.size(); ++i) {
        bool v = h[i] != 0;
        if (v && building && building->pixels()[i])
            v = false;
        if (v && use_ndvi && !(static_cast<double>(ndvi_1m->pixels()[i]) >= *d.threshold))
            v = false;
        o[i] = v ? 1 : 0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Acquisition metadata
// ---------------------------------------------------------------------------

struct MonthDay {
    int month = 1;
    int day = 1;
    auto operator<=>(const MonthDay&) const = default;
};

struct Date {
    int year = 2000;
    int month = 1;
    int day = 1;
    MonthDay month_day() const { return {month, day}; }
};

inline Date parse_date(const std::string& s)
{
    int y = 0, m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &tail) != 3)
        throw SchemaError("date '" + s + "' is not YYYY-MM-DD");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok())
        throw SchemaError("date '" + s + "' does not exist");
    return {y, m, d};
}

inline MonthDay parse_month_day(const std::string& s)
{
    int m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%2d-%2d%c", &m, &d, &tail) != 2)
        throw SchemaError("month-day '" + s + "' is not MM-DD");
    // Checked against a leap year so 02-29 is accepted.
    const std::chrono::year_month_day ymd{std::chrono::year{2000}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok())
        throw SchemaError("month-day '" + s + "' does not exist");
    return {m, d};
}

struct TileMeta {
    std::vector<Date> acquisition_dates;
    MonthDay window_start{5, 15};
    MonthDay window_end{9, 15};
};

inline TileMeta tile_meta_from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        throw SchemaError("tile metadata must be a JSON object");
    TileMeta m;
    if (!j.contains("acquisition_dates") || !j["acquisition_dates"].is_array())
        throw SchemaError("tile metadata needs an 'acquisition_dates' array");
    for (const auto& d : j["acquisition_dates"]) {
        if (!d.is_string())
            throw SchemaError("acquisition dates must be strings");
        m.acquisition_dates.push_back(parse_date(d.get<std::string>()));
    }
    if (j.contains("leaf_on_window")) {
        const auto& w = j["leaf_on_window"];
        if (!w.is_array() || w.size() != 2 || !w[0].is_string() || !w[1].is_string())
            throw SchemaError("'leaf_on_window' must be [\"MM-DD\", \"MM-DD\"]");
        m.window_start = parse_month_day(w[0].get<std::string>());
        m.window_end = parse_month_day(w[1].get<std::string>());
    }
    if (!(m.window_start < m.window_end))
        throw SchemaError("leaf-on window must start before it ends");
    return m;
}

/// Exactly one acquisition date, inside the (inclusive) leaf-on window.
inline bool leaf_on(const TileMeta& meta)
{
    if (meta.acquisition_dates.size() != 1)
        return false;
    const MonthDay md = meta.acquisition_dates.front().month_day();
    return meta.window_start <= md && md <= meta.window_end;
}

// ---------------------------------------------------------------------------
// Tile workflow
// ---------------------------------------------------------------------------

struct TileInputs {
    std::string id;
    FloatRaster dsm;
    FloatRaster dtm;
    std::optional<FloatRaster> red;   // orthophoto bands, any integer
    std::optional<FloatRaster> nir;   // subdivision of the height grid
    std::optional<ByteRaster> buildings;
    TileMeta meta;
};

struct MaskParams {
    double height_threshold = 2.0;
    ThresholdParams ndvi;
};

struct TileResult {
    ByteRaster mask;
    ThresholdDecision decision;
    bool leaf_on = false;
    std::string branch;  // "ndvi", "leaf_off", "multi_date", "no_imagery", "no_threshold"
};

/// NDVI on the orthophoto grid, mean-aggregated onto the height grid.
inline FloatRaster ndvi_on_grid(const FloatRaster& red, const FloatRaster& nir, const ByteRaster& target)
{
    FloatRaster v = ndvi(red, nir);
    if (v.geo().pixel_size != target.geo().pixel_size)
        v = resample_mean(v, target.geo().pixel_size);
    if (!v.same_grid_as(target))
        throw AlignmentError("orthophoto grid does not cover the height grid exactly");
    return v;
}

inline TileResult process_tile(const TileInputs& in, const MaskParams& p = {})
{
    TileResult res;
    const ByteRaster hm = height_mask(ndsm(in.dsm, in.dtm), p.height_threshold);
    const ByteRaster* bld = in.buildings ? &*in.buildings : nullptr;
    res.leaf_on = leaf_on(in.meta);
    std::optional<FloatRaster> v;
    if (!res.leaf_on)
        res.branch = in.meta.acquisition_dates.size() == 1 ? "leaf_off" : "multi_date";
    else if (!in.red || !in.nir)
        res.branch = "no_imagery";
    else {
        v = ndvi_on_grid(*in.red, *in.nir, hm);
        res.decision = detect_threshold(*v, hm, p.ndvi);
        res.branch = res.decision.kind == ThresholdKind::none ? "no_threshold" : "ndvi";
    }
    res.mask = build_woody_mask(hm, bld, res.decision, v ? &*v : nullptr);
    return res;
}

inline nlohmann::json decision_log(const std::string& tile_id, const TileResult& r)
{
    nlohmann::json j{{"tile", tile_id},
                     {"kind", kind_name(r.decision.kind)},
                     {"leaf_on", r.leaf_on},
                     {"branch", r.branch}};
    j["threshold"] = r.decision.threshold ? nlohmann::json(*r.decision.threshold) : nlohmann::json(nullptr);
    j["pass"] = r.decision.pass ? nlohmann::json(pass_name(*r.decision.pass)) : nlohmann::json(nullptr);
    nlohmann::json peaks = nlohmann::json::array();
    for (const Peak& pk : r.decision.peaks)
        peaks.push_back({{"bin", pk.index}, {"center", Histogram::center(pk.index)}, {"count", pk.height}});
    j["peaks"] = peaks;
    return j;
}

} // namespace lwf
