// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures and brute-force oracles for the test suites. Nothing here
// calls into the implementation paths it is used to check.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "lwf/geometry.hpp"
#include "lwf/morphology.hpp"
#include "lwf/raster.hpp"
#include "lwf/rng.hpp"
#include "lwf/separator.hpp"

namespace lwf::test {

inline ByteRaster random_mask(int w, int h, double density, std::uint32_t seed)
{
    std::mt19937 gen(seed);
    std::bernoulli_distribution coin(density);
    ByteRaster m(w, h, Band::mask8);
    for (auto& v : m.pixels())
        v = coin(gen) ? 1 : 0;
    return m;
}

/// Random mask made of filled discs and thick strokes; closer to real
/// vegetation masks than salt-and-pepper noise.
inline ByteRaster random_blobs(int w, int h, int n, std::uint32_t seed)
{
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> ux(0, w), uy(0, h), ur(1.0, 8.0);
    ByteRaster m(w, h, Band::mask8);
    for (int k = 0; k < n; ++k) {
        const double cx = ux(gen), cy = uy(gen), rad = ur(gen);
        const double ex = ux(gen), ey = uy(gen);
        const bool stroke = k % 2 == 0;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                double d;
                if (stroke) {
                    const double vx = ex - cx, vy = ey - cy;
                    const double len2 = vx * vx + vy * vy;
                    double t = len2 > 0 ? ((c - cx) * vx + (r - cy) * vy) / len2 : 0.0;
                    t = std::clamp(t, 0.0, 1.0);
                    d = std::hypot(c - (cx + t * vx), r - (cy + t * vy));
                    if (d <= rad / 3.0)
                        m(c, r) = 1;
                } else {
                    d = std::hypot(c - cx, r - cy);
                    if (d <= rad)
                        m(c, r) = 1;
                }
            }
    }
    return m;
}

/// Brute-force squared distance to the nearest foreground pixel.
inline std::vector<std::int64_t> brute_force_sq_distance(const ByteRaster& m)
{
    std::vector<std::pair<int, int>> fg;
    for (int r = 0; r < m.height(); ++r)
        for (int c = 0; c < m.width(); ++c)
            if (m(c, r))
                fg.emplace_back(c, r);
    std::vector<std::int64_t> out(m.size(), std::numeric_limits<std::int64_t>::max());
    for (int r = 0; r < m.height(); ++r)
        for (int c = 0; c < m.width(); ++c) {
            std::int64_t best = std::numeric_limits<std::int64_t>::max();
            for (auto [x, y] : fg) {
                const std::int64_t dx = x - c, dy = y - r;
                best = std::min(best, dx * dx + dy * dy);
            }
            out[static_cast<std::size_t>(r) * m.width() + c] = best;
        }
    return out;
}

/// Union-find component count.
inline int union_find_count(const ByteRaster& m, int connectivity)
{
    const int w = m.width(), h = m.height();
    std::vector<int> parent(m.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (!m(c, r))
                continue;
            const int i = r * w + c;
            if (c > 0 && m(c - 1, r)) unite(i, i - 1);
            if (r > 0 && m(c, r - 1)) unite(i, i - w);
            if (connectivity == 8 && r > 0) {
                if (c > 0 && m(c - 1, r - 1)) unite(i, i - w - 1);
                if (c + 1 < w && m(c + 1, r - 1)) unite(i, i - w + 1);
            }
        }
    int n = 0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (m(c, r) && find(r * w + c) == r * w + c)
                ++n;
    return n;
}

/// Classic crossing-number point-in-polygon test over all rings.
inline bool point_in_polygon(const Polygon& p, double x, double y)
{
    bool inside = false;
    auto scan = [&](const Ring& ring) {
        for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
            const Point& a = ring[i];
            const Point& b = ring[j];
            if (((a.y > y) != (b.y > y)) && (x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x))
                inside = !inside;
        }
    };
    scan(p.outer);
    for (const auto& hole : p.holes)
        scan(hole);
    return inside;
}

/// The eight symmetries of the square applied to a raster (k = 0..7:
/// rotations by k*90 degrees for k < 4, then the same after a transpose).
template <typename T>
Raster<T> dihedral(const Raster<T>& src, int k)
{
    const bool transpose = k >= 4;
    const int rot = k % 4;
    const int w0 = transpose ? src.height() : src.width();
    const int h0 = transpose ? src.width() : src.height();
    auto get = [&](int c, int r) { return transpose ? src(r, c) : src(c, r); };
    const int w = (rot % 2) ? h0 : w0;
    const int h = (rot % 2) ? w0 : h0;
    Raster<T> out(w, h, src.band(), src.geo());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            int sc = c, sr = r;
            switch (rot) {
            case 1: sc = r; sr = h0 - 1 - c; break;
            case 2: sc = w0 - 1 - c; sr = h0 - 1 - r; break;
            case 3: sc = w0 - 1 - r; sr = c; break;
            default: break;
            }
            out(c, r) = get(sc, sr);
        }
    return out;
}

inline std::filesystem::path temp_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("lwf_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Content hash of every regular file under `root`, keyed by relative path.
inline std::map<std::string, std::uint64_t> tree_hashes(const std::filesystem::path& root,
                                                        const std::string& skip_name = {})
{
    std::map<std::string, std::uint64_t> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().filename() == skip_name)
            continue;
        std::ifstream in(e.path(), std::ios::binary);
        const std::string bytes((std::istreambuf_iterator<char>(in)), {});
        out[e.path().lexically_relative(root).generic_string()] = fnv1a(bytes);
    }
    return out;
}

/// Per-component and pixel scores of a class prediction against a scene
/// label. A component's true class is the majority label of its pixels.
struct SeparationScore {
    std::size_t correct = 0, total = 0, tp = 0, fp = 0, fn = 0;

    void add(const ByteRaster& input, const ByteRaster& label, const ByteRaster& pred)
    {
        const Components cc = connected_components(input, 8, false);
        std::vector<std::array<int, 3>> votes(static_cast<std::size_t>(cc.count) + 1, {0, 0, 0});
        std::vector<int> predicted(static_cast<std::size_t>(cc.count) + 1, -1);
        for (std::size_t k = 0; k < input.size(); ++k) {
            const auto g = label.pixels()[k], p = pred.pixels()[k];
            if (const auto id = static_cast<std::size_t>(cc.labels[k])) {
                ++votes[id][g];
                if (predicted[id] < 0)
                    predicted[id] = p;
            }
            tp += g == kLinear && p == kLinear;
            fp += g != kLinear && p == kLinear;
            fn += g == kLinear && p != kLinear;
        }
        for (std::size_t id = 1; id < votes.size(); ++id) {
            const int truth = votes[id][kLinear] >= votes[id][kNonLinear] ? kLinear : kNonLinear;
            correct += predicted[id] == truth;
            ++total;
        }
    }

    double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 1.0; }
    double f1_linear() const
    {
        return tp + fp + fn ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn) : 1.0;
    }
};

/// Translation-invariant separator: a foreground pixel is linear when at most
/// `limit` pixels of its (2r+1)^2 window are foreground (zero outside the chip).
class LocalWindowSeparator : public Separator {
public:
    explicit LocalWindowSeparator(int radius = 2, int limit = 12) : radius_(radius), limit_(limit) {}

    SeparatorOutput separate(const SeparatorInput& in, const std::string&) const override
    {
        const ByteRaster& m = in.mask;
        SeparatorOutput out{ByteRaster(m.width(), m.height(), Band::class8, m.geo()),
                            FloatRaster(m.width(), m.height(), Band::index_f32, m.geo())};
        for (int r = 0; r < m.height(); ++r)
            for (int c = 0; c < m.width(); ++c) {
                if (!m(c, r))
                    continue;
                int n = 0;
                for (int dy = -radius_; dy <= radius_; ++dy)
                    for (int dx = -radius_; dx <= radius_; ++dx)
                        n += m.at_or(c + dx, r + dy, 0);
                out.class_mask(c, r) = n <= limit_ ? kLinear : kNonLinear;
            }
        return out;
    }

    std::string name() const override { return "local-window"; }

private:
    int radius_;
    int limit_;
};

} // namespace lwf::test
