// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "lwf/errors.hpp"

namespace lwf {

enum class Band : std::uint8_t { mask8, class8, height_f32, index_f32 };

inline const char* band_name(Band b)
{
    switch (b) {
    case Band::mask8: return "mask8";
    case Band::class8: return "class8";
    case Band::height_f32: return "height_f32";
    case Band::index_f32: return "index_f32";
    }
    return "?";
}

inline Band band_from_name(const std::string& s)
{
    if (s == "mask8") return Band::mask8;
    if (s == "class8") return Band::class8;
    if (s == "height_f32") return Band::height_f32;
    if (s == "index_f32") return Band::index_f32;
    throw FormatError("unknown band '" + s + "'");
}

inline bool is_byte_band(Band b) { return b == Band::mask8 || b == Band::class8; }

/// North-up georeference. The origin is the outer corner of the top-left
/// pixel; rows grow southwards.
struct GeoTransform {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_size = 1.0;
    int epsg = 0;

    bool operator==(const GeoTransform&) const = default;

    double col_to_x(double col) const { return origin_x + col * pixel_size; }
    double row_to_y(double row) const { return origin_y - row * pixel_size; }
    double x_to_col(double x) const { return (x - origin_x) / pixel_size; }
    double y_to_row(double y) const { return (origin_y - y) / pixel_size; }
};

/// Class labels of the separator output and the synthetic labels.
enum ClassLabel : std::uint8_t { kBackground = 0, kLinear = 1, kNonLinear = 2 };

/// Single-band, row-major raster on a georeferenced square-pixel grid.
template <typename T>
class Raster {
    static_assert(std::is_same_v<T, std::uint8_t> || std::is_same_v<T, float>,
                  "rasters hold bytes or float32");

public:
    using value_type = T;

    Raster() = default;

    Raster(int width, int height, Band band, GeoTransform geo = {}, T fill = T{})
        : width_(width), height_(height), band_(band), geo_(geo)
    {
        if (width < 1 || height < 1)
            throw Error("raster dimensions must be >= 1");
        if (!(geo.pixel_size > 0.0))
            throw Error("pixel size must be positive");
        if (is_byte_band(band) != std::is_same_v<T, std::uint8_t>)
            throw Error(std::string("band ") + band_name(band) + " does not match pixel type");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    Band band() const noexcept { return band_; }
    const GeoTransform& geo() const noexcept { return geo_; }
    GeoTransform& geo() noexcept { return geo_; }

    bool contains(int col, int row) const noexcept
    {
        return col >= 0 && row >= 0 && col < width_ && row < height_;
    }

    T& operator()(int col, int row) { return data_[index(col, row)]; }
    const T& operator()(int col, int row) const { return data_[index(col, row)]; }

    /// Out-of-bounds reads return `fallback`.
    T at_or(int col, int row, T fallback) const
    {
        return contains(col, row) ? data_[index(col, row)] : fallback;
    }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }
    std::span<T> row(int r) { return std::span<T>(data_).subspan(index(0, r), width_); }
    std::span<const T> row(int r) const
    {
        return std::span<const T>(data_).subspan(index(0, r), width_);
    }

    bool same_grid(const Raster& o) const { return same_grid_as(o); }

    template <typename U>
    bool same_grid_as(const Raster<U>& o) const
    {
        return width_ == o.width() && height_ == o.height() && geo_ == o.geo();
    }

    bool operator==(const Raster& o) const
    {
        return width_ == o.width_ && height_ == o.height_ && band_ == o.band_ && geo_ == o.geo_ &&
               data_ == o.data_;
    }

    /// Validates the band's value domain (mask8 ∈ {0,1}, class8 ∈ {0,1,2}).
    void check_values() const
    {
        if (band_ == Band::mask8 || band_ == Band::class8) {
            const T hi = band_ == Band::mask8 ? 1 : 2;
            for (T v : data_)
                if (v > hi)
                    throw Error(std::string(band_name(band_)) + " value out of range");
        }
    }

private:
    std::size_t index(int col, int row) const noexcept
    {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int width_ = 0;
    int height_ = 0;
    Band band_ = Band::mask8;
    GeoTransform geo_{};
    std::vector<T> data_;
};

using ByteRaster = Raster<std::uint8_t>;
using FloatRaster = Raster<float>;

inline ByteRaster make_mask(int width, int height, GeoTransform geo = {})
{
    return ByteRaster(width, height, Band::mask8, geo);
}

template <typename A, typename B>
void require_same_grid(const Raster<A>& a, const Raster<B>& b, const char* what)
{
    if (!a.same_grid_as(b))
        throw GridMismatch(std::string(what) + ": rasters are not on the same grid");
}

/// Mean aggregation onto a coarser grid whose pixel size is an integer
/// multiple of the source pixel size. Trailing source pixels that do not fill
/// a whole output block are averaged over the covered part only.
inline FloatRaster resample_mean(const FloatRaster& src, double target_pixel_size)
{
    const double ratio = target_pixel_size / src.geo().pixel_size;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw AlignmentError("target pixel size is not an integer multiple of the source");
    const int f = static_cast<int>(rounded);

    GeoTransform geo = src.geo();
    geo.pixel_size = target_pixel_size;
    const int w = (src.width() + f - 1) / f;
    const int h = (src.height() + f - 1) / f;
    FloatRaster out(w, h, src.band(), geo);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double sum = 0.0;
            int n = 0;
            for (int y = r * f; y < std::min(src.height(), (r + 1) * f); ++y)
                for (int x = c * f; x < std::min(src.width(), (c + 1) * f); ++x) {
                    sum += src(x, y);
                    ++n;
                }
            out(c, r) = static_cast<float>(sum / n);
        }
    }
    return out;
}

/// Binary mask from a predicate on each pixel.
template <typename T, typename Pred>
ByteRaster threshold_mask(const Raster<T>& src, Pred keep)
{
    ByteRaster out(src.width(), src.height(), Band::mask8, src.geo());
    auto in = src.pixels();
    auto o = out.pixels();
    for (std::size_t i = 0; i < in.size(); ++i)
        o[i] = keep(in[i]) ? 1 : 0;
    return out;
}

inline std::size_t count_nonzero(const ByteRaster& r)
{
    return static_cast<std::size_t>(
        std::count_if(r.pixels().begin(), r.pixels().end(), [](std::uint8_t v) { return v != 0; }));
}

} // namespace lwf
