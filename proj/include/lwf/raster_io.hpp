// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// On-disk raster formats.
//
//   mask8 / class8   binary PGM: "P5\n<w> <h>\n255\n" followed by w*h bytes.
//   height/index     "LWFRF32\0", uint32 width, uint32 height (16 bytes, all
//                    little-endian), then w*h IEEE-754 float32 values.
//
// Every raster file <path> has a JSON sidecar <path>.json holding
// {"origin_x", "origin_y", "pixel_size", "epsg", "band"}. "band" may be
// omitted and then defaults to mask8 (PGM) or index_f32 (float).

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <cctype>
#include <iterator>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lwf/errors.hpp"
#include "lwf/raster.hpp"

namespace lwf {

namespace fs = std::filesystem;

inline constexpr std::array<char, 8> kFloatMagic = {'L', 'W', 'F', 'R', 'F', '3', '2', '\0'};
inline constexpr std::size_t kFloatHeaderBytes = 16;

using AnyRaster = std::variant<ByteRaster, FloatRaster>;

inline fs::path sidecar_path(const fs::path& p)
{
    return fs::path(p.string() + ".json");
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p)
{
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

inline std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw Error("cannot open " + p.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void dump(const fs::path& p, const std::string& bytes)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + p.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error("short write to " + p.string());
}

inline void write_sidecar(const fs::path& p, const GeoTransform& geo, Band band)
{
    nlohmann::ordered_json j;
    j["origin_x"] = geo.origin_x;
    j["origin_y"] = geo.origin_y;
    j["pixel_size"] = geo.pixel_size;
    j["epsg"] = geo.epsg;
    j["band"] = band_name(band);
    dump(sidecar_path(p), j.dump(2) + "\n");
}

struct Sidecar {
    GeoTransform geo;
    std::optional<Band> band;
};

inline Sidecar read_sidecar(const fs::path& p)
{
    const fs::path sp = sidecar_path(p);
    if (!fs::exists(sp))
        throw FormatError("missing sidecar " + sp.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(slurp(sp));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("sidecar " + sp.string() + ": " + e.what());
    }
    Sidecar s;
    auto need_number = [&](const char* key) -> double {
        if (!j.is_object() || !j.contains(key) || !j[key].is_number())
            throw FormatError("sidecar " + sp.string() + ": missing numeric field '" + key + "'");
        return j[key].get<double>();
    };
    s.geo.origin_x = need_number("origin_x");
    s.geo.origin_y = need_number("origin_y");
    s.geo.pixel_size = need_number("pixel_size");
    if (!j.contains("epsg") || !j["epsg"].is_number_integer())
        throw FormatError("sidecar " + sp.string() + ": missing integer field 'epsg'");
    s.geo.epsg = j["epsg"].get<int>();
    if (!(s.geo.pixel_size > 0.0))
        throw FormatError("sidecar " + sp.string() + ": pixel_size must be positive");
    if (j.contains("band")) {
        if (!j["band"].is_string())
            throw FormatError("sidecar " + sp.string() + ": 'band' must be a string");
        s.band = band_from_name(j["band"].get<std::string>());
    }
    return s;
}

inline std::string encode_pgm(const ByteRaster& r)
{
    std::string out = "P5\n" + std::to_string(r.width()) + " " + std::to_string(r.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(r.pixels().data()), r.size());
    return out;
}

inline std::string encode_f32(const FloatRaster& r)
{
    std::string out(kFloatMagic.begin(), kFloatMagic.end());
    put_u32(out, static_cast<std::uint32_t>(r.width()));
    put_u32(out, static_cast<std::uint32_t>(r.height()));
    out.reserve(out.size() + 4 * r.size());
    for (float v : r.pixels())
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

// Parses the PGM header; returns {width, height, offset of first pixel}.
inline std::array<std::size_t, 3> parse_pgm_header(const std::string& b, const std::string& name)
{
    std::size_t pos = 2;
    auto next_token = [&]() -> long {
        for (;;) {
            while (pos < b.size() && std::isspace(static_cast<unsigned char>(b[pos])))
                ++pos;
            if (pos < b.size() && b[pos] == '#') {
                while (pos < b.size() && b[pos] != '\n')
                    ++pos;
                continue;
            }
            break;
        }
        const std::size_t start = pos;
        while (pos < b.size() && std::isdigit(static_cast<unsigned char>(b[pos])))
            ++pos;
        if (start == pos || pos - start > 9)
            throw FormatError(name + ": malformed PGM header");
        return std::stol(b.substr(start, pos - start));
    };
    const long w = next_token();
    const long h = next_token();
    const long maxval = next_token();
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw FormatError(name + ": unsupported PGM dimensions or maxval");
    if (pos >= b.size() || !std::isspace(static_cast<unsigned char>(b[pos])))
        throw FormatError(name + ": malformed PGM header");
    ++pos;
    return {static_cast<std::size_t>(w), static_cast<std::size_t>(h), pos};
}

} // namespace detail

inline void write_raster(const ByteRaster& r, const fs::path& path)
{
    detail::dump(path, detail::encode_pgm(r));
    detail::write_sidecar(path, r.geo(), r.band());
}

inline void write_raster(const FloatRaster& r, const fs::path& path)
{
    detail::dump(path, detail::encode_f32(r));
    detail::write_sidecar(path, r.geo(), r.band());
}

inline void write_raster(const AnyRaster& r, const fs::path& path)
{
    std::visit([&](const auto& x) { write_raster(x, path); }, r);
}

/// Reads either format, dispatching on the file magic.
inline AnyRaster read_raster(const fs::path& path)
{
    const std::string name = path.string();
    const std::string bytes = detail::slurp(path);
    const detail::Sidecar side = detail::read_sidecar(path);

    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
        const auto [w, h, off] = detail::parse_pgm_header(bytes, name);
        if (bytes.size() != off + w * h)
            throw FormatError(name + ": PGM payload does not match header dimensions");
        const Band band = side.band.value_or(Band::mask8);
        if (!is_byte_band(band))
            throw FormatError(name + ": sidecar band does not match PGM payload");
        ByteRaster r(static_cast<int>(w), static_cast<int>(h), band, side.geo);
        std::memcpy(r.pixels().data(), bytes.data() + off, w * h);
        try {
            r.check_values();
        } catch (const Error& e) {
            throw FormatError(name + ": " + e.what());
        }
        return r;
    }

    if (bytes.size() >= kFloatHeaderBytes &&
        std::memcmp(bytes.data(), kFloatMagic.data(), kFloatMagic.size()) == 0) {
        const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
        const std::size_t w = detail::get_u32(u + 8);
        const std::size_t h = detail::get_u32(u + 12);
        if (w < 1 || h < 1 || bytes.size() != kFloatHeaderBytes + 4 * w * h)
            throw FormatError(name + ": float payload does not match header dimensions");
        const Band band = side.band.value_or(Band::index_f32);
        if (is_byte_band(band))
            throw FormatError(name + ": sidecar band does not match float payload");
        FloatRaster r(static_cast<int>(w), static_cast<int>(h), band, side.geo);
        auto px = r.pixels();
        for (std::size_t i = 0; i < px.size(); ++i)
            px[i] = std::bit_cast<float>(detail::get_u32(u + kFloatHeaderBytes + 4 * i));
        return r;
    }

    throw FormatError(name + ": unrecognised raster format");
}

inline ByteRaster read_byte_raster(const fs::path& path)
{
    auto any = read_raster(path);
    if (auto* r = std::get_if<ByteRaster>(&any))
        return std::move(*r);
    throw FormatError(path.string() + ": expected a mask8/class8 raster");
}

inline FloatRaster read_float_raster(const fs::path& path)
{
    auto any = read_raster(path);
    if (auto* r = std::get_if<FloatRaster>(&any))
        return std::move(*r);
    throw FormatError(path.string() + ": expected a float32 raster");
}

} // namespace lwf
