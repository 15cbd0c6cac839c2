// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

#include "lwf/errors.hpp"
#include "lwf/geometry.hpp"

namespace lwf {

// GeoJSON FeatureCollection of Polygon / MultiPolygon features. The class
// label lives in the "cls" property; other scalar properties become
// attributes. The CRS is carried in the legacy named "crs" member.

namespace detail {

inline int parse_epsg_name(const std::string& name)
{
    const auto pos = name.rfind("EPSG:");
    if (pos == std::string::npos)
        throw FormatError("unsupported CRS name '" + name + "'");
    std::size_t i = pos + 5;
    while (i < name.size() && name[i] == ':')
        ++i;
    try {
        return std::stoi(name.substr(i));
    } catch (const std::exception&) {
        throw FormatError("unsupported CRS name '" + name + "'");
    }
}

inline Ring parse_ring(const nlohmann::json& j)
{
    if (!j.is_array())
        throw FormatError("GeoJSON ring is not an array");
    Ring r;
    r.reserve(j.size());
    for (const auto& pt : j) {
        if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number())
            throw FormatError("GeoJSON position must be [x, y]");
        r.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    return r;
}

inline Polygon parse_polygon_coords(const nlohmann::json& coords)
{
    if (!coords.is_array() || coords.empty())
        throw FormatError("GeoJSON polygon needs at least one ring");
    Polygon p;
    p.outer = parse_ring(coords[0]);
    for (std::size_t i = 1; i < coords.size(); ++i)
        p.holes.push_back(parse_ring(coords[i]));
    return p;
}

inline nlohmann::json ring_json(const Ring& r)
{
    nlohmann::json a = nlohmann::json::array();
    for (const Point& p : r)
        a.push_back({p.x, p.y});
    return a;
}

} // namespace detail

inline nlohmann::json to_geojson(const PolygonSet& set)
{
    nlohmann::ordered_json fc;
    fc["type"] = "FeatureCollection";
    fc["crs"] = {{"type", "name"},
                 {"properties", {{"name", "urn:ogc:def:crs:EPSG::" + std::to_string(set.epsg)}}}};
    auto features = nlohmann::ordered_json::array();
    for (const auto& p : set.polygons) {
        nlohmann::ordered_json f;
        f["type"] = "Feature";
        nlohmann::ordered_json props;
        props["cls"] = p.cls;
        for (const auto& [k, v] : p.attributes)
            props[k] = v;
        f["properties"] = props;
        auto coords = nlohmann::json::array();
        coords.push_back(detail::ring_json(p.outer));
        for (const auto& h : p.holes)
            coords.push_back(detail::ring_json(h));
        f["geometry"] = {{"type", "Polygon"}, {"coordinates", coords}};
        features.push_back(std::move(f));
    }
    fc["features"] = std::move(features);
    return nlohmann::json(fc);
}

/// Parses a FeatureCollection. Features without a "crs" member inherit
/// `default_epsg`. Invalid rings raise FormatError.
inline PolygonSet from_geojson(const nlohmann::json& j, int default_epsg = 0)
{
    if (!j.is_object() || j.value("type", "") != "FeatureCollection" || !j.contains("features") ||
        !j["features"].is_array())
        throw FormatError("expected a GeoJSON FeatureCollection");
    PolygonSet set;
    set.epsg = default_epsg;
    if (j.contains("crs")) {
        const auto& crs = j["crs"];
        if (!crs.contains("properties") || !crs["properties"].contains("name"))
            throw FormatError("GeoJSON crs member lacks properties.name");
        set.epsg = detail::parse_epsg_name(crs["properties"]["name"].get<std::string>());
    }
    for (const auto& f : j["features"]) {
        if (!f.is_object() || !f.contains("geometry") || f["geometry"].is_null())
            continue;
        const auto& g = f["geometry"];
        const std::string type = g.value("type", "");
        int cls = 0;
        std::map<std::string, std::string> attrs;
        if (f.contains("properties") && f["properties"].is_object()) {
            for (const auto& [k, v] : f["properties"].items()) {
                if (k == "cls") {
                    if (!v.is_number_integer())
                        throw FormatError("property 'cls' must be an integer");
                    cls = v.get<int>();
                } else if (v.is_string()) {
                    attrs[k] = v.get<std::string>();
                } else if (v.is_primitive()) {
                    attrs[k] = v.dump();
                }
            }
        }
        auto add = [&](Polygon p) {
            p.cls = cls;
            p.attributes = attrs;
            set.polygons.push_back(std::move(p));
        };
        if (type == "Polygon") {
            add(detail::parse_polygon_coords(g["coordinates"]));
        } else if (type == "MultiPolygon") {
            for (const auto& part : g["coordinates"])
                add(detail::parse_polygon_coords(part));
        } else {
            throw FormatError("unsupported GeoJSON geometry type '" + type + "'");
        }
    }
    validate(set);
    return set;
}

inline void write_geojson(const PolygonSet& set, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out << to_geojson(set).dump() << "\n";
}

inline PolygonSet read_geojson(const std::filesystem::path& path, int default_epsg = 0)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return from_geojson(j, default_epsg);
}

} // namespace lwf
