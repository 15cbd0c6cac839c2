// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace lwf {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file contents (headers, sidecars, GeoJSON).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Two rasters that must share a pixel grid do not.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// Resampling factor or mosaic offsets are not integral.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// A configuration document failed validation.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed; carries the offending tile or chip id.
class StageError : public Error {
public:
    StageError(std::string unit_id, const std::string& what)
        : Error(what + " [" + unit_id + "]"), unit_id_(std::move(unit_id)) {}

    const std::string& unit_id() const noexcept { return unit_id_; }

private:
    std::string unit_id_;
};

} // namespace lwf
