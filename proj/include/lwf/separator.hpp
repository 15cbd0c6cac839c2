// Copyright 2026 The lwf Authors.
// SPDX-License-Identifier: Apache-2.0

// Linear / non-linear separation of a woody mask chip.
//
// Chip exchange layout (shared with external separators):
//   <id>.input.c0.pgm   mask8     woody mask
//   <id>.input.c1.pgm   mask8     skeleton of the mask
//   <id>.input.c2.f32   index_f32 distance to the nearest foreground pixel
//   <id>.pred.cls.pgm   class8    0 background, 1 linear, 2 non-linear
//   <id>.pred.skel.f32  index_f32 skeleton probability in [0, 1]
// Every raster carries its JSON sidecar.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "lwf/errors.hpp"
#include "lwf/morphology.hpp"
#include "lwf/raster.hpp"
#include "lwf/raster_io.hpp"

namespace lwf {

struct SeparatorInput {
    ByteRaster mask;       // c0
    ByteRaster skeleton;   // c1
    FloatRaster distance;  // c2
};

struct SeparatorOutput {
    ByteRaster class_mask;
    FloatRaster skeleton_prob;
};

inline SeparatorInput prepare_input(const ByteRaster& mask)
{
    SeparatorInput in;
    in.mask = mask;
    in.skeleton = skeletonize(mask);
    in.distance = distance_transform(mask);
    return in;
}

/// Background preservation: class 0 exactly where the mask is 0. Foreground
/// left unclassified by a separator falls back to non-linear.
inline void conform_to_mask(SeparatorOutput& out, const ByteRaster& mask)
{
    require_same_grid(out.class_mask, mask, "separator output");
    require_same_grid(out.skeleton_prob, mask, "separator output");
    auto cls = out.class_mask.pixels();
    auto m = mask.pixels();
    for (std::size_t i = 0; i < cls.size(); ++i) {
        if (!m[i])
            cls[i] = kBackground;
        else if (cls[i] != kLinear && cls[i] != kNonLinear)
            cls[i] = kNonLinear;
    }
}

// ---------------------------------------------------------------------------
// Baseline
// ---------------------------------------------------------------------------

struct ElongationStats {
    double skeleton_length = 0.0;
    double mean_radius = 0.0;
    double ratio() const { return mean_radius > 0.0 ? skeleton_length / (2.0 * mean_radius) : 0.0; }
};

namespace detail {

/// Source index (into a w x h crop) of every pixel of the k-th dihedral image
/// of the crop, k in [0, 8). Also returns the transformed dimensions.
inline std::vector<std::size_t> dihedral_sources(int w, int h, int k, int& tw, int& th)
{
    const bool transpose = k >= 4;
    const int rot = k % 4;
    const int w0 = transpose ? h : w;
    const int h0 = transpose ? w : h;
    tw = (rot % 2) ? h0 : w0;
    th = (rot % 2) ? w0 : h0;
    std::vector<std::size_t> src(static_cast<std::size_t>(tw) * th);
    for (int r = 0; r < th; ++r)
        for (int c = 0; c < tw; ++c) {
            int sc = c, sr = r;
            switch (rot) {
            case 1: sc = r; sr = h0 - 1 - c; break;
            case 2: sc = w0 - 1 - c; sr = h0 - 1 - r; break;
            case 3: sc = w0 - 1 - r; sr = c; break;
            default: break;
            }
            const int x = transpose ? sr : sc;
            const int y = transpose ? sc : sr;
            src[static_cast<std::size_t>(r) * tw + c] = static_cast<std::size_t>(y) * w + x;
        }
    return src;
}

} // namespace detail

/// Skeleton length and mean radius of one component, averaged over the eight
/// rotations and reflections of the component so the statistics do not
/// depend on its orientation on the grid.
inline ElongationStats symmetric_elongation(const ByteRaster& crop, const FloatRaster& radius)
{
    ElongationStats s;
    double pixels = 0.0, radius_sum = 0.0;
    for (int k = 0; k < 8; ++k) {
        int tw = 0, th = 0;
        const auto src = detail::dihedral_sources(crop.width(), crop.height(), k, tw, th);
        ByteRaster t(tw, th, Band::mask8);
        auto tp = t.pixels();
        for (std::size_t j = 0; j < src.size(); ++j)
            tp[j] = crop.pixels()[src[j]];
        const ByteRaster sk = skeletonize(t);
        auto sp = sk.pixels();
        for (std::size_t j = 0; j < sp.size(); ++j)
            if (sp[j]) {
                pixels += 1.0;
                radius_sum += radius.pixels()[src[j]];
            }
    }
    s.skeleton_length = pixels / 8.0;
    s.mean_radius = pixels > 0.0 ? radius_sum / pixels : 0.0;
    return s;
}

struct BaselineParams {
    double ratio_threshold = 5.0;
};

/// Per 8-connected component: linear iff L / (2 r) >= ratio_threshold, where
/// L is the skeleton pixel count and r the mean distance to background on the
/// skeleton (both orientation-averaged). A component with r == 0 is
/// non-linear.
inline SeparatorOutput baseline_separate(const SeparatorInput& in, const BaselineParams& p = {})
{
    require_same_grid(in.mask, in.skeleton, "baseline_separate");
    const Components cc = connected_components(in.mask, 8, false);
    const FloatRaster radius = distance_to_background(in.mask);
    SeparatorOutput out{ByteRaster(in.mask.width(), in.mask.height(), Band::class8, in.mask.geo()),
                        FloatRaster(in.mask.width(), in.mask.height(), Band::index_f32, in.mask.geo())};
    for (int id = 1; id <= cc.count; ++id) {
        const ComponentStats& st = cc.stats[static_cast<std::size_t>(id - 1)];
        const int w = st.max_col - st.min_col + 1;
        const int h = st.max_row - st.min_row + 1;
        ByteRaster crop(w, h, Band::mask8);
        FloatRaster crop_r(w, h, Band::index_f32);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                if (cc(st.min_col + c, st.min_row + r) == id) {
                    crop(c, r) = 1;
                    crop_r(c, r) = radius(st.min_col + c, st.min_row + r);
                }
        const ElongationStats e = symmetric_elongation(crop, crop_r);
        const bool linear = e.mean_radius > 0.0 && e.ratio() >= p.ratio_threshold;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const int x = st.min_col + c, y = st.min_row + r;
                if (cc(x, y) != id)
                    continue;
                out.class_mask(x, y) = linear ? kLinear : kNonLinear;
                if (linear && in.skeleton(x, y))
                    out.skeleton_prob(x, y) = 1.0f;
            }
    }
    return out;
}

/// Class-1 pixels farther than max_dist from the binarised (>= 0.5)
/// skeleton become class 2.
inline SeparatorOutput skeleton_refine(const SeparatorOutput& pred, double max_dist = 25.0)
{
    require_same_grid(pred.class_mask, pred.skeleton_prob, "skeleton_refine");
    const ByteRaster skel = threshold_mask(pred.skeleton_prob, [](float v) { return v >= 0.5f; });
    const SquaredDistanceField d2 = squared_distance_transform(skel);
    const double limit = max_dist * max_dist;
    SeparatorOutput out = pred;
    auto cls = out.class_mask.pixels();
    for (std::size_t i = 0; i < cls.size(); ++i)
        if (cls[i] == kLinear && (d2.d2[i] == SquaredDistanceField::kUnreachable ||
                                  static_cast<double>(d2.d2[i]) > limit))
            cls[i] = kNonLinear;
    return out;
}

// ---------------------------------------------------------------------------
// Invocation contract
// ---------------------------------------------------------------------------

struct ChipPaths {
    std::filesystem::path c0, c1, c2, cls, skel;

    ChipPaths(const std::filesystem::path& dir, const std::string& id)
        : c0(dir / (id + ".input.c0.pgm")),
          c1(dir / (id + ".input.c1.pgm")),
          c2(dir / (id + ".input.c2.f32")),
          cls(dir / (id + ".pred.cls.pgm")),
          skel(dir / (id + ".pred.skel.f32"))
    {
    }
};

inline void write_chip_input(const std::filesystem::path& dir, const std::string& id, const SeparatorInput& in)
{
    const ChipPaths p(dir, id);
    write_raster(in.mask, p.c0);
    write_raster(in.skeleton, p.c1);
    write_raster(in.distance, p.c2);
}

inline SeparatorInput read_chip_input(const std::filesystem::path& dir, const std::string& id)
{
    const ChipPaths p(dir, id);
    SeparatorInput in{read_byte_raster(p.c0), read_byte_raster(p.c1), read_float_raster(p.c2)};
    require_same_grid(in.mask, in.skeleton, "chip input");
    require_same_grid(in.mask, in.distance, "chip input");
    return in;
}

inline void write_chip_prediction(const std::filesystem::path& dir, const std::string& id, const SeparatorOutput& out)
{
    const ChipPaths p(dir, id);
    write_raster(out.class_mask, p.cls);
    write_raster(out.skeleton_prob, p.skel);
}

inline SeparatorOutput read_chip_prediction(const std::filesystem::path& dir, const std::string& id)
{
    const ChipPaths p(dir, id);
    SeparatorOutput out{read_byte_raster(p.cls), read_float_raster(p.skel)};
    if (out.class_mask.band() != Band::class8)
        throw FormatError(p.cls.string() + ": expected a class8 raster");
    for (float v : out.skeleton_prob.pixels())
        if (!(v >= 0.0f && v <= 1.0f))
            throw FormatError(p.skel.string() + ": skeleton probability outside [0, 1]");
    return out;
}

/// A separator maps one prepared chip to a prediction. Implementations must
/// not keep state between chips; separate() may be called concurrently.
class Separator {
public:
    virtual ~Separator() = default;
    virtual SeparatorOutput separate(const SeparatorInput& in, const std::string& chip_id) const = 0;
    virtual std::string name() const = 0;
};

class BaselineSeparator : public Separator {
public:
    explicit BaselineSeparator(BaselineParams p = {}) : params_(p) {}

    SeparatorOutput separate(const SeparatorInput& in, const std::string&) const override
    {
        return baseline_separate(in, params_);
    }

    std::string name() const override { return "baseline"; }

private:
    BaselineParams params_;
};

/// Runs `<command> <chip_dir> <chip_id>` through the shell for every chip. The
/// command reads the input files and writes the prediction files.
class ExternalSeparator : public Separator {
public:
    ExternalSeparator(std::string command, std::filesystem::path work_dir, bool keep_files = false)
        : command_(std::move(command)), work_dir_(std::move(work_dir)), keep_files_(keep_files)
    {
        std::filesystem::create_directories(work_dir_);
    }

    SeparatorOutput separate(const SeparatorInput& in, const std::string& chip_id) const override
    {
        write_chip_input(work_dir_, chip_id, in);
        const std::string cmd = command_ + " " + quote(work_dir_.string()) + " " + quote(chip_id);
        const int rc = std::system(cmd.c_str());
        if (rc != 0)
            throw StageError(chip_id, "external separator exited with status " + std::to_string(rc));
        SeparatorOutput out;
        try {
            out = read_chip_prediction(work_dir_, chip_id);
            require_same_grid(out.class_mask, in.mask, "external prediction");
            require_same_grid(out.skeleton_prob, in.mask, "external prediction");
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(chip_id, e.what());
        }
        if (!keep_files_) {
            const ChipPaths p(work_dir_, chip_id);
            for (const auto& f : {p.c0, p.c1, p.c2, p.cls, p.skel}) {
                std::error_code ec;
                std::filesystem::remove(f, ec);
                std::filesystem::remove(sidecar_path(f), ec);
            }
        }
        return out;
    }

    std::string name() const override { return "external:" + command_; }

private:
    static std::string quote(const std::string& s)
    {
        std::string q = "'";
        for (char c : s) {
            if (c == '\'')
                q += "'\\''";
            else
                q += c;
        }
        return q + "'";
    }

    std::string command_;
    std::filesystem::path work_dir_;
    bool keep_files_;
};

/// "baseline" or "external:<command>".
inline std::unique_ptr<Separator> make_separator(const std::string& spec, const std::filesystem::path& work_dir,
                                                 double ratio_threshold = 5.0)
{
    if (spec == "baseline")
        return std::make_unique<BaselineSeparator>(BaselineParams{ratio_threshold});
    const std::string prefix = "external:";
    if (spec.rfind(prefix, 0) == 0 && spec.size() > prefix.size())
        return std::make_unique<ExternalSeparator>(spec.substr(prefix.size()), work_dir);
    throw SchemaError("unknown separator '" + spec + "' (expected baseline or external:<command>)");
}

} // namespace lwf
