#pragma once

#include <algorithm>
#include <vector>

#include "cuekit/errors.hpp"
#include "cuekit/felzenszwalb.hpp"
#include "cuekit/types.hpp"

// Cue generation: threshold classifier activations into sparse binary
// pseudo-annotations, snap them to super-pixels, and merge cue sets.

namespace cuekit {

struct CueThresholds {
    double fg_ratio = 0.3;   // fraction of the per-class activation max
    double bg_abs = 0.2;     // absolute cutoff on the normalized feature sum
    double snap_ratio = 0.3; // fraction of the per-channel max after averaging

    void validate() const {
        auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
        if (!in_unit(fg_ratio) || !in_unit(bg_abs) || !in_unit(snap_ratio))
            throw ConfigError("thresholds: fg_ratio, bg_abs and snap_ratio must lie in (0,1)");
    }
};

/// Foreground class indices present in the image (from image-level labels).
/// Index 0 is reserved for background and may not appear.
struct PresentClasses {
    std::vector<int> indices;

    static PresentClasses from_list(std::vector<int> list, int num_classes) {
        std::sort(list.begin(), list.end());
        if (std::adjacent_find(list.begin(), list.end()) != list.end())
            throw ClassOutOfRange("present classes: duplicate index");
        for (int c : list)
            if (c < 1 || c >= num_classes)
                throw ClassOutOfRange("present class " + std::to_string(c) +
                                      " outside 1.." + std::to_string(num_classes - 1));
        return PresentClasses{std::move(list)};
    }
};

/// Shimoda-style modified CAM cues: subtract the strongest other present
/// class from each target activation, clamp at zero, then keep values above
/// fg_ratio times the per-class max.
inline CueSet foreground_cues(const ScoreMap& activations, const PresentClasses& present,
                              const CueThresholds& th) {
    th.validate();
    for (int c : present.indices)
        if (c < 1 || c >= activations.classes)
            throw ClassOutOfRange("foreground_cues: class " + std::to_string(c) +
                                  " outside activation channels");

    CueSet cues(activations.classes, activations.height, activations.width);
    const std::size_t hw = activations.plane_size();
    std::vector<float> diff(hw), other(hw);

    for (int c : present.indices) {
        const auto mc = activations.channel(c);
        bool any_other = false;
        for (int o : present.indices) {
            if (o == c) continue;
            const auto mo = activations.channel(o);
            if (!any_other)
                std::copy(mo.begin(), mo.end(), other.begin());
            else
                for (std::size_t i = 0; i < hw; ++i) other[i] = std::max(other[i], mo[i]);
            any_other = true;
        }
        if (any_other)
            for (std::size_t i = 0; i < hw; ++i) diff[i] = std::max(0.0f, mc[i] - other[i]);
        else
            std::copy(mc.begin(), mc.end(), diff.begin());
        const float peak = *std::max_element(diff.begin(), diff.end());
        if (peak <= 0.0f) continue; // degenerate channel stays all-zero
        const float cut = static_cast<float>(th.fg_ratio) * peak;
        auto out = cues.channel(c);
        for (std::size_t i = 0; i < hw; ++i) out[i] = diff[i] > cut ? 1 : 0;
    }
    return cues;
}

/// Background cues from the channel-summed feature maps: min-max normalize,
/// then mark pixels below bg_abs. A constant field yields no cues.
inline std::vector<std::uint8_t> background_cues(std::span<const float> feature_sum,
                                                 const CueThresholds& th) {
    th.validate();
    std::vector<std::uint8_t> out(feature_sum.size(), 0);
    if (feature_sum.empty()) return out;
    const auto [mn, mx] = std::minmax_element(feature_sum.begin(), feature_sum.end());
    if (*mx == *mn) return out;
    const double lo = *mn, span = static_cast<double>(*mx) - lo;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = ((feature_sum[i] - lo) / span < th.bg_abs) ? 1 : 0;
    return out;
}

/// Replaces channel 0 with the given background cue plane.
inline void set_background_channel(CueSet& cues, std::span<const std::uint8_t> bg) {
    if (bg.size() != cues.plane_size())
        throw DimensionMismatch("set_background_channel: plane size mismatch");
    std::copy(bg.begin(), bg.end(), cues.channel(0).begin());
}

/// Averages each cue channel over the super-pixels and re-binarizes at
/// snap_ratio times the channel's maximum averaged value.
inline CueSet snap_to_superpixels(const CueSet& cues, const SuperPixelLabeling& sp,
                                  const CueThresholds& th) {
    th.validate();
    require_same_grid(cues.height, cues.width, sp.height, sp.width, "snap_to_superpixels");

    CueSet out(cues.classes, cues.height, cues.width);
    const std::size_t hw = cues.plane_size();
    std::vector<float> plane(hw);

    for (int c = 0; c < cues.classes; ++c) {
        const auto in = cues.channel(c);
        for (std::size_t i = 0; i < hw; ++i) plane[i] = in[i];
        const std::vector<double> means = region_mean(sp, plane);
        const double peak = *std::max_element(means.begin(), means.end());
        if (peak <= 0.0) continue;
        const double cut = th.snap_ratio * peak;
        auto dst = out.channel(c);
        for (std::size_t i = 0; i < hw; ++i) dst[i] = means[sp.segment_of[i]] > cut ? 1 : 0;
    }
    return out;
}

/// Elementwise logical OR of two cue sets (the raw merge stage).
inline CueSet cue_union(const CueSet& a, const CueSet& b) {
    if (a.classes != b.classes)
        throw DimensionMismatch("cue_union: class counts differ");
    require_same_grid(a.height, a.width, b.height, b.width, "cue_union");
    CueSet out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = (a.data[i] | b.data[i]) ? 1 : 0;
    return out;
}

/// Clears the background bit wherever a foreground bit is set. Overlapping
/// foregrounds are kept: the seeding loss sums over every set element.
inline void resolve_conflicts(CueSet& cues) {
    const std::size_t hw = cues.plane_size();
    auto bg = cues.channel(0);
    for (std::size_t i = 0; i < hw; ++i) {
        if (!bg[i]) continue;
        for (int c = 1; c < cues.classes; ++c)
            if (cues.channel(c)[i]) {
                bg[i] = 0;
                break;
            }
    }
}

/// OR-merge of two cue sets followed by background/foreground conflict
/// resolution (foreground wins).
inline CueSet merge_cues(const CueSet& a, const CueSet& b) {
    CueSet out = cue_union(a, b);
    resolve_conflicts(out);
    return out;
}

} // namespace cuekit
