#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <span>
#include <vector>

#include "cuekit/errors.hpp"

namespace cuekit {

/// 8-bit RGB image, row-major, interleaved triples.
struct ImageRGB {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data; // height*width*3

    ImageRGB() = default;
    ImageRGB(int h, int w, std::uint8_t r = 0, std::uint8_t g = 0, std::uint8_t b = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3) {
        for (std::size_t i = 0; i < data.size(); i += 3) {
            data[i] = r;
            data[i + 1] = g;
            data[i + 2] = b;
        }
    }

    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }

    std::uint8_t* at(int y, int x) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* at(int y, int x) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

/// 8-bit luminance image, row-major.
struct ImageGray {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data; // height*width

    ImageGray() = default;
    ImageGray(int h, int w, std::uint8_t v = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, v) {}

    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
};

enum class MapKind { probability, raw };

/// K x H x W stack of nonnegative 32-bit real maps, C-order.
/// kind=probability means the K values at every pixel sum to 1 (within 1e-5).
struct ScoreMap {
    int classes = 0;
    int height = 0;
    int width = 0;
    MapKind kind = MapKind::raw;
    std::vector<float> data; // classes*height*width

    ScoreMap() = default;
    ScoreMap(int k, int h, int w, MapKind kind_ = MapKind::raw, float fill = 0.0f)
        : classes(k), height(h), width(w), kind(kind_),
          data(static_cast<std::size_t>(k) * h * w, fill) {}

    std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
    std::size_t size() const { return data.size(); }

    float& at(int k, int y, int x) {
        return data[(static_cast<std::size_t>(k) * height + y) * width + x];
    }
    float at(int k, int y, int x) const {
        return data[(static_cast<std::size_t>(k) * height + y) * width + x];
    }

    std::span<float> channel(int k) { return {data.data() + k * plane_size(), plane_size()}; }
    std::span<const float> channel(int k) const {
        return {data.data() + k * plane_size(), plane_size()};
    }
};

/// H x W class-index mask; 255 marks pixels excluded from scoring.
struct LabelMask {
    static constexpr std::uint8_t ignore_value = 255;

    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data; // height*width

    LabelMask() = default;
    LabelMask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// K x H x W binary cue stack. A pixel with no set channel is "unknown".
/// Channel 0 is the background class.
struct CueSet {
    int classes = 0;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data; // classes*height*width, values in {0,1}

    CueSet() = default;
    CueSet(int k, int h, int w)
        : classes(k), height(h), width(w), data(static_cast<std::size_t>(k) * h * w, 0) {}

    std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }

    std::uint8_t& at(int k, int y, int x) {
        return data[(static_cast<std::size_t>(k) * height + y) * width + x];
    }
    std::uint8_t at(int k, int y, int x) const {
        return data[(static_cast<std::size_t>(k) * height + y) * width + x];
    }

    std::span<std::uint8_t> channel(int k) { return {data.data() + k * plane_size(), plane_size()}; }
    std::span<const std::uint8_t> channel(int k) const {
        return {data.data() + k * plane_size(), plane_size()};
    }

    /// Number of elements with value 1, over all channels.
    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data) n += v;
        return n;
    }
};

/// True when every per-pixel distribution sums to 1 within tol.
inline bool is_normalized(const ScoreMap& m, double tol = 1e-5) {
    const std::size_t hw = m.plane_size();
    for (std::size_t i = 0; i < hw; ++i) {
        double s = 0.0;
        for (int k = 0; k < m.classes; ++k) s += m.data[k * hw + i];
        if (std::abs(s - 1.0) > tol) return false;
    }
    return true;
}

inline void require_same_grid(int ha, int wa, int hb, int wb, const char* what) {
    if (ha != hb || wa != wb)
        throw DimensionMismatch(std::string(what) + ": grids differ (" + std::to_string(ha) + "x" +
                                std::to_string(wa) + " vs " + std::to_string(hb) + "x" +
                                std::to_string(wb) + ")");
}

} // namespace cuekit
