#pragma once

#include <algorithm>
#include <cmath>

#include "cuekit/errors.hpp"
#include "cuekit/types.hpp"

namespace cuekit {

/// Rec.601 luma: y = round(0.299 R + 0.587 G + 0.114 B).
inline ImageGray to_gray(const ImageRGB& img) {
    ImageGray out(img.height, img.width);
    for (std::size_t i = 0; i < img.pixels(); ++i) {
        const double y = 0.299 * img.data[i * 3] + 0.587 * img.data[i * 3 + 1] +
                         0.114 * img.data[i * 3 + 2];
        out.data[i] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(y), 0, 255));
    }
    return out;
}

/// Replicates a gray image into the three RGB channels.
inline ImageRGB gray_to_rgb(const ImageGray& img) {
    ImageRGB out(img.height, img.width);
    for (std::size_t i = 0; i < img.pixels(); ++i) {
        out.data[i * 3] = out.data[i * 3 + 1] = out.data[i * 3 + 2] = img.data[i];
    }
    return out;
}

namespace detail {

// Edge-clamped align-corners-false sample positions for one output axis.
inline void bilinear_axis(int in_n, int out_n, std::vector<int>& i0, std::vector<int>& i1,
                          std::vector<float>& t) {
    i0.resize(out_n);
    i1.resize(out_n);
    t.resize(out_n);
    const double scale = static_cast<double>(in_n) / out_n;
    for (int o = 0; o < out_n; ++o) {
        double src = (o + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in_n - 1));
        const int lo = static_cast<int>(std::floor(src));
        i0[o] = lo;
        i1[o] = std::min(lo + 1, in_n - 1);
        t[o] = static_cast<float>(src - lo);
    }
}

} // namespace detail

/// Resizes every channel independently with edge-clamped, align-corners-false
/// bilinear sampling. Output kind is raw unless the size is unchanged
/// (renormalizing a probability map after resampling is the caller's job).
inline ScoreMap resize_bilinear(const ScoreMap& map, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        throw ZeroDimension("resize_bilinear: output size must be at least 1x1");
    if (out_h == map.height && out_w == map.width) return map;

    ScoreMap out(map.classes, out_h, out_w, MapKind::raw);
    std::vector<int> x0, x1, y0, y1;
    std::vector<float> tx, ty;
    detail::bilinear_axis(map.width, out_w, x0, x1, tx);
    detail::bilinear_axis(map.height, out_h, y0, y1, ty);

    for (int k = 0; k < map.classes; ++k) {
        const auto src = map.channel(k);
        auto dst = out.channel(k);
        for (int y = 0; y < out_h; ++y) {
            const float* row0 = src.data() + static_cast<std::size_t>(y0[y]) * map.width;
            const float* row1 = src.data() + static_cast<std::size_t>(y1[y]) * map.width;
            const float fy = ty[y];
            for (int x = 0; x < out_w; ++x) {
                const float top = row0[x0[x]] + (row0[x1[x]] - row0[x0[x]]) * tx[x];
                const float bot = row1[x0[x]] + (row1[x1[x]] - row1[x0[x]]) * tx[x];
                dst[static_cast<std::size_t>(y) * out_w + x] = top + (bot - top) * fy;
            }
        }
    }
    return out;
}

/// Resizes a single H x W channel (wrapped ScoreMap path).
inline std::vector<float> resize_bilinear_plane(std::span<const float> plane, int h, int w,
                                                int out_h, int out_w) {
    ScoreMap m(1, h, w, MapKind::raw);
    std::copy(plane.begin(), plane.end(), m.data.begin());
    ScoreMap r = resize_bilinear(m, out_h, out_w);
    return std::move(r.data);
}

} // namespace cuekit
