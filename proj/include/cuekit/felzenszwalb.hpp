#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "cuekit/errors.hpp"
#include "cuekit/types.hpp"

// Graph-based super-pixel segmentation in the Felzenszwalb-Huttenlocher style:
// 8-connected grid graph over Gaussian-smoothed colors, union-find merging with
// the adaptive threshold tau(C) = Int(C) + k/|C|, then a small-component pass.

namespace cuekit {

struct FelzParams {
    double sigma = 0.5; // Gaussian pre-smoothing std, pixels
    double k = 500.0;   // scale constant, color-distance units
    int min_size = 50;  // minimum component size, pixels

    void validate() const {
        if (sigma < 0) throw ConfigError("felzenszwalb: sigma must be >= 0");
        if (k <= 0) throw ConfigError("felzenszwalb: k must be > 0");
        if (min_size < 1) throw ConfigError("felzenszwalb: min_size must be >= 1");
    }
};

/// Dense segment-id labeling; ids are contiguous 0..num_segments-1 in
/// first-pixel scan order.
struct SuperPixelLabeling {
    int height = 0;
    int width = 0;
    std::vector<std::int32_t> segment_of; // height*width
    int num_segments = 0;

    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
    std::int32_t at(int y, int x) const { return segment_of[static_cast<std::size_t>(y) * width + x]; }
};

namespace detail {

// Separable edge-clamped Gaussian, kernel radius ceil(3*sigma).
inline void gaussian_smooth(std::vector<float>& plane, int h, int w, double sigma) {
    if (sigma <= 0) return;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(radius + 1);
    double sum = 0.0;
    for (int i = 0; i <= radius; ++i) {
        kernel[i] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += (i == 0) ? kernel[i] : 2.0 * kernel[i];
    }
    for (auto& v : kernel) v /= sum;

    std::vector<float> tmp(plane.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = kernel[0] * plane[y * w + x];
            for (int i = 1; i <= radius; ++i) {
                const int xl = std::max(x - i, 0);
                const int xr = std::min(x + i, w - 1);
                acc += kernel[i] * (plane[y * w + xl] + plane[y * w + xr]);
            }
            tmp[y * w + x] = static_cast<float>(acc);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = kernel[0] * tmp[y * w + x];
            for (int i = 1; i <= radius; ++i) {
                const int yu = std::max(y - i, 0);
                const int yd = std::min(y + i, h - 1);
                acc += kernel[i] * (tmp[yu * w + x] + tmp[yd * w + x]);
            }
            plane[y * w + x] = static_cast<float>(acc);
        }
}

struct GridEdge {
    std::int32_t a, b;
    float w;
};

struct DisjointSets {
    std::vector<std::int32_t> parent;
    std::vector<std::int32_t> size;

    explicit DisjointSets(std::size_t n) : parent(n), size(n, 1) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::int32_t find(std::int32_t x) {
        std::int32_t root = x;
        while (parent[root] != root) root = parent[root];
        while (parent[x] != root) {
            const std::int32_t next = parent[x];
            parent[x] = root;
            x = next;
        }
        return root;
    }
    // Returns the new root.
    std::int32_t join(std::int32_t a, std::int32_t b) {
        if (size[a] < size[b]) std::swap(a, b);
        parent[b] = a;
        size[a] += size[b];
        return a;
    }
};

} // namespace detail

inline SuperPixelLabeling segment_felzenszwalb(const ImageRGB& img, const FelzParams& params) {
    params.validate();
    const int h = img.height, w = img.width;
    const std::size_t n = img.pixels();

    std::vector<float> r(n), g(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = img.data[i * 3];
        g[i] = img.data[i * 3 + 1];
        b[i] = img.data[i * 3 + 2];
    }
    detail::gaussian_smooth(r, h, w, params.sigma);
    detail::gaussian_smooth(g, h, w, params.sigma);
    detail::gaussian_smooth(b, h, w, params.sigma);

    auto color_dist = [&](std::int32_t i, std::int32_t j) {
        const double dr = r[i] - r[j], dg = g[i] - g[j], db = b[i] - b[j];
        return static_cast<float>(std::sqrt(dr * dr + dg * dg + db * db));
    };

    // 8-connected grid edges in scan order (E, S, SE, NE per pixel)
    std::vector<detail::GridEdge> edges;
    edges.reserve(n * 4);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::int32_t i = y * w + x;
            if (x + 1 < w) edges.push_back({i, i + 1, color_dist(i, i + 1)});
            if (y + 1 < h) edges.push_back({i, i + w, color_dist(i, i + w)});
            if (x + 1 < w && y + 1 < h) edges.push_back({i, i + w + 1, color_dist(i, i + w + 1)});
            if (x + 1 < w && y > 0) edges.push_back({i, i - w + 1, color_dist(i, i - w + 1)});
        }

    // stable sort keeps construction order among equal weights, making the
    // merge sequence fully deterministic
    std::stable_sort(edges.begin(), edges.end(),
                     [](const detail::GridEdge& a, const detail::GridEdge& e) { return a.w < e.w; });

    detail::DisjointSets sets(n);
    // threshold[root] = Int(C) + k/|C|; Int is the largest merged weight, which
    // under ascending order is simply the last merged weight
    std::vector<float> threshold(n, static_cast<float>(params.k));
    for (const auto& e : edges) {
        const std::int32_t a = sets.find(e.a);
        const std::int32_t c = sets.find(e.b);
        if (a == c) continue;
        if (e.w <= threshold[a] && e.w <= threshold[c]) {
            const std::int32_t root = sets.join(a, c);
            threshold[root] = e.w + static_cast<float>(params.k / sets.size[root]);
        }
    }

    // absorb small components along their cheapest connecting edge
    for (const auto& e : edges) {
        const std::int32_t a = sets.find(e.a);
        const std::int32_t c = sets.find(e.b);
        if (a != c && (sets.size[a] < params.min_size || sets.size[c] < params.min_size))
            sets.join(a, c);
    }

    SuperPixelLabeling out;
    out.height = h;
    out.width = w;
    out.segment_of.assign(n, -1);
    std::vector<std::int32_t> remap(n, -1);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t root = sets.find(static_cast<std::int32_t>(i));
        if (remap[root] < 0) remap[root] = next++;
        out.segment_of[i] = remap[root];
    }
    out.num_segments = next;
    return out;
}

/// Mean of `channel` over the pixels of each segment.
inline std::vector<double> region_mean(const SuperPixelLabeling& labeling,
                                       std::span<const float> channel) {
    if (channel.size() != labeling.pixels())
        throw DimensionMismatch("region_mean: channel size does not match labeling");
    std::vector<double> sum(labeling.num_segments, 0.0);
    std::vector<std::size_t> count(labeling.num_segments, 0);
    for (std::size_t i = 0; i < channel.size(); ++i) {
        sum[labeling.segment_of[i]] += channel[i];
        ++count[labeling.segment_of[i]];
    }
    for (int s = 0; s < labeling.num_segments; ++s) sum[s] /= static_cast<double>(count[s]);
    return sum;
}

} // namespace cuekit
