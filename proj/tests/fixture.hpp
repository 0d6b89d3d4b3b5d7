#pragma once

// Synthetic end-to-end scene: two flat two-tone rectangles on a flat
// background, elliptical activation blobs covering roughly 40% of each shape
// (color branch seeds the left half, gray branch the right half), and smooth
// feature-sum surrogates whose low tail marks the far background. Ground
// truth is exact by construction, so pipeline quality is measurable.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cuekit/config.hpp"
#include "cuekit/manifest.hpp"
#include "cuekit/npy.hpp"
#include "cuekit/png_io.hpp"
#include "cuekit/types.hpp"

namespace fixture {

struct Rect {
    int x0, y0, w, h;
    int cx() const { return x0 + w / 2; }
    int cy() const { return y0 + h / 2; }
    bool contains(int x, int y) const { return x >= x0 && x < x0 + w && y >= y0 && y < y0 + h; }
    bool left_half(int x) const { return x < x0 + w / 2; }
};

struct Scene {
    int classes = 3; // background + 2 shapes
    cuekit::ImageRGB image;
    cuekit::LabelMask gt;
    cuekit::ScoreMap acts_color, acts_gray; // (3,H,W) raw
    std::vector<float> feat_color, feat_gray;
    std::vector<int> present = {1, 2};
    Rect shape1, shape2;
};

namespace detail {

inline void add_blob(cuekit::ScoreMap& acts, int channel, double cx, double cy, double sx,
                     double sy) {
    auto plane = acts.channel(channel);
    for (int y = 0; y < acts.height; ++y)
        for (int x = 0; x < acts.width; ++x) {
            const double rx = (x - cx) / sx, ry = (y - cy) / sy;
            plane[static_cast<std::size_t>(y) * acts.width + x] +=
                static_cast<float>(std::exp(-0.5 * (rx * rx + ry * ry)));
        }
}

inline std::vector<float> feature_sum(int h, int w, const Rect& a, const Rect& b, double widen) {
    std::vector<float> f(static_cast<std::size_t>(h) * w, 0.0f);
    for (const Rect* r : {&a, &b}) {
        const double sx = widen * r->w / 2.0, sy = widen * r->h / 2.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double rx = (x - r->cx()) / sx, ry = (y - r->cy()) / sy;
                const float v = static_cast<float>(std::exp(-0.5 * (rx * rx + ry * ry)));
                float& dst = f[static_cast<std::size_t>(y) * w + x];
                dst = std::max(dst, v);
            }
    }
    return f;
}

} // namespace detail

inline Scene make_scene(std::uint64_t seed, int size = 64) {
    std::mt19937_64 rng(seed);
    auto jitter = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    Scene s;
    const int H = size, W = size;

    // two-tone shapes: halves differ by 50 color units so the super-pixel
    // stage splits each shape in two; both are far from the background color
    const int cj = jitter(-8, 8);
    const std::uint8_t bgc[3] = {static_cast<std::uint8_t>(190 + cj),
                                 static_cast<std::uint8_t>(195 + cj),
                                 static_cast<std::uint8_t>(200 + cj)};
    const std::uint8_t c1l[3] = {170, 40, 40}, c1r[3] = {120, 40, 40};
    const std::uint8_t c2l[3] = {40, 60, 170}, c2r[3] = {40, 110, 170};

    s.shape1 = {jitter(5, 9), jitter(7, 11), 2 * jitter(10, 12), jitter(16, 18)};
    s.shape2 = {W / 2 + jitter(2, 5), H / 2 + jitter(4, 7), 2 * jitter(10, 12), jitter(16, 18)};
    s.shape2.w = std::min(s.shape2.w, W - 3 - s.shape2.x0);
    s.shape2.h = std::min(s.shape2.h, H - 3 - s.shape2.y0);
    if (s.shape2.w % 2) --s.shape2.w;

    s.image = cuekit::ImageRGB(H, W, bgc[0], bgc[1], bgc[2]);
    s.gt = cuekit::LabelMask(H, W, 0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const Rect* r = nullptr;
            const std::uint8_t* cl = nullptr;
            const std::uint8_t* cr = nullptr;
            std::uint8_t label = 0;
            if (s.shape1.contains(x, y)) {
                r = &s.shape1;
                cl = c1l;
                cr = c1r;
                label = 1;
            } else if (s.shape2.contains(x, y)) {
                r = &s.shape2;
                cl = c2l;
                cr = c2r;
                label = 2;
            }
            if (!r) continue;
            const std::uint8_t* c = r->left_half(x) ? cl : cr;
            auto* px = s.image.at(y, x);
            px[0] = c[0];
            px[1] = c[1];
            px[2] = c[2];
            s.gt.at(y, x) = label;
        }

    // color-branch blobs sit in the left half of each shape, gray-branch
    // blobs in the right half; the 30%-of-max level set stays inside the half
    s.acts_color = cuekit::ScoreMap(3, H, W, cuekit::MapKind::raw);
    s.acts_gray = cuekit::ScoreMap(3, H, W, cuekit::MapKind::raw);
    for (int c = 1; c <= 2; ++c) {
        const Rect& r = (c == 1) ? s.shape1 : s.shape2;
        const double sx = 0.16 * r.w, sy = 0.32 * r.h;
        detail::add_blob(s.acts_color, c, r.x0 + r.w / 4.0, r.y0 + r.h / 2.0, sx, sy);
        detail::add_blob(s.acts_gray, c, r.x0 + 3.0 * r.w / 4.0, r.y0 + r.h / 2.0, sx, sy);
    }

    s.feat_color = detail::feature_sum(H, W, s.shape1, s.shape2, 0.9);
    s.feat_gray = detail::feature_sum(H, W, s.shape1, s.shape2, 0.85);
    return s;
}

/// Persists the scene and returns a one-record manifest for it.
inline cuekit::Manifest write_scene(const Scene& s, const std::string& dir,
                                    const std::string& image_id) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto p = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

    cuekit::save_image(s.image, p(image_id + ".png"));
    cuekit::save_mask_png(s.gt, p(image_id + "_gt.png"));
    cuekit::save_scoremap(s.acts_color, p(image_id + "_acts.npy"));
    cuekit::save_scoremap(s.acts_gray, p(image_id + "_acts_gray.npy"));
    const std::size_t shape[2] = {static_cast<std::size_t>(s.image.height),
                                  static_cast<std::size_t>(s.image.width)};
    cuekit::save_npy<float>(p(image_id + "_feat.npy"), s.feat_color, shape);
    cuekit::save_npy<float>(p(image_id + "_feat_gray.npy"), s.feat_gray, shape);

    cuekit::ManifestRecord rec;
    rec.image_id = image_id;
    rec.image = p(image_id + ".png");
    rec.activations = p(image_id + "_acts.npy");
    rec.features = p(image_id + "_feat.npy");
    rec.activations_gray = p(image_id + "_acts_gray.npy");
    rec.features_gray = p(image_id + "_feat_gray.npy");
    rec.gt_mask = p(image_id + "_gt.png");
    rec.present = s.present;

    cuekit::Manifest m;
    m.records.push_back(std::move(rec));
    return m;
}

/// The super-pixel/refine settings the synthetic scenes are built for.
inline cuekit::PipelineConfig scene_config(const std::string& out_dir) {
    cuekit::PipelineConfig cfg;
    cfg.felzenszwalb = {0.0, 50.0, 20};
    cfg.refine.steps = 300;
    cfg.refine.lr = 2000.0;
    cfg.refine.crf_every = 50;
    cfg.io.output_dir = out_dir;
    cfg.io.num_classes = 3;
    return cfg;
}

} // namespace fixture
