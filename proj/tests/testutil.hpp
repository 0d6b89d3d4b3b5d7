#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <vector>

#include <unistd.h>

#include "cuekit/felzenszwalb.hpp"
#include "cuekit/metrics.hpp"
#include "cuekit/types.hpp"

namespace testutil {

using Rng = std::mt19937_64;

inline cuekit::ImageRGB random_image(Rng& rng, int h, int w) {
    cuekit::ImageRGB img(h, w);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(d(rng));
    return img;
}

/// Random probability map: uniform positives normalized per pixel in double.
inline cuekit::ScoreMap random_prob_map(Rng& rng, int k, int h, int w) {
    cuekit::ScoreMap m(k, h, w, cuekit::MapKind::probability);
    std::uniform_real_distribution<double> d(0.05, 1.0);
    const std::size_t hw = m.plane_size();
    for (std::size_t i = 0; i < hw; ++i) {
        double sum = 0.0;
        std::vector<double> v(k);
        for (int c = 0; c < k; ++c) {
            v[c] = d(rng);
            sum += v[c];
        }
        for (int c = 0; c < k; ++c) m.data[c * hw + i] = static_cast<float>(v[c] / sum);
    }
    return m;
}

inline cuekit::ScoreMap random_raw_map(Rng& rng, int k, int h, int w) {
    cuekit::ScoreMap m(k, h, w, cuekit::MapKind::raw);
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    for (auto& v : m.data) v = d(rng);
    return m;
}

inline cuekit::CueSet random_cues(Rng& rng, int k, int h, int w, double density = 0.3) {
    cuekit::CueSet c(k, h, w);
    std::bernoulli_distribution bit(density);
    for (auto& v : c.data) v = bit(rng) ? 1 : 0;
    return c;
}

inline cuekit::LabelMask random_mask(Rng& rng, int h, int w, int classes,
                                     double ignore_frac = 0.0) {
    cuekit::LabelMask m(h, w);
    std::uniform_int_distribution<int> d(0, classes - 1);
    std::bernoulli_distribution ign(ignore_frac);
    for (auto& v : m.data)
        v = ign(rng) ? cuekit::LabelMask::ignore_value : static_cast<std::uint8_t>(d(rng));
    return m;
}

/// Exact O(n^2) Gaussian-weighted sums; the oracle for the lattice filter.
inline std::vector<float> brute_gauss_filter(std::span<const float> features, int d, int n,
                                             std::span<const float> values, int vs) {
    std::vector<float> out(static_cast<std::size_t>(n) * vs, 0.0f);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double dist2 = 0.0;
            for (int c = 0; c < d; ++c) {
                const double df = static_cast<double>(features[i * d + c]) - features[j * d + c];
                dist2 += df * df;
            }
            const double w = std::exp(-0.5 * dist2);
            for (int c = 0; c < vs; ++c) out[i * vs + c] += static_cast<float>(w * values[j * vs + c]);
        }
    return out;
}

/// Per-pixel tally oracle for the streaming confusion matrix.
inline cuekit::ConfusionMatrix brute_confusion(const cuekit::LabelMask& gt,
                                               const cuekit::LabelMask& pred, int classes) {
    cuekit::ConfusionMatrix cm(classes);
    for (int y = 0; y < gt.height; ++y)
        for (int x = 0; x < gt.width; ++x) {
            if (gt.at(y, x) == cuekit::LabelMask::ignore_value) continue;
            ++cm.at(gt.at(y, x), pred.at(y, x));
        }
    return cm;
}

/// 8-connected equal-color components; the oracle for degenerate-parameter
/// Felzenszwalb runs.
inline std::vector<std::int32_t> color_components(const cuekit::ImageRGB& img) {
    const int h = img.height, w = img.width;
    std::vector<std::int32_t> label(static_cast<std::size_t>(h) * w, -1);
    std::int32_t next = 0;
    std::vector<std::size_t> stack;
    auto same = [&](std::size_t a, std::size_t b) {
        return img.data[a * 3] == img.data[b * 3] && img.data[a * 3 + 1] == img.data[b * 3 + 1] &&
               img.data[a * 3 + 2] == img.data[b * 3 + 2];
    };
    for (std::size_t s = 0; s < label.size(); ++s) {
        if (label[s] >= 0) continue;
        label[s] = next;
        stack.assign(1, s);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const int y = static_cast<int>(p) / w, x = static_cast<int>(p) % w;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!dy && !dx) continue;
                    const int ny = y + dy, nx = x + dx;
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
                    if (label[q] < 0 && same(p, q)) {
                        label[q] = next;
                        stack.push_back(q);
                    }
                }
        }
        ++next;
    }
    return label;
}

/// Two labelings agree as partitions (up to id renaming).
inline bool same_partition(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
    if (a.size() != b.size()) return false;
    std::map<std::int32_t, std::int32_t> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [ia, oka] = ab.emplace(a[i], b[i]);
        if (!oka && ia->second != b[i]) return false;
        auto [ib, okb] = ba.emplace(b[i], a[i]);
        if (!okb && ib->second != a[i]) return false;
    }
    return true;
}

/// Central-difference check of an analytic gradient. Returns the vector
/// relative error |g_analytic - g_fd|_2 / max(|g_a|_2 + |g_fd|_2, 1e-12).
inline double gradient_rel_error(const std::function<double(std::span<const double>)>& value,
                                 std::span<double> x, std::span<const double> analytic,
                                 double eps = 1e-3) {
    double diff2 = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + eps;
        const double up = value(x);
        x[i] = orig - eps;
        const double dn = value(x);
        x[i] = orig;
        const double fd = (up - dn) / (2.0 * eps);
        const double da = analytic[i] - fd;
        diff2 += da * da;
        na += analytic[i] * analytic[i];
        nf += fd * fd;
    }
    const double denom = std::max(std::sqrt(na) + std::sqrt(nf), 1e-12);
    return std::sqrt(diff2) / denom;
}

/// Self-deleting scratch directory for file round-trip tests.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("cuekit_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace testutil
