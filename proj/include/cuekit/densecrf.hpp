#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "cuekit/errors.hpp"
#include "cuekit/permutohedral.hpp"
#include "cuekit/types.hpp"

// Fully-connected CRF with Potts compatibility, solved by synchronous
// mean-field iteration. The unary is -log f; the pairwise kernel is
//   k(i,j) = w1 exp(-|dp|^2/(2 sa^2) - |dI|^2/(2 sb^2)) + w2 exp(-|dp|^2/(2 sg^2)).
// mean_field_naive sums the messages directly in O(N^2 K); mean_field_lattice
// approximates the two Gaussian convolutions on permutohedral lattices.

namespace cuekit {

struct CrfParams {
    double w1 = 10.0;         // appearance kernel weight
    double w2 = 3.0;          // smoothness kernel weight
    double sigma_alpha = 80.0; // appearance spatial std, pixels
    double sigma_beta = 13.0;  // appearance color std, 8-bit units
    double sigma_gamma = 3.0;  // smoothness spatial std, pixels
    int iterations = 10;

    void validate() const {
        if (w1 < 0 || w2 < 0) throw ConfigError("crf: kernel weights must be >= 0");
        if (sigma_alpha < 0 || sigma_beta < 0 || sigma_gamma < 0)
            throw ConfigError("crf: kernel stds must be >= 0");
        if (w1 > 0 && (sigma_alpha <= 0 || sigma_beta <= 0))
            throw ConfigError("crf: sigma_alpha and sigma_beta must be > 0 when w1 > 0");
        if (w2 > 0 && sigma_gamma <= 0) throw ConfigError("crf: sigma_gamma must be > 0 when w2 > 0");
        if (iterations < 0) throw ConfigError("crf: iterations must be >= 0");
    }
};

inline constexpr float kUnaryFloor = 1e-8f;

/// psi_u(i, l) = -log(max(f_l(p_i), floor)); layout matches the input map.
inline std::vector<float> unary_from_probs(const ScoreMap& probs, float floor = kUnaryFloor) {
    if (probs.kind != MapKind::probability)
        throw KindError("unary_from_probs: probability-kind map required");
    std::vector<float> u(probs.data.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = -std::log(std::max(probs.data[i], floor));
    return u;
}

namespace detail {

inline void check_crf_inputs(const ImageRGB& img, const ScoreMap& probs) {
    require_same_grid(img.height, img.width, probs.height, probs.width, "crf");
    if (probs.kind != MapKind::probability)
        throw KindError("crf: probability-kind map required");
}

// unary in pixel-major (N x K) order
inline std::vector<double> pixel_major_unary(const ScoreMap& probs) {
    const std::size_t hw = probs.plane_size();
    const int k = probs.classes;
    std::vector<double> u(hw * k);
    for (int c = 0; c < k; ++c)
        for (std::size_t i = 0; i < hw; ++i)
            u[i * k + c] = -std::log(std::max(probs.data[c * hw + i], kUnaryFloor));
    return u;
}

inline std::vector<float> pixel_major_probs(const ScoreMap& probs) {
    const std::size_t hw = probs.plane_size();
    const int k = probs.classes;
    std::vector<float> q(hw * k);
    for (int c = 0; c < k; ++c)
        for (std::size_t i = 0; i < hw; ++i) q[i * k + c] = probs.data[c * hw + i];
    return q;
}

inline ScoreMap channel_major_result(const std::vector<float>& q, const ScoreMap& like) {
    ScoreMap out(like.classes, like.height, like.width, MapKind::probability);
    const std::size_t hw = like.plane_size();
    for (int c = 0; c < like.classes; ++c)
        for (std::size_t i = 0; i < hw; ++i) out.data[c * hw + i] = q[i * like.classes + c];
    return out;
}

// softmax of -E into q, one pixel
inline void softmax_neg_energy(const double* e, int k, float* q) {
    double lo = e[0];
    for (int c = 1; c < k; ++c) lo = std::min(lo, e[c]);
    double z = 0.0;
    for (int c = 0; c < k; ++c) z += std::exp(lo - e[c]);
    for (int c = 0; c < k; ++c) q[c] = static_cast<float>(std::exp(lo - e[c]) / z);
}

} // namespace detail

/// Direct O(N^2 K) reference: every pairwise interaction summed exactly.
inline ScoreMap mean_field_naive(const ImageRGB& img, const ScoreMap& probs,
                                 const CrfParams& params) {
    params.validate();
    detail::check_crf_inputs(img, probs);
    if (params.iterations == 0) return probs;

    const int k = probs.classes;
    const std::size_t n = probs.plane_size();
    const std::vector<double> unary = detail::pixel_major_unary(probs);
    std::vector<float> q = detail::pixel_major_probs(probs);
    std::vector<float> qn(q.size());

    const double ia = params.w1 > 0 ? 0.5 / (params.sigma_alpha * params.sigma_alpha) : 0.0;
    const double ib = params.w1 > 0 ? 0.5 / (params.sigma_beta * params.sigma_beta) : 0.0;
    const double ig = params.w2 > 0 ? 0.5 / (params.sigma_gamma * params.sigma_gamma) : 0.0;

    auto kernel = [&](std::size_t i, std::size_t j) -> float {
        const double dx = static_cast<double>(i % img.width) - static_cast<double>(j % img.width);
        const double dy = static_cast<double>(i / img.width) - static_cast<double>(j / img.width);
        const double dp2 = dx * dx + dy * dy;
        double v = 0.0;
        if (params.w1 > 0) {
            const double dr = static_cast<double>(img.data[i * 3]) - img.data[j * 3];
            const double dg = static_cast<double>(img.data[i * 3 + 1]) - img.data[j * 3 + 1];
            const double db = static_cast<double>(img.data[i * 3 + 2]) - img.data[j * 3 + 2];
            v += params.w1 * std::exp(-dp2 * ia - (dr * dr + dg * dg + db * db) * ib);
        }
        if (params.w2 > 0) v += params.w2 * std::exp(-dp2 * ig);
        return static_cast<float>(v);
    };

    // cache the kernel matrix when it fits; it is constant across iterations
    const bool cache = n <= 4096;
    std::vector<float> kmat;
    if (cache) {
        kmat.assign(n * n, 0.0f);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const float v = kernel(i, j);
                kmat[i * n + j] = v;
                kmat[j * n + i] = v;
            }
    }

    std::vector<double> e(k);
    std::vector<float> krow;
    if (!cache) krow.resize(n);

    for (int it = 0; it < params.iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            const float* row;
            if (cache) {
                row = kmat.data() + i * n;
            } else {
                for (std::size_t j = 0; j < n; ++j) krow[j] = (j == i) ? 0.0f : kernel(i, j);
                row = krow.data();
            }
            double ksum = 0.0;
            std::fill(e.begin(), e.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const double kv = row[j];
                ksum += kv;
                const float* qj = q.data() + j * k;
                for (int c = 0; c < k; ++c) e[c] += kv * qj[c];
            }
            // E(i,l) = u + sum_{l'!=l} sum_{j!=i} k(i,j) Q(j,l') = u + ksum - m(l)
            for (int c = 0; c < k; ++c) e[c] = unary[i * k + c] + ksum - e[c];
            detail::softmax_neg_energy(e.data(), k, qn.data() + i * k);
        }
        std::swap(q, qn);
    }
    return detail::channel_major_result(q, probs);
}

/// Same update computed with permutohedral-lattice Gaussian filtering:
/// 5-D position+color features for the appearance kernel, 2-D for the
/// smoothness kernel. Self-contributions are subtracted after filtering.
inline ScoreMap mean_field_lattice(const ImageRGB& img, const ScoreMap& probs,
                                   const CrfParams& params) {
    params.validate();
    detail::check_crf_inputs(img, probs);
    if (params.iterations == 0) return probs;

    const int k = probs.classes;
    const std::size_t n = probs.plane_size();
    const std::vector<double> unary = detail::pixel_major_unary(probs);
    std::vector<float> q = detail::pixel_major_probs(probs);
    std::vector<float> qn(q.size());

    const bool use_app = params.w1 > 0;
    const bool use_smooth = params.w2 > 0;

    std::unique_ptr<PermutohedralLattice> app, smooth;
    if (use_app) {
        std::vector<float> feat(n * 5);
        for (std::size_t i = 0; i < n; ++i) {
            feat[i * 5 + 0] = static_cast<float>((i % img.width) / params.sigma_alpha);
            feat[i * 5 + 1] = static_cast<float>((i / img.width) / params.sigma_alpha);
            feat[i * 5 + 2] = static_cast<float>(img.data[i * 3] / params.sigma_beta);
            feat[i * 5 + 3] = static_cast<float>(img.data[i * 3 + 1] / params.sigma_beta);
            feat[i * 5 + 4] = static_cast<float>(img.data[i * 3 + 2] / params.sigma_beta);
        }
        app = std::make_unique<PermutohedralLattice>(feat, 5, static_cast<int>(n));
    }
    if (use_smooth) {
        std::vector<float> feat(n * 2);
        for (std::size_t i = 0; i < n; ++i) {
            feat[i * 2 + 0] = static_cast<float>((i % img.width) / params.sigma_gamma);
            feat[i * 2 + 1] = static_cast<float>((i / img.width) / params.sigma_gamma);
        }
        smooth = std::make_unique<PermutohedralLattice>(feat, 2, static_cast<int>(n));
    }

    std::vector<float> fa(use_app ? q.size() : 0), fs(use_smooth ? q.size() : 0);
    std::vector<double> e(k);

    for (int it = 0; it < params.iterations; ++it) {
        if (use_app) app->filter(q, fa, k);
        if (use_smooth) smooth->filter(q, fs, k);
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < k; ++c) {
                const float qi = q[i * k + c];
                double msg = 0.0;
                if (use_app) msg += params.w1 * (fa[i * k + c] - qi);
                if (use_smooth) msg += params.w2 * (fs[i * k + c] - qi);
                // the label-constant sum_j k(i,j) term shifts every E(i,l)
                // equally and cancels in the softmax
                e[c] = unary[i * k + c] - msg;
            }
            detail::softmax_neg_energy(e.data(), k, qn.data() + i * k);
        }
        std::swap(q, qn);
    }
    return detail::channel_major_result(q, probs);
}

inline constexpr std::size_t kDefaultLatticeCutoff = 4096;

/// Routes to the lattice path when H*W exceeds the cutoff, else the exact path.
inline ScoreMap crf_refine(const ImageRGB& img, const ScoreMap& probs, const CrfParams& params,
                           std::size_t lattice_cutoff = kDefaultLatticeCutoff) {
    const std::size_t pixels = static_cast<std::size_t>(img.height) * img.width;
    if (pixels > lattice_cutoff) return mean_field_lattice(img, probs, params);
    return mean_field_naive(img, probs, params);
}

} // namespace cuekit
