#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "cuekit/densecrf.hpp"
#include "cuekit/errors.hpp"
#include "cuekit/types.hpp"

// The training objective: seeding loss (cue-restricted cross entropy),
// constrain-to-boundary loss (KL toward the CRF posterior, treated as a
// constant target), their analytic gradients, and a plain gradient-descent
// refiner over a free per-pixel logits field.

namespace cuekit {

inline constexpr double kLogFloor = 1e-8;

struct LossReport {
    double seeding = 0.0;
    double boundary = 0.0;
    double total = 0.0;
};

namespace detail {

// L_s = -(1/|C|) sum over set elements of log f; grad is -1/(|C| f) there.
// grad may be empty; otherwise it is accumulated into (scaled by weight).
inline double seeding_core(std::span<const double> f, std::span<const std::uint8_t> cues,
                           std::span<double> grad, double weight) {
    std::size_t csize = 0;
    for (auto v : cues) csize += v;
    if (csize == 0) throw EmptyCues("seeding_loss: cue set has no elements with value 1");

    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!cues[i]) continue;
        const double p = std::max(f[i], kLogFloor);
        acc -= std::log(p);
        if (!grad.empty()) grad[i] += weight * (-1.0 / (static_cast<double>(csize) * p));
    }
    return acc / static_cast<double>(csize);
}

// L_c = (1/n) sum q log(q/f), q constant; grad w.r.t. f is -q/(n f).
inline double boundary_core(std::span<const double> f, std::span<const double> q,
                            std::span<double> grad, double weight) {
    const double n = static_cast<double>(f.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double fi = std::max(f[i], kLogFloor);
        if (q[i] > 0.0) acc += q[i] * (std::log(std::max(q[i], kLogFloor)) - std::log(fi));
        if (!grad.empty()) grad[i] += weight * (-q[i] / (n * fi));
    }
    return acc / n;
}

inline std::vector<double> widen(std::span<const float> v) {
    return std::vector<double>(v.begin(), v.end());
}

} // namespace detail

struct LossGrad {
    double value = 0.0;
    std::vector<float> grad; // w.r.t. the probability entries, same layout
};

inline LossGrad seeding_loss(const ScoreMap& probs, const CueSet& cues) {
    if (probs.classes != cues.classes)
        throw DimensionMismatch("seeding_loss: class counts differ");
    require_same_grid(probs.height, probs.width, cues.height, cues.width, "seeding_loss");

    const std::vector<double> f = detail::widen(probs.data);
    std::vector<double> g(f.size(), 0.0);
    LossGrad out;
    out.value = detail::seeding_core(f, cues.data, g, 1.0);
    out.grad.assign(g.begin(), g.end());
    return out;
}

inline LossGrad boundary_loss(const ScoreMap& probs, const ScoreMap& crf_out) {
    if (probs.classes != crf_out.classes)
        throw DimensionMismatch("boundary_loss: class counts differ");
    require_same_grid(probs.height, probs.width, crf_out.height, crf_out.width, "boundary_loss");

    const std::vector<double> f = detail::widen(probs.data);
    const std::vector<double> q = detail::widen(crf_out.data);
    std::vector<double> g(f.size(), 0.0);
    LossGrad out;
    out.value = detail::boundary_core(f, q, g, 1.0);
    out.grad.assign(g.begin(), g.end());
    return out;
}

/// Unconstrained K x H x W logits; the probability view is the per-pixel
/// softmax. Stored in double so optimization and gradient checks stay exact.
struct LogitsField {
    int classes = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data; // channel-major, like ScoreMap

    LogitsField() = default;
    LogitsField(int k, int h, int w, double fill = 0.0)
        : classes(k), height(h), width(w), data(static_cast<std::size_t>(k) * h * w, fill) {}

    std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }

    std::vector<double> softmax() const {
        const std::size_t hw = plane_size();
        std::vector<double> f(data.size());
        for (std::size_t i = 0; i < hw; ++i) {
            double mx = data[i];
            for (int c = 1; c < classes; ++c) mx = std::max(mx, data[c * hw + i]);
            double z = 0.0;
            for (int c = 0; c < classes; ++c) z += std::exp(data[c * hw + i] - mx);
            for (int c = 0; c < classes; ++c) f[c * hw + i] = std::exp(data[c * hw + i] - mx) / z;
        }
        return f;
    }

    ScoreMap probabilities() const {
        ScoreMap m(classes, height, width, MapKind::probability);
        const std::vector<double> f = softmax();
        for (std::size_t i = 0; i < f.size(); ++i) m.data[i] = static_cast<float>(f[i]);
        return m;
    }
};

struct ObjectiveEval {
    LossReport report;
    std::vector<double> grad_theta; // empty unless requested
};

/// L = ws*L_s(softmax(theta), cues) + wb*L_c(softmax(theta), q_const), with the
/// probability-space gradients chained through the per-pixel softmax Jacobian.
inline ObjectiveEval evaluate_objective(const LogitsField& theta, const CueSet& cues,
                                        std::span<const double> q_const, double seed_weight = 1.0,
                                        double boundary_weight = 1.0, bool want_grad = true) {
    if (theta.classes != cues.classes)
        throw DimensionMismatch("objective: class counts differ");
    require_same_grid(theta.height, theta.width, cues.height, cues.width, "objective");
    if (q_const.size() != theta.data.size())
        throw DimensionMismatch("objective: CRF posterior size mismatch");

    const std::size_t hw = theta.plane_size();
    const int k = theta.classes;
    const std::vector<double> f = theta.softmax();

    ObjectiveEval out;
    std::vector<double> gf(want_grad ? f.size() : 0, 0.0);
    std::span<double> gspan = want_grad ? std::span<double>(gf) : std::span<double>{};

    out.report.seeding = detail::seeding_core(f, cues.data, gspan, seed_weight);
    out.report.boundary = detail::boundary_core(f, q_const, gspan, boundary_weight);
    out.report.total = seed_weight * out.report.seeding + boundary_weight * out.report.boundary;

    if (want_grad) {
        // dL/dtheta_k = F_k (g_k - sum_m F_m g_m)
        out.grad_theta.assign(f.size(), 0.0);
        for (std::size_t i = 0; i < hw; ++i) {
            double dot = 0.0;
            for (int c = 0; c < k; ++c) dot += f[c * hw + i] * gf[c * hw + i];
            for (int c = 0; c < k; ++c)
                out.grad_theta[c * hw + i] = f[c * hw + i] * (gf[c * hw + i] - dot);
        }
    }
    return out;
}

struct RefineOptions {
    int steps = 300;
    double lr = 1000.0;
    int crf_every = 25;
    double seed_weight = 1.0;
    double boundary_weight = 1.0;
    std::size_t lattice_cutoff = kDefaultLatticeCutoff;

    void validate() const {
        if (steps < 0) throw ConfigError("refine: steps must be >= 0");
        if (lr <= 0) throw ConfigError("refine: lr must be > 0");
        if (crf_every < 1) throw ConfigError("refine: crf_every must be >= 1");
    }
};

struct RefineResult {
    LogitsField logits;
    std::vector<LossReport> trace; // one entry per step, evaluated before the update
};

/// Plain gradient descent on L = L_s + L_c over a free logits field. The CRF
/// posterior is recomputed every crf_every steps and held constant in between.
inline RefineResult refine_logits(const ImageRGB& img, const LogitsField& init, const CueSet& cues,
                                  const CrfParams& crf, const RefineOptions& opt) {
    opt.validate();
    require_same_grid(img.height, img.width, init.height, init.width, "refine_logits");

    RefineResult res;
    res.logits = init;
    if (opt.steps == 0) return res;

    std::vector<double> q;
    for (int step = 0; step < opt.steps; ++step) {
        if (step % opt.crf_every == 0) {
            const ScoreMap posterior =
                crf_refine(img, res.logits.probabilities(), crf, opt.lattice_cutoff);
            q = detail::widen(posterior.data);
        }
        ObjectiveEval eval =
            evaluate_objective(res.logits, cues, q, opt.seed_weight, opt.boundary_weight, true);
        res.trace.push_back(eval.report);
        for (std::size_t i = 0; i < res.logits.data.size(); ++i)
            res.logits.data[i] -= opt.lr * eval.grad_theta[i];
    }
    return res;
}

} // namespace cuekit
