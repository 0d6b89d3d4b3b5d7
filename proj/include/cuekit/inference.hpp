#pragma once

#include <algorithm>
#include <vector>

#include "cuekit/densecrf.hpp"
#include "cuekit/errors.hpp"
#include "cuekit/types.hpp"

// Test-time prediction amendment: classes the classifier deems absent are
// suppressed below the per-pixel ceiling of the predicted classes, before
// CRF refinement and argmax.

namespace cuekit {

struct AmendSpec {
    std::vector<int> predicted; // sorted, unique; always contains background 0
    double margin = 1e-4;

    static AmendSpec from_classes(std::vector<int> classes, double margin = 1e-4) {
        if (margin <= 0) throw ConfigError("amend: margin must be > 0");
        classes.push_back(0); // background is always predicted
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        for (int c : classes)
            if (c < 0) throw ClassOutOfRange("amend: negative class index");
        return AmendSpec{std::move(classes), margin};
    }
};

/// Caps every non-predicted channel at (max over predicted channels) - margin,
/// per pixel. Values already below the ceiling are untouched; the output is a
/// raw map (per-pixel sums may drop below 1).
inline ScoreMap amend_scores(const ScoreMap& probs, const AmendSpec& spec) {
    if (spec.predicted.empty()) throw EmptyPrediction("amend: no predicted classes");
    for (int c : spec.predicted)
        if (c < 0 || c >= probs.classes)
            throw ClassOutOfRange("amend: class " + std::to_string(c) + " outside 0.." +
                                  std::to_string(probs.classes - 1));

    std::vector<std::uint8_t> is_pred(probs.classes, 0);
    for (int c : spec.predicted) is_pred[c] = 1;

    ScoreMap out = probs;
    out.kind = MapKind::raw;
    const std::size_t hw = probs.plane_size();
    for (std::size_t i = 0; i < hw; ++i) {
        float ceiling = 0.0f;
        bool first = true;
        for (int c : spec.predicted) {
            const float v = probs.data[c * hw + i];
            ceiling = first ? v : std::max(ceiling, v);
            first = false;
        }
        const float cap = std::max(ceiling - static_cast<float>(spec.margin), 0.0f);
        for (int c = 0; c < probs.classes; ++c)
            if (!is_pred[c]) {
                float& v = out.data[c * hw + i];
                v = std::min(v, cap);
            }
    }
    return out;
}

/// Per-pixel renormalization into a probability map; pixels whose scores sum
/// to zero fall back to the uniform distribution.
inline ScoreMap renormalize(const ScoreMap& raw) {
    ScoreMap out = raw;
    out.kind = MapKind::probability;
    const std::size_t hw = raw.plane_size();
    for (std::size_t i = 0; i < hw; ++i) {
        double s = 0.0;
        for (int c = 0; c < raw.classes; ++c) s += raw.data[c * hw + i];
        if (s > 0.0) {
            for (int c = 0; c < raw.classes; ++c)
                out.data[c * hw + i] = static_cast<float>(raw.data[c * hw + i] / s);
        } else {
            const float u = 1.0f / raw.classes;
            for (int c = 0; c < raw.classes; ++c) out.data[c * hw + i] = u;
        }
    }
    return out;
}

/// Per-pixel argmax; ties break toward the lowest class index.
inline LabelMask argmax_mask(const ScoreMap& map) {
    LabelMask mask(map.height, map.width);
    const std::size_t hw = map.plane_size();
    for (std::size_t i = 0; i < hw; ++i) {
        int best = 0;
        float best_v = map.data[i];
        for (int c = 1; c < map.classes; ++c) {
            const float v = map.data[c * hw + i];
            if (v > best_v) {
                best_v = v;
                best = c;
            }
        }
        mask.data[i] = static_cast<std::uint8_t>(best);
    }
    return mask;
}

/// amend -> renormalize -> CRF refine -> argmax.
inline LabelMask predict_mask(const ImageRGB& img, const ScoreMap& probs, const AmendSpec& spec,
                              const CrfParams& crf,
                              std::size_t lattice_cutoff = kDefaultLatticeCutoff) {
    require_same_grid(img.height, img.width, probs.height, probs.width, "predict_mask");
    const ScoreMap amended = amend_scores(probs, spec);
    const ScoreMap renorm = renormalize(amended);
    const ScoreMap posterior = crf_refine(img, renorm, crf, lattice_cutoff);
    return argmax_mask(posterior);
}

} // namespace cuekit
