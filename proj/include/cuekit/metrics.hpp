#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cuekit/errors.hpp"
#include "cuekit/types.hpp"

// Streaming confusion matrix, per-class IoU / mIoU, cue-to-mask conversion for
// the cue-quality protocol, and micro-averaged multi-label scores.

namespace cuekit {

struct ConfusionMatrix {
    int classes = 0;
    std::vector<std::uint64_t> counts; // classes x classes, row = gt, col = pred

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int k) : classes(k), counts(static_cast<std::size_t>(k) * k, 0) {}

    std::uint64_t& at(int gt, int pred) { return counts[static_cast<std::size_t>(gt) * classes + pred]; }
    std::uint64_t at(int gt, int pred) const {
        return counts[static_cast<std::size_t>(gt) * classes + pred];
    }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto v : counts) t += v;
        return t;
    }

    ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
        if (other.classes != classes) throw DimensionMismatch("confusion: class counts differ");
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
        return *this;
    }
};

/// Tallies cm[gt, pred] over every pixel whose ground truth is not the ignore
/// value. Predictions may not contain ignore pixels.
inline void confusion_accumulate(ConfusionMatrix& cm, const LabelMask& gt, const LabelMask& pred) {
    require_same_grid(gt.height, gt.width, pred.height, pred.width, "confusion_accumulate");
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        const std::uint8_t t = gt.data[i];
        const std::uint8_t p = pred.data[i];
        if (p == LabelMask::ignore_value)
            throw IgnoreInPrediction("confusion_accumulate: prediction contains ignore pixels");
        if (t == LabelMask::ignore_value) continue;
        if (t >= cm.classes || p >= cm.classes)
            throw ClassOutOfRange("confusion_accumulate: label outside matrix");
        ++cm.at(t, p);
    }
}

struct IoUReport {
    std::vector<double> iou;          // per class; meaningless where !defined
    std::vector<std::uint8_t> defined; // 0 when the class never appears in gt or pred
};

inline IoUReport iou_per_class(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw EmptyMatrix("iou_per_class: no pixels accumulated");
    IoUReport rep;
    rep.iou.assign(cm.classes, 0.0);
    rep.defined.assign(cm.classes, 0);
    for (int c = 0; c < cm.classes; ++c) {
        std::uint64_t row = 0, col = 0;
        for (int j = 0; j < cm.classes; ++j) {
            row += cm.at(c, j);
            col += cm.at(j, c);
        }
        const std::uint64_t inter = cm.at(c, c);
        const std::uint64_t uni = row + col - inter;
        if (uni == 0) continue;
        rep.defined[c] = 1;
        rep.iou[c] = static_cast<double>(inter) / static_cast<double>(uni);
    }
    return rep;
}

/// Mean IoU over the given class subset (all classes when empty), skipping
/// classes absent from both ground truth and prediction.
inline double miou(const ConfusionMatrix& cm, std::span<const int> subset = {}) {
    const IoUReport rep = iou_per_class(cm);
    double sum = 0.0;
    int n = 0;
    auto add = [&](int c) {
        if (c < 0 || c >= cm.classes) throw ClassOutOfRange("miou: class outside matrix");
        if (rep.defined[c]) {
            sum += rep.iou[c];
            ++n;
        }
    };
    if (subset.empty())
        for (int c = 0; c < cm.classes; ++c) add(c);
    else
        for (int c : subset) add(c);
    if (n == 0) throw EmptyMatrix("miou: no class defined over the requested subset");
    return sum / n;
}

/// Collapses a cue set to a single-label mask for the cue-quality protocol:
/// lowest set foreground channel wins; pixels with no foreground cue --
/// including unknown pixels -- are treated as background.
inline LabelMask cues_to_mask(const CueSet& cues) {
    LabelMask mask(cues.height, cues.width, 0);
    const std::size_t hw = cues.plane_size();
    for (std::size_t i = 0; i < hw; ++i)
        for (int c = 1; c < cues.classes; ++c)
            if (cues.data[c * hw + i]) {
                mask.data[i] = static_cast<std::uint8_t>(c);
                break;
            }
    return mask;
}

struct MultiLabelScores {
    double accuracy = 0.0;
    double recall = 0.0;
};

/// Micro-averaged accuracy and recall over all (image, foreground class)
/// binary presence decisions.
inline MultiLabelScores multilabel_scores(const std::vector<std::vector<int>>& pred_sets,
                                          const std::vector<std::vector<int>>& true_sets,
                                          int classes) {
    if (pred_sets.size() != true_sets.size())
        throw LengthMismatch("multilabel_scores: prediction/truth image counts differ");

    std::uint64_t correct = 0, total = 0, tp = 0, fn = 0;
    std::vector<std::uint8_t> p(classes), t(classes);
    for (std::size_t img = 0; img < pred_sets.size(); ++img) {
        std::fill(p.begin(), p.end(), 0);
        std::fill(t.begin(), t.end(), 0);
        for (int c : pred_sets[img]) {
            if (c < 1 || c >= classes) throw ClassOutOfRange("multilabel_scores: bad predicted class");
            p[c] = 1;
        }
        for (int c : true_sets[img]) {
            if (c < 1 || c >= classes) throw ClassOutOfRange("multilabel_scores: bad true class");
            t[c] = 1;
        }
        for (int c = 1; c < classes; ++c) {
            ++total;
            if (p[c] == t[c]) ++correct;
            if (t[c] && p[c]) ++tp;
            if (t[c] && !p[c]) ++fn;
        }
    }
    MultiLabelScores s;
    s.accuracy = total ? static_cast<double>(correct) / total : 1.0;
    s.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 1.0;
    return s;
}

/// PASCAL VOC class names for the K = 21 label set.
inline std::span<const char* const> voc_class_names() {
    static constexpr const char* names[21] = {
        "background", "aeroplane", "bicycle",   "bird",  "boat",        "bottle", "bus",
        "car",        "cat",       "chair",     "cow",   "diningtable", "dog",    "horse",
        "motorbike",  "person",    "pottedplant", "sheep", "sofa",      "train",  "tvmonitor"};
    return names;
}

} // namespace cuekit
