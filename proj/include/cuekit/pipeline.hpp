#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cuekit/config.hpp"
#include "cuekit/cues.hpp"
#include "cuekit/densecrf.hpp"
#include "cuekit/felzenszwalb.hpp"
#include "cuekit/image_ops.hpp"
#include "cuekit/inference.hpp"
#include "cuekit/losses.hpp"
#include "cuekit/manifest.hpp"
#include "cuekit/metrics.hpp"
#include "cuekit/npy.hpp"
#include "cuekit/png_io.hpp"

// Batch orchestration: runs an ordered stage list per manifest record, with
// every intermediate persisted under a deterministic name so stages compose
// across runs. Images are independent and processed in parallel up to the
// jobs limit; per-image failures are isolated and reported.

namespace cuekit {

enum class Stage { superpixel, cues, snap, merge, refine, infer, eval };

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::superpixel: return "superpixel";
        case Stage::cues: return "cues";
        case Stage::snap: return "snap";
        case Stage::merge: return "merge";
        case Stage::refine: return "refine";
        case Stage::infer: return "infer";
        case Stage::eval: return "eval";
    }
    return "?";
}

inline std::vector<Stage> parse_stages(const std::string& csv) {
    static const std::vector<std::pair<std::string, Stage>> table = {
        {"superpixel", Stage::superpixel}, {"cues", Stage::cues},   {"snap", Stage::snap},
        {"merge", Stage::merge},           {"refine", Stage::refine}, {"infer", Stage::infer},
        {"eval", Stage::eval}};
    std::vector<Stage> stages;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        bool found = false;
        for (const auto& [name, st] : table)
            if (name == item) {
                stages.push_back(st);
                found = true;
                break;
            }
        if (!found) throw ConfigError("unknown stage '" + item + "'");
    }
    if (stages.empty()) throw ConfigError("empty stage list");
    return stages;
}

inline std::vector<Stage> all_stages() {
    return {Stage::superpixel, Stage::cues, Stage::snap, Stage::merge,
            Stage::refine,     Stage::infer, Stage::eval};
}

struct ImageResult {
    std::string image_id;
    bool ok = true;
    std::string error;
};

struct PipelineReport {
    std::vector<ImageResult> images;
    bool eval_ran = false;
    ConfusionMatrix confusion;

    bool all_ok() const {
        for (const auto& r : images)
            if (!r.ok) return false;
        return true;
    }
};

namespace detail {

struct ImageContext {
    const ManifestRecord* rec = nullptr;
    std::string out_dir;
    const PipelineConfig* cfg = nullptr;

    std::optional<ImageRGB> image;
    std::optional<SuperPixelLabeling> sp;
    std::optional<CueSet> raw_color, raw_gray, snapped_color, snapped_gray, merged;
    std::optional<LogitsField> logits;
    std::optional<LabelMask> mask;
    int num_classes = 0;

    std::string artifact(const std::string& suffix) const {
        return (std::filesystem::path(out_dir) / (rec->image_id + suffix)).string();
    }

    const ImageRGB& get_image() {
        if (!image) image = load_image(rec->image);
        return *image;
    }

    const SuperPixelLabeling& get_superpixels() {
        if (!sp) {
            const std::string path = artifact("_superpixels.npy");
            if (!std::filesystem::exists(path))
                throw Error("superpixel labeling not available; run the superpixel stage first");
            auto [data, dims] = load_labeling_npy(path);
            SuperPixelLabeling l;
            l.height = dims.first;
            l.width = dims.second;
            l.segment_of = std::move(data);
            std::int32_t mx = -1;
            for (auto v : l.segment_of) mx = std::max(mx, v);
            l.num_segments = mx + 1;
            sp = std::move(l);
        }
        return *sp;
    }

    std::optional<CueSet> get_cues(std::optional<CueSet>& slot, const std::string& suffix) {
        if (!slot) {
            const std::string path = artifact(suffix);
            if (std::filesystem::exists(path)) slot = load_cueset(path);
        }
        if (slot) num_classes = slot->classes;
        return slot;
    }

    // most refined cue artifact available: merged > snapped > raw
    CueSet best_cues() {
        if (auto c = get_cues(merged, "_cues_merged.npy")) return *c;
        if (auto c = get_cues(snapped_color, "_cues_snapped.npy")) return *c;
        if (auto c = get_cues(raw_color, "_cues_raw.npy")) return *c;
        throw Error("no cue artifact available; run the cues stage first");
    }
};

// Loads a (K,H,W) activation stack, resized to the image grid when needed.
inline ScoreMap load_activations_resized(const std::string& path, const ImageRGB& img) {
    ScoreMap m = load_scoremap(path, MapKind::raw);
    if (m.height != img.height || m.width != img.width)
        m = resize_bilinear(m, img.height, img.width);
    return m;
}

// Loads the feature-sum map; (C,H,W) stacks are channel-summed first.
inline std::vector<float> load_feature_sum_resized(const std::string& path, const ImageRGB& img) {
    auto [data, shape] = load_npy<float>(path);
    std::size_t h, w;
    std::vector<float> plane;
    if (shape.size() == 2) {
        h = shape[0];
        w = shape[1];
        plane = std::move(data);
    } else if (shape.size() == 3) {
        h = shape[1];
        w = shape[2];
        plane.assign(h * w, 0.0f);
        for (std::size_t c = 0; c < shape[0]; ++c)
            for (std::size_t i = 0; i < h * w; ++i) plane[i] += data[c * h * w + i];
    } else {
        throw ShapeError(path + ": feature maps must be rank 2 or 3");
    }
    if (h != static_cast<std::size_t>(img.height) || w != static_cast<std::size_t>(img.width))
        plane = resize_bilinear_plane(plane, static_cast<int>(h), static_cast<int>(w),
                                      img.height, img.width);
    return plane;
}

inline CueSet generate_branch_cues(ImageContext& ctx, const std::string& act_path,
                                   const std::string& feat_path) {
    const ImageRGB& img = ctx.get_image();
    const ScoreMap acts = load_activations_resized(act_path, img);
    const PresentClasses present = PresentClasses::from_list(ctx.rec->present, acts.classes);
    CueSet cues = foreground_cues(acts, present, ctx.cfg->thresholds);
    if (!feat_path.empty()) {
        const std::vector<float> fsum = load_feature_sum_resized(feat_path, img);
        set_background_channel(cues, background_cues(fsum, ctx.cfg->thresholds));
    }
    return cues;
}

inline void write_loss_trace(const std::vector<LossReport>& trace, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw EncodeError("cannot open " + path + " for writing");
    out << "step,seeding,boundary,total\n";
    char buf[128];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g\n", i, trace[i].seeding,
                      trace[i].boundary, trace[i].total);
        out << buf;
    }
}

inline void run_stage(ImageContext& ctx, Stage stage, ConfusionMatrix* cm_out) {
    const PipelineConfig& cfg = *ctx.cfg;
    switch (stage) {
        case Stage::superpixel: {
            ctx.sp = segment_felzenszwalb(ctx.get_image(), cfg.felzenszwalb);
            const std::size_t shape[2] = {static_cast<std::size_t>(ctx.sp->height),
                                          static_cast<std::size_t>(ctx.sp->width)};
            save_npy<std::int32_t>(ctx.artifact("_superpixels.npy"), ctx.sp->segment_of, shape);
            break;
        }
        case Stage::cues: {
            if (ctx.rec->activations.empty())
                throw Error("manifest record has no activations path");
            ctx.raw_color = generate_branch_cues(ctx, ctx.rec->activations, ctx.rec->features);
            ctx.num_classes = ctx.raw_color->classes;
            save_cueset(*ctx.raw_color, ctx.artifact("_cues_raw.npy"));
            if (!ctx.rec->activations_gray.empty()) {
                ctx.raw_gray =
                    generate_branch_cues(ctx, ctx.rec->activations_gray, ctx.rec->features_gray);
                save_cueset(*ctx.raw_gray, ctx.artifact("_cues_raw_gray.npy"));
            }
            break;
        }
        case Stage::snap: {
            auto raw = ctx.get_cues(ctx.raw_color, "_cues_raw.npy");
            if (!raw) throw Error("raw cues not available; run the cues stage first");
            const SuperPixelLabeling& sp = ctx.get_superpixels();
            ctx.snapped_color = snap_to_superpixels(*raw, sp, cfg.thresholds);
            save_cueset(*ctx.snapped_color, ctx.artifact("_cues_snapped.npy"));
            if (auto rg = ctx.get_cues(ctx.raw_gray, "_cues_raw_gray.npy")) {
                ctx.snapped_gray = snap_to_superpixels(*rg, sp, cfg.thresholds);
                save_cueset(*ctx.snapped_gray, ctx.artifact("_cues_snapped_gray.npy"));
            }
            break;
        }
        case Stage::merge: {
            auto color = ctx.get_cues(ctx.snapped_color, "_cues_snapped.npy");
            auto gray = ctx.get_cues(ctx.snapped_gray, "_cues_snapped_gray.npy");
            if (!color) {
                color = ctx.get_cues(ctx.raw_color, "_cues_raw.npy");
                gray = ctx.get_cues(ctx.raw_gray, "_cues_raw_gray.npy");
            }
            if (!color) throw Error("no cues to merge; run the cues stage first");
            ctx.merged = gray ? merge_cues(*color, *gray) : [&] {
                CueSet single = *color;
                resolve_conflicts(single);
                return single;
            }();
            save_cueset(*ctx.merged, ctx.artifact("_cues_merged.npy"));
            break;
        }
        case Stage::refine: {
            const CueSet cues = ctx.best_cues();
            const ImageRGB& img = ctx.get_image();
            LogitsField init(cues.classes, img.height, img.width, 0.0);
            RefineOptions opt = cfg.refine;
            opt.lattice_cutoff = cfg.io.lattice_cutoff;
            RefineResult res = refine_logits(img, init, cues, cfg.crf, opt);
            ctx.logits = std::move(res.logits);
            save_scoremap(ctx.logits->probabilities(), ctx.artifact("_probs.npy"));
            {
                ScoreMap raw(ctx.logits->classes, ctx.logits->height, ctx.logits->width);
                for (std::size_t i = 0; i < raw.data.size(); ++i)
                    raw.data[i] = static_cast<float>(ctx.logits->data[i]);
                save_scoremap(raw, ctx.artifact("_logits.npy"));
            }
            write_loss_trace(res.trace, ctx.artifact("_loss_trace.csv"));
            break;
        }
        case Stage::infer: {
            const ImageRGB& img = ctx.get_image();
            ScoreMap probs;
            if (!ctx.logits && std::filesystem::exists(ctx.artifact("_logits.npy"))) {
                const ScoreMap raw = load_scoremap(ctx.artifact("_logits.npy"), MapKind::raw);
                LogitsField lf(raw.classes, raw.height, raw.width);
                for (std::size_t i = 0; i < raw.data.size(); ++i) lf.data[i] = raw.data[i];
                ctx.logits = std::move(lf);
            }
            if (ctx.logits) {
                probs = ctx.logits->probabilities();
                ctx.num_classes = probs.classes;
            } else if (!ctx.rec->activations.empty()) {
                probs = renormalize(load_activations_resized(ctx.rec->activations, img));
                ctx.num_classes = probs.classes;
            } else {
                throw Error("nothing to infer from: no logits artifact and no activations");
            }
            const std::vector<int>& pred =
                ctx.rec->has_predicted ? ctx.rec->predicted : ctx.rec->present;
            const AmendSpec spec = AmendSpec::from_classes(pred, cfg.amend.margin);
            ctx.mask = predict_mask(img, probs, spec, cfg.crf, cfg.io.lattice_cutoff);
            save_mask_png(*ctx.mask, ctx.artifact("_mask.png"));
            break;
        }
        case Stage::eval: {
            if (ctx.rec->gt_mask.empty()) throw Error("eval stage requires a gt_mask path");
            if (!ctx.mask) {
                const std::string path = ctx.artifact("_mask.png");
                if (!std::filesystem::exists(path))
                    throw Error("predicted mask not available; run the infer stage first");
                ctx.mask = load_mask_png(path);
            }
            const LabelMask gt = load_mask_png(ctx.rec->gt_mask);
            const int k = ctx.num_classes > 0 ? ctx.num_classes : cfg.io.num_classes;
            ConfusionMatrix cm(k);
            confusion_accumulate(cm, gt, *ctx.mask);
            *cm_out = std::move(cm);
            break;
        }
    }
}

} // namespace detail

/// Aligned per-class IoU table plus the mean, using VOC names when K = 21.
inline std::string format_iou_table(const ConfusionMatrix& cm,
                                    std::span<const int> subset = {}) {
    const IoUReport rep = iou_per_class(cm);
    std::ostringstream os;
    char buf[96];
    for (int c = 0; c < cm.classes; ++c) {
        std::string name = (cm.classes == 21) ? voc_class_names()[c]
                                              : ("class_" + std::to_string(c));
        if (rep.defined[c])
            std::snprintf(buf, sizeof(buf), "%-14s %8.4f\n", name.c_str(), rep.iou[c]);
        else
            std::snprintf(buf, sizeof(buf), "%-14s %8s\n", name.c_str(), "--");
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%-14s %8.4f\n", "mIoU", miou(cm, subset));
    os << buf;
    return os.str();
}

inline void write_iou_csv(const ConfusionMatrix& cm, const std::string& path) {
    const IoUReport rep = iou_per_class(cm);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw EncodeError("cannot open " + path + " for writing");
    out << "class,iou\n";
    char buf[96];
    for (int c = 0; c < cm.classes; ++c) {
        std::string name = (cm.classes == 21) ? voc_class_names()[c]
                                              : ("class_" + std::to_string(c));
        if (rep.defined[c]) {
            std::snprintf(buf, sizeof(buf), "%s,%.6f\n", name.c_str(), rep.iou[c]);
            out << buf;
        } else {
            out << name << ",\n";
        }
    }
    std::snprintf(buf, sizeof(buf), "miou,%.6f\n", miou(cm));
    out << buf;
}

inline PipelineReport run_pipeline(const Manifest& manifest, const PipelineConfig& cfg,
                                   const std::vector<Stage>& stages, int jobs = 0) {
    cfg.validate();
    std::filesystem::create_directories(cfg.io.output_dir);

    const std::size_t n = manifest.records.size();
    PipelineReport report;
    report.images.resize(n);
    std::vector<ConfusionMatrix> partial_cm(n);

    const bool want_eval =
        std::find(stages.begin(), stages.end(), Stage::eval) != stages.end();

    auto process = [&](std::size_t idx) {
        const ManifestRecord& rec = manifest.records[idx];
        ImageResult& result = report.images[idx];
        result.image_id = rec.image_id;
        detail::ImageContext ctx;
        ctx.rec = &rec;
        ctx.out_dir = cfg.io.output_dir;
        ctx.cfg = &cfg;
        try {
            for (Stage s : stages) detail::run_stage(ctx, s, &partial_cm[idx]);
        } catch (const std::exception& e) {
            result.ok = false;
            result.error = e.what();
        }
    };

    int workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) process(i);
            });
        for (auto& th : pool) th.join();
    }

    if (want_eval) {
        // merge per-image tallies in manifest order; addition is commutative so
        // the aggregate is independent of scheduling
        int k = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (partial_cm[i].classes > 0) k = std::max(k, partial_cm[i].classes);
        if (k > 0) {
            report.confusion = ConfusionMatrix(k);
            for (std::size_t i = 0; i < n; ++i) {
                if (partial_cm[i].classes == 0) continue;
                if (partial_cm[i].classes != k)
                    throw ConfigError("eval: images disagree on the class count");
                report.confusion += partial_cm[i];
            }
            report.eval_ran = true;
            write_iou_csv(report.confusion,
                          (std::filesystem::path(cfg.io.output_dir) / "eval_report.csv").string());
            std::ofstream txt(std::filesystem::path(cfg.io.output_dir) / "eval_report.txt",
                              std::ios::trunc);
            txt << format_iou_table(report.confusion);
        }
    }

    // per-image status report
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : report.images) {
        nlohmann::json e;
        e["image_id"] = r.image_id;
        e["ok"] = r.ok;
        if (!r.ok) e["error"] = r.error;
        j.push_back(e);
    }
    std::ofstream rj(std::filesystem::path(cfg.io.output_dir) / "report.json", std::ios::trunc);
    rj << j.dump(2) << "\n";

    return report;
}

} // namespace cuekit
