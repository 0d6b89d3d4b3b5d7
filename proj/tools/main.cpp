// cuekit command-line front-end: every pipeline stage is independently
// runnable over explicit files, and `pipeline` drives manifest batches.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

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
#include "cuekit/pipeline.hpp"
#include "cuekit/png_io.hpp"
#include "cuekit/viz.hpp"

namespace {

using namespace cuekit;

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoi(item));
    }
    return out;
}

SuperPixelLabeling load_labeling(const std::string& path) {
    auto [data, dims] = load_labeling_npy(path);
    SuperPixelLabeling sp;
    sp.height = dims.first;
    sp.width = dims.second;
    sp.segment_of = std::move(data);
    std::int32_t mx = -1;
    for (auto v : sp.segment_of) mx = std::max(mx, v);
    sp.num_segments = mx + 1;
    return sp;
}

LogitsField load_logits(const std::string& path) {
    const ScoreMap raw = load_scoremap(path, MapKind::raw);
    LogitsField lf(raw.classes, raw.height, raw.width);
    for (std::size_t i = 0; i < raw.data.size(); ++i) lf.data[i] = raw.data[i];
    return lf;
}

struct Cli {
    std::string config_path;
    PipelineConfig cfg;

    void load() {
        if (!config_path.empty()) cfg = load_config(config_path);
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cuekit - weak-supervision segmentation cue toolkit"};
    app.require_subcommand(1);

    Cli cli;
    app.add_option("--config", cli.config_path, "JSON pipeline config")
        ->envname("CUEKIT_CONFIG");

    // --- superpixel ---
    auto* sp_cmd = app.add_subcommand("superpixel", "graph-based super-pixel segmentation");
    std::string sp_image, sp_out, sp_overlay;
    std::optional<double> sp_sigma, sp_k;
    std::optional<int> sp_min_size;
    sp_cmd->add_option("--image", sp_image, "input RGB PNG")->required();
    sp_cmd->add_option("-o,--out", sp_out, "output labeling (H,W) int32 npy")->required();
    sp_cmd->add_option("--overlay", sp_overlay, "optional boundary-overlay PNG");
    sp_cmd->add_option("--sigma", sp_sigma, "Gaussian pre-smoothing std");
    sp_cmd->add_option("--k", sp_k, "scale constant");
    sp_cmd->add_option("--min-size", sp_min_size, "minimum segment size");

    // --- cues generate/snap/merge ---
    auto* cues_cmd = app.add_subcommand("cues", "cue generation and refinement");
    cues_cmd->require_subcommand(1);

    auto* gen_cmd = cues_cmd->add_subcommand("generate", "threshold activations into cues");
    std::string gen_acts, gen_feats, gen_present, gen_labels, gen_image_id, gen_image, gen_out;
    std::optional<double> gen_fg_ratio, gen_bg_abs;
    gen_cmd->add_option("--activations", gen_acts, "(K,H,W) float32 npy")->required();
    gen_cmd->add_option("--features", gen_feats, "feature-sum npy for background cues");
    gen_cmd->add_option("--present", gen_present, "present classes, e.g. 1,2");
    gen_cmd->add_option("--labels", gen_labels, "labels manifest JSON {id: [classes]}");
    gen_cmd->add_option("--image-id", gen_image_id, "id to look up in --labels");
    gen_cmd->add_option("--image", gen_image, "image PNG; activations are resized to it");
    gen_cmd->add_option("-o,--out", gen_out, "output cue set (K,H,W) uint8 npy")->required();
    gen_cmd->add_option("--fg-ratio", gen_fg_ratio, "foreground threshold ratio");
    gen_cmd->add_option("--bg-abs", gen_bg_abs, "background absolute cutoff");

    auto* snap_cmd = cues_cmd->add_subcommand("snap", "snap cues to super-pixels");
    std::string snap_cues, snap_sp, snap_out;
    std::optional<double> snap_ratio;
    snap_cmd->add_option("--cues", snap_cues, "input cue npy")->required();
    snap_cmd->add_option("--superpixels", snap_sp, "labeling npy")->required();
    snap_cmd->add_option("-o,--out", snap_out, "output cue npy")->required();
    snap_cmd->add_option("--snap-ratio", snap_ratio, "snap threshold ratio");

    auto* merge_cmd = cues_cmd->add_subcommand("merge", "OR-merge two cue sets");
    std::string merge_a, merge_b, merge_out;
    merge_cmd->add_option("a", merge_a, "first cue npy")->required();
    merge_cmd->add_option("b", merge_b, "second cue npy")->required();
    merge_cmd->add_option("-o,--out", merge_out, "output cue npy")->required();

    // --- loss eval ---
    auto* loss_cmd = app.add_subcommand("loss", "objective evaluation");
    loss_cmd->require_subcommand(1);
    auto* leval_cmd = loss_cmd->add_subcommand("eval", "seeding + boundary loss of a prediction");
    std::string le_probs, le_logits, le_cues, le_image, le_out;
    leval_cmd->add_option("--probs", le_probs, "(K,H,W) probability npy");
    leval_cmd->add_option("--logits", le_logits, "(K,H,W) logits npy (softmaxed first)");
    leval_cmd->add_option("--cues", le_cues, "cue npy")->required();
    leval_cmd->add_option("--image", le_image, "image PNG (for the CRF posterior)")->required();
    leval_cmd->add_option("-o,--out", le_out, "optional CSV for the three values");

    // --- refine ---
    auto* ref_cmd = app.add_subcommand("refine", "gradient-descent logits refinement");
    std::string ref_image, ref_cues, ref_out, ref_probs_out, ref_trace, ref_init;
    std::optional<int> ref_steps, ref_every;
    std::optional<double> ref_lr;
    ref_cmd->add_option("--image", ref_image, "image PNG")->required();
    ref_cmd->add_option("--cues", ref_cues, "cue npy")->required();
    ref_cmd->add_option("-o,--out", ref_out, "output logits npy")->required();
    ref_cmd->add_option("--probs-out", ref_probs_out, "optional softmax probability npy");
    ref_cmd->add_option("--trace", ref_trace, "optional per-step loss CSV");
    ref_cmd->add_option("--init", ref_init, "initial logits npy (default zeros)");
    ref_cmd->add_option("--steps", ref_steps, "gradient steps");
    ref_cmd->add_option("--lr", ref_lr, "step size");
    ref_cmd->add_option("--crf-every", ref_every, "CRF recompute period");

    // --- infer ---
    auto* inf_cmd = app.add_subcommand("infer", "prediction-amend + CRF + argmax mask");
    std::string inf_image, inf_probs, inf_logits, inf_pred, inf_out;
    std::optional<double> inf_margin;
    inf_cmd->add_option("--image", inf_image, "image PNG")->required();
    inf_cmd->add_option("--probs", inf_probs, "(K,H,W) probability npy");
    inf_cmd->add_option("--logits", inf_logits, "(K,H,W) logits npy (softmaxed first)");
    inf_cmd->add_option("--predicted", inf_pred, "predicted classes, e.g. 1,2 (default: all)");
    inf_cmd->add_option("-o,--out", inf_out, "output VOC-palette mask PNG")->required();
    inf_cmd->add_option("--margin", inf_margin, "suppression margin");

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "mIoU evaluation");
    std::string ev_manifest, ev_pred_dir, ev_suffix = "_mask.png", ev_gt, ev_pred, ev_csv;
    std::optional<int> ev_classes;
    bool ev_cues = false, ev_foreground = false;
    eval_cmd->add_option("--manifest", ev_manifest, "manifest JSON (uses gt_mask entries)");
    eval_cmd->add_option("--pred-dir", ev_pred_dir, "directory of predictions");
    eval_cmd->add_option("--suffix", ev_suffix, "prediction file suffix per image_id");
    eval_cmd->add_flag("--cues", ev_cues, "predictions are cue npy files (unknown -> background)");
    eval_cmd->add_flag("--foreground-only", ev_foreground, "average foreground classes only");
    eval_cmd->add_option("--gt", ev_gt, "single ground-truth mask PNG");
    eval_cmd->add_option("--pred", ev_pred, "single predicted mask PNG");
    eval_cmd->add_option("--classes", ev_classes, "class count (default from config io)");
    eval_cmd->add_option("-o,--out", ev_csv, "optional CSV report path");

    // --- viz ---
    auto* viz_cmd = app.add_subcommand("viz", "render masks, cues and super-pixels");
    std::string vz_mask, vz_cues, vz_sp, vz_image, vz_out;
    int vz_channel = 0;
    viz_cmd->add_option("--mask", vz_mask, "mask PNG to recolor");
    viz_cmd->add_option("--cues", vz_cues, "cue npy; renders --channel");
    viz_cmd->add_option("--channel", vz_channel, "cue channel to render");
    viz_cmd->add_option("--superpixels", vz_sp, "labeling npy; overlays on --image");
    viz_cmd->add_option("--image", vz_image, "image PNG for the overlay");
    viz_cmd->add_option("-o,--out", vz_out, "output PNG")->required();

    // --- pipeline ---
    auto* pipe_cmd = app.add_subcommand("pipeline", "run stages over a manifest batch");
    std::string pp_manifest, pp_stages = "superpixel,cues,snap,merge,refine,infer,eval";
    std::string pp_out_dir;
    int pp_jobs = 0;
    pipe_cmd->add_option("--manifest", pp_manifest, "manifest JSON")->required();
    pipe_cmd->add_option("--stages", pp_stages, "comma-separated stage list");
    pipe_cmd->add_option("--out", pp_out_dir, "output directory (overrides io.output_dir)");
    pipe_cmd->add_option("--jobs", pp_jobs, "parallel images (default: cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        cli.load();
        PipelineConfig& cfg = cli.cfg;

        if (sp_cmd->parsed()) {
            if (sp_sigma) cfg.felzenszwalb.sigma = *sp_sigma;
            if (sp_k) cfg.felzenszwalb.k = *sp_k;
            if (sp_min_size) cfg.felzenszwalb.min_size = *sp_min_size;
            const ImageRGB img = load_image(sp_image);
            const SuperPixelLabeling sp = segment_felzenszwalb(img, cfg.felzenszwalb);
            const std::size_t shape[2] = {static_cast<std::size_t>(sp.height),
                                          static_cast<std::size_t>(sp.width)};
            save_npy<std::int32_t>(sp_out, sp.segment_of, shape);
            if (!sp_overlay.empty()) save_image(superpixel_overlay(img, sp), sp_overlay);
            std::printf("%d segments\n", sp.num_segments);
        } else if (gen_cmd->parsed()) {
            if (gen_fg_ratio) cfg.thresholds.fg_ratio = *gen_fg_ratio;
            if (gen_bg_abs) cfg.thresholds.bg_abs = *gen_bg_abs;
            ScoreMap acts = load_scoremap(gen_acts, MapKind::raw);
            std::optional<ImageRGB> img;
            if (!gen_image.empty()) {
                img = load_image(gen_image);
                if (acts.height != img->height || acts.width != img->width)
                    acts = resize_bilinear(acts, img->height, img->width);
            }
            std::vector<int> present_list;
            if (!gen_present.empty()) {
                present_list = parse_int_list(gen_present);
            } else if (!gen_labels.empty()) {
                auto labels = load_labels_manifest(gen_labels);
                auto it = labels.find(gen_image_id);
                if (it == labels.end())
                    throw ConfigError("image id '" + gen_image_id + "' not in labels manifest");
                present_list = it->second;
            } else {
                throw ConfigError("cues generate: give --present or --labels + --image-id");
            }
            const PresentClasses present = PresentClasses::from_list(present_list, acts.classes);
            CueSet cues = foreground_cues(acts, present, cfg.thresholds);
            if (!gen_feats.empty()) {
                auto [data, shape] = load_npy<float>(gen_feats);
                std::vector<float> plane;
                std::size_t h, w;
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
                    throw ShapeError(gen_feats + ": feature maps must be rank 2 or 3");
                }
                if (h != static_cast<std::size_t>(acts.height) ||
                    w != static_cast<std::size_t>(acts.width))
                    plane = resize_bilinear_plane(plane, static_cast<int>(h), static_cast<int>(w),
                                                  acts.height, acts.width);
                set_background_channel(cues, background_cues(plane, cfg.thresholds));
            }
            save_cueset(cues, gen_out);
        } else if (snap_cmd->parsed()) {
            if (snap_ratio) cfg.thresholds.snap_ratio = *snap_ratio;
            const CueSet cues = load_cueset(snap_cues);
            const SuperPixelLabeling sp = load_labeling(snap_sp);
            save_cueset(snap_to_superpixels(cues, sp, cfg.thresholds), snap_out);
        } else if (merge_cmd->parsed()) {
            save_cueset(merge_cues(load_cueset(merge_a), load_cueset(merge_b)), merge_out);
        } else if (leval_cmd->parsed()) {
            if (le_probs.empty() == le_logits.empty())
                throw ConfigError("loss eval: give exactly one of --probs / --logits");
            ScoreMap probs = le_probs.empty() ? load_logits(le_logits).probabilities()
                                              : load_scoremap(le_probs, MapKind::probability);
            const ImageRGB img = load_image(le_image);
            const CueSet cues = load_cueset(le_cues);
            const ScoreMap q = crf_refine(img, probs, cfg.crf, cfg.io.lattice_cutoff);
            const LossGrad ls = seeding_loss(probs, cues);
            const LossGrad lc = boundary_loss(probs, q);
            std::printf("seeding  %.9g\nboundary %.9g\ntotal    %.9g\n", ls.value, lc.value,
                        ls.value + lc.value);
            if (!le_out.empty()) {
                std::ofstream out(le_out, std::ios::trunc);
                out << "seeding,boundary,total\n";
                char buf[96];
                std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", ls.value, lc.value,
                              ls.value + lc.value);
                out << buf;
            }
        } else if (ref_cmd->parsed()) {
            if (ref_steps) cfg.refine.steps = *ref_steps;
            if (ref_lr) cfg.refine.lr = *ref_lr;
            if (ref_every) cfg.refine.crf_every = *ref_every;
            cfg.refine.lattice_cutoff = cfg.io.lattice_cutoff;
            const ImageRGB img = load_image(ref_image);
            const CueSet cues = load_cueset(ref_cues);
            LogitsField init = ref_init.empty()
                                   ? LogitsField(cues.classes, img.height, img.width, 0.0)
                                   : load_logits(ref_init);
            const RefineResult res = refine_logits(img, init, cues, cfg.crf, cfg.refine);
            ScoreMap raw(res.logits.classes, res.logits.height, res.logits.width);
            for (std::size_t i = 0; i < raw.data.size(); ++i)
                raw.data[i] = static_cast<float>(res.logits.data[i]);
            save_scoremap(raw, ref_out);
            if (!ref_probs_out.empty()) save_scoremap(res.logits.probabilities(), ref_probs_out);
            if (!ref_trace.empty()) detail::write_loss_trace(res.trace, ref_trace);
            if (!res.trace.empty())
                std::printf("final loss: seeding %.6g boundary %.6g total %.6g\n",
                            res.trace.back().seeding, res.trace.back().boundary,
                            res.trace.back().total);
        } else if (inf_cmd->parsed()) {
            if (inf_margin) cfg.amend.margin = *inf_margin;
            if (inf_probs.empty() == inf_logits.empty())
                throw ConfigError("infer: give exactly one of --probs / --logits");
            const ImageRGB img = load_image(inf_image);
            const ScoreMap probs = inf_probs.empty()
                                       ? load_logits(inf_logits).probabilities()
                                       : load_scoremap(inf_probs, MapKind::probability);
            std::vector<int> pred = inf_pred.empty() ? std::vector<int>() : parse_int_list(inf_pred);
            if (inf_pred.empty())
                for (int c = 1; c < probs.classes; ++c) pred.push_back(c);
            const AmendSpec spec = AmendSpec::from_classes(pred, cfg.amend.margin);
            save_mask_png(predict_mask(img, probs, spec, cfg.crf, cfg.io.lattice_cutoff), inf_out);
        } else if (eval_cmd->parsed()) {
            ConfusionMatrix cm;
            if (!ev_manifest.empty()) {
                const Manifest man = load_manifest(ev_manifest);
                const std::string dir = ev_pred_dir.empty() ? cfg.io.output_dir : ev_pred_dir;
                int k = ev_classes ? *ev_classes : cfg.io.num_classes;
                cm = ConfusionMatrix(k);
                for (const auto& rec : man.records) {
                    if (rec.gt_mask.empty()) continue;
                    const LabelMask gt = load_mask_png(rec.gt_mask);
                    const std::string pred_path =
                        (std::filesystem::path(dir) / (rec.image_id + ev_suffix)).string();
                    const LabelMask pred =
                        ev_cues ? cues_to_mask(load_cueset(pred_path)) : load_mask_png(pred_path);
                    confusion_accumulate(cm, gt, pred);
                }
            } else if (!ev_gt.empty() && !ev_pred.empty()) {
                const LabelMask gt = load_mask_png(ev_gt);
                const LabelMask pred = ev_cues ? cues_to_mask(load_cueset(ev_pred))
                                               : load_mask_png(ev_pred);
                int k = ev_classes ? *ev_classes : cfg.io.num_classes;
                cm = ConfusionMatrix(k);
                confusion_accumulate(cm, gt, pred);
            } else {
                throw ConfigError("eval: give --manifest or both --gt and --pred");
            }
            std::vector<int> subset;
            if (ev_foreground)
                for (int c = 1; c < cm.classes; ++c) subset.push_back(c);
            std::fputs(format_iou_table(cm, subset).c_str(), stdout);
            if (!ev_csv.empty()) write_iou_csv(cm, ev_csv);
        } else if (viz_cmd->parsed()) {
            if (!vz_mask.empty()) {
                save_image(mask_to_rgb(load_mask_png(vz_mask)), vz_out);
            } else if (!vz_cues.empty()) {
                save_image(cue_channel_to_rgb(load_cueset(vz_cues), vz_channel), vz_out);
            } else if (!vz_sp.empty()) {
                if (vz_image.empty()) throw ConfigError("viz --superpixels needs --image");
                save_image(superpixel_overlay(load_image(vz_image), load_labeling(vz_sp)), vz_out);
            } else {
                throw ConfigError("viz: give --mask, --cues or --superpixels");
            }
        } else if (pipe_cmd->parsed()) {
            if (!pp_out_dir.empty()) cfg.io.output_dir = pp_out_dir;
            const Manifest man = load_manifest(pp_manifest);
            const std::vector<Stage> stages = parse_stages(pp_stages);
            const PipelineReport rep = run_pipeline(man, cfg, stages, pp_jobs);
            int failures = 0;
            for (const auto& r : rep.images) {
                if (r.ok) {
                    std::printf("ok    %s\n", r.image_id.c_str());
                } else {
                    ++failures;
                    std::printf("FAIL  %s: %s\n", r.image_id.c_str(), r.error.c_str());
                }
            }
            if (rep.eval_ran) std::fputs(format_iou_table(rep.confusion).c_str(), stdout);
            std::printf("%zu image(s), %d failure(s)\n", rep.images.size(), failures);
            return failures == 0 ? 0 : 1;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
