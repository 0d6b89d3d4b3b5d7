#pragma once

#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "cuekit/cues.hpp"
#include "cuekit/densecrf.hpp"
#include "cuekit/errors.hpp"
#include "cuekit/felzenszwalb.hpp"
#include "cuekit/losses.hpp"

namespace cuekit {

struct AmendConfig {
    double margin = 1e-4;

    void validate() const {
        if (margin <= 0) throw ConfigError("amend: margin must be > 0");
    }
};

struct IoConfig {
    std::string output_dir = "out";
    std::size_t lattice_cutoff = kDefaultLatticeCutoff;
    int num_classes = 21; // used when no artifact in the run pins K (e.g. bare eval)
};

struct PipelineConfig {
    FelzParams felzenszwalb;
    CrfParams crf;
    CueThresholds thresholds;
    AmendConfig amend;
    RefineOptions refine;
    IoConfig io;

    void validate() const {
        felzenszwalb.validate();
        crf.validate();
        thresholds.validate();
        amend.validate();
        refine.validate();
        if (io.num_classes < 2) throw ConfigError("io: num_classes must be >= 2");
    }
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                                const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!known.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

} // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j) {
    using detail::read_field;
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    detail::reject_unknown_keys(
        j, {"felzenszwalb", "crf", "thresholds", "amend", "refine", "io"}, "config");

    PipelineConfig cfg;
    if (j.contains("felzenszwalb")) {
        const auto& o = j.at("felzenszwalb");
        detail::reject_unknown_keys(o, {"sigma", "k", "min_size"}, "felzenszwalb");
        read_field(o, "sigma", cfg.felzenszwalb.sigma, "felzenszwalb");
        read_field(o, "k", cfg.felzenszwalb.k, "felzenszwalb");
        read_field(o, "min_size", cfg.felzenszwalb.min_size, "felzenszwalb");
    }
    if (j.contains("crf")) {
        const auto& o = j.at("crf");
        detail::reject_unknown_keys(
            o, {"w1", "w2", "sigma_alpha", "sigma_beta", "sigma_gamma", "iterations"}, "crf");
        read_field(o, "w1", cfg.crf.w1, "crf");
        read_field(o, "w2", cfg.crf.w2, "crf");
        read_field(o, "sigma_alpha", cfg.crf.sigma_alpha, "crf");
        read_field(o, "sigma_beta", cfg.crf.sigma_beta, "crf");
        read_field(o, "sigma_gamma", cfg.crf.sigma_gamma, "crf");
        read_field(o, "iterations", cfg.crf.iterations, "crf");
    }
    if (j.contains("thresholds")) {
        const auto& o = j.at("thresholds");
        detail::reject_unknown_keys(o, {"fg_ratio", "bg_abs", "snap_ratio"}, "thresholds");
        read_field(o, "fg_ratio", cfg.thresholds.fg_ratio, "thresholds");
        read_field(o, "bg_abs", cfg.thresholds.bg_abs, "thresholds");
        read_field(o, "snap_ratio", cfg.thresholds.snap_ratio, "thresholds");
    }
    if (j.contains("amend")) {
        const auto& o = j.at("amend");
        detail::reject_unknown_keys(o, {"margin"}, "amend");
        read_field(o, "margin", cfg.amend.margin, "amend");
    }
    if (j.contains("refine")) {
        const auto& o = j.at("refine");
        detail::reject_unknown_keys(
            o, {"steps", "lr", "crf_every", "seed_weight", "boundary_weight"}, "refine");
        read_field(o, "steps", cfg.refine.steps, "refine");
        read_field(o, "lr", cfg.refine.lr, "refine");
        read_field(o, "crf_every", cfg.refine.crf_every, "refine");
        read_field(o, "seed_weight", cfg.refine.seed_weight, "refine");
        read_field(o, "boundary_weight", cfg.refine.boundary_weight, "refine");
    }
    if (j.contains("io")) {
        const auto& o = j.at("io");
        detail::reject_unknown_keys(o, {"output_dir", "lattice_cutoff", "num_classes"}, "io");
        read_field(o, "output_dir", cfg.io.output_dir, "io");
        read_field(o, "lattice_cutoff", cfg.io.lattice_cutoff, "io");
        read_field(o, "num_classes", cfg.io.num_classes, "io");
    }
    cfg.refine.lattice_cutoff = cfg.io.lattice_cutoff;
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

} // namespace cuekit
