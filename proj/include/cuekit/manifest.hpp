#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cuekit/errors.hpp"

namespace cuekit {

/// One image's input files and labels. Paths are resolved relative to the
/// manifest file's directory at load time; resolvability is checked when a
/// stage actually opens them.
struct ManifestRecord {
    std::string image_id;
    std::string image;
    std::string activations;      // (K,H,W) float32 npy; optional for mask-only eval
    std::string features;         // (H,W) or (C,H,W) float32 npy, optional
    std::string activations_gray; // optional second classifier branch
    std::string features_gray;    // optional
    std::string gt_mask;          // optional, VOC-palette PNG
    std::vector<int> present;     // foreground class indices in the image
    std::vector<int> predicted;   // optional classifier prediction for amend
    bool has_predicted = false;
};

struct Manifest {
    std::vector<ManifestRecord> records;
};

inline Manifest parse_manifest(const nlohmann::json& j, const std::string& base_dir = "") {
    if (!j.is_array()) throw ConfigError("manifest: top level must be a JSON array");

    auto resolve = [&](std::string p) -> std::string {
        if (p.empty() || base_dir.empty()) return p;
        std::filesystem::path fp(p);
        if (fp.is_absolute()) return p;
        return (std::filesystem::path(base_dir) / fp).string();
    };

    Manifest m;
    std::set<std::string> seen;
    for (const auto& rec : j) {
        if (!rec.is_object()) throw ConfigError("manifest: records must be JSON objects");
        static const std::set<std::string> known = {
            "image_id", "image",    "activations", "features",  "activations_gray",
            "features_gray", "present", "gt_mask",  "predicted"};
        for (const auto& [key, _] : rec.items())
            if (!known.contains(key)) throw ConfigError("manifest: unknown key '" + key + "'");

        ManifestRecord r;
        try {
            r.image_id = rec.at("image_id").get<std::string>();
            r.image = resolve(rec.at("image").get<std::string>());
            if (rec.contains("activations")) r.activations = resolve(rec.at("activations").get<std::string>());
            if (rec.contains("features")) r.features = resolve(rec.at("features").get<std::string>());
            if (rec.contains("activations_gray"))
                r.activations_gray = resolve(rec.at("activations_gray").get<std::string>());
            if (rec.contains("features_gray")) r.features_gray = resolve(rec.at("features_gray").get<std::string>());
            if (rec.contains("gt_mask")) r.gt_mask = resolve(rec.at("gt_mask").get<std::string>());
            if (rec.contains("present")) r.present = rec.at("present").get<std::vector<int>>();
            if (rec.contains("predicted")) {
                r.predicted = rec.at("predicted").get<std::vector<int>>();
                r.has_predicted = true;
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("manifest: ") + e.what());
        }
        if (r.image_id.empty()) throw ConfigError("manifest: empty image_id");
        if (!seen.insert(r.image_id).second)
            throw ConfigError("manifest: duplicate image_id '" + r.image_id + "'");
        m.records.push_back(std::move(r));
    }
    return m;
}

inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_manifest(j, std::filesystem::path(path).parent_path().string());
}

/// Labels manifest: {"image_id": [class indices], ...}.
inline std::map<std::string, std::vector<int>> load_labels_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open labels manifest " + path);
    nlohmann::json j;
    try {
        in >> j;
        if (!j.is_object()) throw ConfigError(path + ": labels manifest must be a JSON object");
        std::map<std::string, std::vector<int>> out;
        for (const auto& [key, val] : j.items()) out[key] = val.get<std::vector<int>>();
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

} // namespace cuekit
