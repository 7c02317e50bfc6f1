/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#pragma once

#include <fstream>
#include <functional>

#include <json.hpp>

#include "vsyn/bgmodel.hpp"
#include "vsyn/flow.hpp"
#include "vsyn/forensics.hpp"
#include "vsyn/regions.hpp"
#include "vsyn/synopsis.hpp"

namespace vsyn {

/// Every tunable in one place. File values (--config, JSON) override the
/// defaults; CLI flags override the file. Unknown keys and out-of-range
/// values are rejected.
struct AppConfig {
    BgConfig bg;
    RegionsConfig regions;
    double track_gate_min_px = 20.0;
    int track_coast_limit = 0;  // 0 = auto (confirmation threshold)
    FlowConfig flow;
    SynopsisConfig synopsis;
    ForgeryConfig forgery;
    TamperConfig tamper;
    int tamper_warmup = 100;  // frames ignored while the model trains
    AnomalyConfig anomaly;
    TrespassConfig trespass;
    double eval_iou_threshold = 0.5;

    /// Pushes the shared sub-configs into the composed ones.
    void sync() {
        synopsis.bg = bg;
        synopsis.regions = regions;
        synopsis.gate_min_px = track_gate_min_px;
        synopsis.coast_limit = track_coast_limit;
        forgery.flow = flow;
        anomaly.flow = flow;
    }
};

namespace detail {

struct ConfigKey {
    const char* path;
    double min;
    double max;
    std::function<void(AppConfig&, const nlohmann::json&)> set;
};

inline const std::vector<ConfigKey>& config_schema() {
    auto num = [](auto member) {
        return [member](AppConfig& c, const nlohmann::json& v) { c.*member = v; };
    };
    static const std::vector<ConfigKey> keys = {
        {"bg.history", 1, 1e6,
         [](AppConfig& c, const nlohmann::json& v) { c.bg.history = v; }},
        {"bg.var_threshold", 1e-6, 1e6,
         [](AppConfig& c, const nlohmann::json& v) { c.bg.var_threshold = v; }},
        {"bg.shadow_threshold", 0.0, 0.999,
         [](AppConfig& c, const nlohmann::json& v) { c.bg.shadow_threshold = v; }},
        {"bg.max_components", 1, 8,
         [](AppConfig& c, const nlohmann::json& v) { c.bg.max_components = v; }},
        {"regions.min_area_frac", 0.0, 1.0,
         [](AppConfig& c, const nlohmann::json& v) { c.regions.min_area_frac = v; }},
        {"regions.dilate_iters", 0, 16,
         [](AppConfig& c, const nlohmann::json& v) { c.regions.dilate_iters = v; }},
        {"regions.erode_iters", 0, 16,
         [](AppConfig& c, const nlohmann::json& v) { c.regions.erode_iters = v; }},
        {"regions.kernel", 1, 31,
         [](AppConfig& c, const nlohmann::json& v) { c.regions.kernel = v; }},
        {"track.gate_min_px", 0.0, 1e4, num(&AppConfig::track_gate_min_px)},
        {"track.coast_limit", 0, 1e4, num(&AppConfig::track_coast_limit)},
        {"flow.levels", 1, 8,
         [](AppConfig& c, const nlohmann::json& v) { c.flow.levels = v; }},
        {"flow.search_px", 1, 64,
         [](AppConfig& c, const nlohmann::json& v) { c.flow.search_px = v; }},
        {"flow.bins", 1, 360,
         [](AppConfig& c, const nlohmann::json& v) { c.flow.bins = v; }},
        {"synopsis.cluster_size", 1, 1e6,
         [](AppConfig& c, const nlohmann::json& v) { c.synopsis.cluster_size = v; }},
        {"synopsis.bg_snapshot_interval", 1, 1e6,
         [](AppConfig& c, const nlohmann::json& v) { c.synopsis.bg_snapshot_interval = v; }},
        {"synopsis.parallel", 0, 1,
         [](AppConfig& c, const nlohmann::json& v) { c.synopsis.parallel = v.get<bool>(); }},
        {"synopsis.draw_labels", 0, 1,
         [](AppConfig& c, const nlohmann::json& v) { c.synopsis.draw_labels = v.get<bool>(); }},
        {"forgery.window", 4, 1e5,
         [](AppConfig& c, const nlohmann::json& v) { c.forgery.window = v; }},
        {"forgery.k", 0.0, 1e3,
         [](AppConfig& c, const nlohmann::json& v) { c.forgery.k = v; }},
        {"forgery.dup_eps", 0.0, 255.0,
         [](AppConfig& c, const nlohmann::json& v) { c.forgery.dup_eps = v; }},
        {"forgery.min_dup", 1, 1e5,
         [](AppConfig& c, const nlohmann::json& v) { c.forgery.min_dup = v; }},
        {"forgery.rho", 0.0, 1.0,
         [](AppConfig& c, const nlohmann::json& v) { c.forgery.rho = v; }},
        {"forgery.dup_window", 2, 1e4,
         [](AppConfig& c, const nlohmann::json& v) { c.forgery.dup_window = v; }},
        {"tamper.tau", 0.0, 1.0,
         [](AppConfig& c, const nlohmann::json& v) { c.tamper.tau = v; }},
        {"tamper.persistence", 1, 1e4,
         [](AppConfig& c, const nlohmann::json& v) { c.tamper.persistence = v; }},
        {"tamper.warmup", 0, 1e6, num(&AppConfig::tamper_warmup)},
        {"anomaly.margin", 0.0, 1e3,
         [](AppConfig& c, const nlohmann::json& v) { c.anomaly.margin = v; }},
        {"anomaly.hits", 1, 1e4,
         [](AppConfig& c, const nlohmann::json& v) { c.anomaly.hits = v; }},
        {"anomaly.max_corners", 1, 1e5,
         [](AppConfig& c, const nlohmann::json& v) { c.anomaly.max_corners = v; }},
        {"trespass.area_frac", 0.0, 1.0,
         [](AppConfig& c, const nlohmann::json& v) { c.trespass.area_frac = v; }},
        {"trespass.persistence", 1, 1e4,
         [](AppConfig& c, const nlohmann::json& v) { c.trespass.persistence = v; }},
        {"eval.iou_threshold", 0.0, 1.0, num(&AppConfig::eval_iou_threshold)},
    };
    return keys;
}

}  // namespace detail

/// Applies one dotted key. Throws on unknown keys or out-of-range values.
inline void config_set(AppConfig& cfg, const std::string& path, const nlohmann::json& value) {
    const bool flag_key = path == "synopsis.parallel" || path == "synopsis.draw_labels";
    for (const detail::ConfigKey& k : detail::config_schema()) {
        if (path != k.path) continue;
        if (flag_key) {
            if (!value.is_boolean()) throw Error("config: " + path + " must be a boolean");
        } else if (value.is_number()) {
            const double v = value.get<double>();
            if (v < k.min || v > k.max)
                throw Error("config: " + path + " out of range [" + std::to_string(k.min) +
                            ", " + std::to_string(k.max) + "]");
        } else {
            throw Error("config: " + path + " must be a number");
        }
        k.set(cfg, value);
        cfg.sync();
        return;
    }
    throw Error("config: unknown key '" + path + "'");
}

/// Nested JSON document, e.g. {"bg": {"history": 100}, "synopsis": {...}}.
inline void apply_config_json(AppConfig& cfg, const nlohmann::json& doc,
                              const std::string& prefix = "") {
    if (!doc.is_object()) throw Error("config: expected a JSON object at '" + prefix + "'");
    for (const auto& [key, value] : doc.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) apply_config_json(cfg, value, path);
        else config_set(cfg, path, value);
    }
}

inline AppConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config file: bad JSON: ") + e.what());
    }
    AppConfig cfg;
    cfg.sync();
    apply_config_json(cfg, j);
    return cfg;
}

/// Polygon zones file: [{"id": "gate", "points": [[x,y], ...]}, ...]
inline std::vector<Polygon> load_polygons_json(const nlohmann::json& j) {
    std::vector<Polygon> polys;
    try {
        for (const auto& jp : j) {
            Polygon p;
            p.id = jp.value("id", std::string("zone") + std::to_string(polys.size()));
            for (const auto& pt : jp.at("points"))
                p.points.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
            polys.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("polygons: bad JSON: ") + e.what());
    }
    return polys;
}

}  // namespace vsyn
