/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "vsyn/vsyn.hpp"

namespace {

using namespace vsyn;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAlarms = 3;

struct CommonOpts {
    std::string config_path;
    bool quiet = false;
};

void note(const CommonOpts& opts, const std::string& msg) {
    if (!opts.quiet) std::cerr << msg << "\n";
}

AppConfig make_config(const CommonOpts& opts) {
    AppConfig cfg;
    cfg.sync();
    if (!opts.config_path.empty()) cfg = load_config_file(opts.config_path);
    return cfg;
}

struct RunSummary {
    std::string subcommand;
    std::string input;
    double wall_seconds = 0.0;
    double fps_throughput = 0.0;
    int64_t frames = 0;
    std::vector<std::string> outputs;
    nlohmann::json extra;

    nlohmann::json to_json() const {
        nlohmann::json j{{"subcommand", subcommand},
                         {"input", input},
                         {"wall_seconds", wall_seconds},
                         {"fps_throughput", fps_throughput},
                         {"frames", frames},
                         {"outputs", outputs}};
        for (const auto& [k, v] : extra.items()) j[k] = v;
        return j;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("short write to " + path.string());
}

void write_alarms(const fs::path& path, const std::vector<AlarmEvent>& events) {
    std::string lines;
    for (const AlarmEvent& e : events) lines += e.to_json().dump() + "\n";
    write_text(path, lines);
}

nlohmann::json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad JSON in " + path.string() + ": " + e.what());
    }
}

std::optional<StreamMeta> fps_override(double fps) {
    if (fps <= 0.0) return std::nullopt;
    StreamMeta meta;
    meta.fps = fps;
    return meta;
}

int finish_alarm_command(const CommonOpts& opts, RunSummary summary,
                         const std::vector<AlarmEvent>& events, const std::string& out_path,
                         bool fail_on_alarm,
                         std::chrono::steady_clock::time_point t0) {
    write_alarms(out_path, events);
    summary.outputs.push_back(out_path);
    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary.fps_throughput =
        summary.wall_seconds > 0.0 ? static_cast<double>(summary.frames) / summary.wall_seconds : 0.0;
    summary.extra["alarms"] = events.size();
    std::cout << summary.to_json().dump() << "\n";
    note(opts, summary.subcommand + ": " + std::to_string(events.size()) + " alarm(s)");
    return fail_on_alarm && !events.empty() ? kExitAlarms : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vsyn: video synopsis, tamper forensics and tracking evaluation"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--config", common.config_path, "JSON config file");
    app.add_flag("--quiet", common.quiet, "suppress progress output on stderr");
    app.fallthrough();  // --config/--quiet may follow the subcommand

    // --- synopsize ---------------------------------------------------------
    struct {
        std::string input, out;
        double fps = 0.0;
        int cluster_size = 0;
        double min_area = -1.0;
        double bg_history = 0, bg_var = 0, bg_shadow = 0, bg_maxc = 0;
        bool sequential = false;
        bool no_labels = false;
    } syn;
    CLI::App* cmd_syn = app.add_subcommand("synopsize", "build a collision-free synopsis video");
    cmd_syn->add_option("input", syn.input, "input frame sequence directory")->required();
    cmd_syn->add_option("--out", syn.out, "output directory")->required();
    cmd_syn->add_option("--fps", syn.fps, "override fps when stream.json is absent");
    cmd_syn->add_option("--cluster-size", syn.cluster_size, "tubes scheduled together")
        ->check(CLI::Range(1, 1000000));
    cmd_syn->add_option("--min-area", syn.min_area, "min detection area, fraction of frame");
    cmd_syn->add_option("--bg-history", syn.bg_history, "background sample window");
    cmd_syn->add_option("--bg-var-threshold", syn.bg_var, "Mahalanobis^2 acceptance bound");
    cmd_syn->add_option("--bg-shadow-threshold", syn.bg_shadow,
                        "luminance ratio below which darkening is foreground");
    cmd_syn->add_option("--bg-max-components", syn.bg_maxc, "mixture components per pixel");
    cmd_syn->add_flag("--sequential", syn.sequential, "disable the parallel pipeline");
    cmd_syn->add_flag("--no-labels", syn.no_labels, "skip the timestamp labels");

    // --- forgery -----------------------------------------------------------
    struct {
        std::string input, out;
        double fps = 0.0;
        bool fail_on_alarm = false;
    } forg;
    CLI::App* cmd_forg = app.add_subcommand("forgery", "scan for inter-frame tampering");
    cmd_forg->add_option("input", forg.input, "input frame sequence directory")->required();
    cmd_forg->add_option("--out", forg.out, "alarms file (JSON lines)")->required();
    cmd_forg->add_option("--fps", forg.fps, "override fps");
    cmd_forg->add_flag("--fail-on-alarm", forg.fail_on_alarm, "exit 3 when alarms are emitted");

    // --- camera-monitor ----------------------------------------------------
    struct {
        std::string input, out;
        double fps = 0.0;
        bool fail_on_alarm = false;
    } cam;
    CLI::App* cmd_cam = app.add_subcommand("camera-monitor", "detect camera tampering");
    cmd_cam->add_option("input", cam.input, "input frame sequence directory")->required();
    cmd_cam->add_option("--out", cam.out, "alarms file (JSON lines)")->required();
    cmd_cam->add_option("--fps", cam.fps, "override fps");
    cmd_cam->add_flag("--fail-on-alarm", cam.fail_on_alarm, "exit 3 when alarms are emitted");

    // --- anomaly train/test ------------------------------------------------
    struct {
        std::string input, out, matrix;
        double fps = 0.0;
        bool fail_on_alarm = false;
    } anom;
    CLI::App* cmd_anom = app.add_subcommand("anomaly", "busyness-matrix anomaly detection");
    cmd_anom->require_subcommand(1);
    CLI::App* cmd_anom_train = cmd_anom->add_subcommand("train", "learn the busyness matrix");
    cmd_anom_train->add_option("input", anom.input, "normal-activity sequence")->required();
    cmd_anom_train->add_option("--out", anom.out, "matrix JSON file")->required();
    cmd_anom_train->add_option("--fps", anom.fps, "override fps");
    CLI::App* cmd_anom_test = cmd_anom->add_subcommand("test", "flag deviations from the matrix");
    cmd_anom_test->add_option("input", anom.input, "sequence to screen")->required();
    cmd_anom_test->add_option("--matrix", anom.matrix, "trained matrix JSON")->required();
    cmd_anom_test->add_option("--out", anom.out, "alarms file (JSON lines)")->required();
    cmd_anom_test->add_option("--fps", anom.fps, "override fps");
    cmd_anom_test->add_flag("--fail-on-alarm", anom.fail_on_alarm, "exit 3 on alarms");

    // --- trespass ----------------------------------------------------------
    struct {
        std::string input, out, zones;
        double fps = 0.0;
        bool fail_on_alarm = false;
    } tres;
    CLI::App* cmd_tres = app.add_subcommand("trespass", "alarm on motion inside zones");
    cmd_tres->add_option("input", tres.input, "input frame sequence directory")->required();
    cmd_tres->add_option("--zones", tres.zones, "polygon zones JSON")->required();
    cmd_tres->add_option("--out", tres.out, "alarms file (JSON lines)")->required();
    cmd_tres->add_option("--fps", tres.fps, "override fps");
    cmd_tres->add_flag("--fail-on-alarm", tres.fail_on_alarm, "exit 3 on alarms");

    // --- eval ---------------------------------------------------------------
    struct {
        std::string detections, annotations, out, curve;
        double iou = -1.0;
    } ev;
    CLI::App* cmd_eval = app.add_subcommand("eval", "score detections against annotations");
    cmd_eval->add_option("--detections", ev.detections, "detections JSON")->required();
    cmd_eval->add_option("--annotations", ev.annotations, "ground-truth JSON")->required();
    cmd_eval->add_option("--out", ev.out, "report JSON")->required();
    cmd_eval->add_option("--curve", ev.curve, "precision/recall curve CSV");
    cmd_eval->add_option("--iou", ev.iou, "IoU matching threshold");

    // --- synthgen (fixture regeneration; hidden) ----------------------------
    struct {
        std::string script, out, annotations, editlog;
    } gen;
    CLI::App* cmd_gen = app.add_subcommand("synthgen", "generate a synthetic scene");
    cmd_gen->group("");  // hidden
    cmd_gen->add_option("--script", gen.script, "scene script JSON")->required();
    cmd_gen->add_option("--out", gen.out, "output sequence directory")->required();
    cmd_gen->add_option("--annotations", gen.annotations, "annotations JSON to write");
    cmd_gen->add_option("--editlog", gen.editlog, "edit log JSON to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        AppConfig cfg = make_config(common);

        if (cmd_syn->parsed()) {
            if (cmd_syn->count("--bg-history")) config_set(cfg, "bg.history", syn.bg_history);
            if (cmd_syn->count("--bg-var-threshold"))
                config_set(cfg, "bg.var_threshold", syn.bg_var);
            if (cmd_syn->count("--bg-shadow-threshold"))
                config_set(cfg, "bg.shadow_threshold", syn.bg_shadow);
            if (cmd_syn->count("--bg-max-components"))
                config_set(cfg, "bg.max_components", syn.bg_maxc);
            if (syn.cluster_size > 0) config_set(cfg, "synopsis.cluster_size", syn.cluster_size);
            if (syn.min_area >= 0.0) config_set(cfg, "regions.min_area_frac", syn.min_area);
            if (syn.sequential) cfg.synopsis.parallel = false;
            if (syn.no_labels) cfg.synopsis.draw_labels = false;

            auto source = open_sequence(syn.input, fps_override(syn.fps));
            note(common, "synopsize: " + std::to_string(source->meta().frame_count) +
                             " frames from " + syn.input);

            const fs::path out_dir(syn.out);
            SequenceWriter writer(out_dir / "frames", source->meta());
            int64_t output_bytes = 0;
            const SynopsisResult result =
                run_synopsis(*source, cfg.synopsis, [&](Frame&& f) {
                    output_bytes += static_cast<int64_t>(f.pixels.size());
                    writer.push(f);
                });
            writer.finish();
            write_text(out_dir / "manifest.json", result.manifest.to_json().dump(2) + "\n");

            RunSummary summary;
            summary.subcommand = "synopsize";
            summary.input = syn.input;
            summary.frames = result.manifest.tov;
            summary.wall_seconds = result.manifest.build_seconds;
            summary.fps_throughput = result.manifest.fps_build;
            summary.outputs = {(out_dir / "frames").string(),
                               (out_dir / "manifest.json").string()};
            summary.extra = {{"tov", result.manifest.tov},
                             {"tsv", result.manifest.tsv},
                             {"fr", result.manifest.fr},
                             {"cs", result.manifest.cluster_size},
                             {"fps_build", result.manifest.fps_build},
                             {"output_pixel_bytes", output_bytes}};
            write_text(out_dir / "summary.json", summary.to_json().dump(2) + "\n");
            std::cout << "FR=" << result.manifest.fr << " FPS=" << result.manifest.fps_build
                      << " TSV=" << result.manifest.tsv << " TOV=" << result.manifest.tov
                      << "\n";
            return kExitOk;
        }

        if (cmd_forg->parsed()) {
            auto source = open_sequence(forg.input, fps_override(forg.fps));
            const std::vector<Frame> frames = read_all(*source);
            note(common, "forgery: scanning " + std::to_string(frames.size()) + " frames");
            const auto events = forgery_scan(frames, cfg.forgery);
            RunSummary summary;
            summary.subcommand = "forgery";
            summary.input = forg.input;
            summary.frames = static_cast<int64_t>(frames.size());
            return finish_alarm_command(common, summary, events, forg.out, forg.fail_on_alarm,
                                        t0);
        }

        if (cmd_cam->parsed()) {
            auto source = open_sequence(cam.input, fps_override(cam.fps));
            BackgroundModel model(cfg.bg);
            CameraTamperMonitor monitor(cfg.tamper);
            std::vector<AlarmEvent> events;
            int64_t frames = 0;
            while (auto frame = source->next()) {
                const LabelMask mask = model.apply(*frame);
                ++frames;
                if (frame->index < cfg.tamper_warmup) continue;
                if (auto ev = monitor.step(mask, frame->index)) events.push_back(*ev);
            }
            RunSummary summary;
            summary.subcommand = "camera-monitor";
            summary.input = cam.input;
            summary.frames = frames;
            return finish_alarm_command(common, summary, events, cam.out, cam.fail_on_alarm,
                                        t0);
        }

        if (cmd_anom_train->parsed()) {
            auto source = open_sequence(anom.input, fps_override(anom.fps));
            const std::vector<Frame> frames = read_all(*source);
            const BusynessMatrix matrix = busyness_train(frames, cfg.anomaly);
            write_text(anom.out, matrix.to_json().dump() + "\n");
            RunSummary summary;
            summary.subcommand = "anomaly-train";
            summary.input = anom.input;
            summary.frames = static_cast<int64_t>(frames.size());
            summary.outputs = {anom.out};
            summary.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            summary.fps_throughput = summary.wall_seconds > 0.0
                                         ? static_cast<double>(frames.size()) / summary.wall_seconds
                                         : 0.0;
            std::cout << summary.to_json().dump() << "\n";
            return kExitOk;
        }

        if (cmd_anom_test->parsed()) {
            auto source = open_sequence(anom.input, fps_override(anom.fps));
            const std::vector<Frame> frames = read_all(*source);
            const BusynessMatrix matrix = BusynessMatrix::from_json(read_json_file(anom.matrix));
            const auto events = busyness_test(frames, matrix, cfg.anomaly);
            RunSummary summary;
            summary.subcommand = "anomaly-test";
            summary.input = anom.input;
            summary.frames = static_cast<int64_t>(frames.size());
            return finish_alarm_command(common, summary, events, anom.out, anom.fail_on_alarm,
                                        t0);
        }

        if (cmd_tres->parsed()) {
            auto source = open_sequence(tres.input, fps_override(tres.fps));
            const std::vector<Polygon> zones = load_polygons_json(read_json_file(tres.zones));
            BackgroundModel model(cfg.bg);
            std::optional<TrespassMonitor> monitor;
            std::vector<AlarmEvent> events;
            int64_t frames = 0;
            while (auto frame = source->next()) {
                const LabelMask mask = model.apply(*frame);
                ++frames;
                if (!monitor)
                    monitor.emplace(zones, frame->width, frame->height, cfg.trespass);
                if (frame->index < cfg.tamper_warmup) continue;
                for (const AlarmEvent& ev : monitor->step(mask, frame->index))
                    events.push_back(ev);
            }
            RunSummary summary;
            summary.subcommand = "trespass";
            summary.input = tres.input;
            summary.frames = frames;
            return finish_alarm_command(common, summary, events, tres.out, tres.fail_on_alarm,
                                        t0);
        }

        if (cmd_eval->parsed()) {
            if (ev.iou >= 0.0) config_set(cfg, "eval.iou_threshold", ev.iou);
            const AnnotationSet dets = AnnotationSet::from_json(read_json_file(ev.detections));
            const AnnotationSet anns =
                AnnotationSet::from_json(read_json_file(ev.annotations));
            const EvalReport report = evaluate(dets, anns, cfg.eval_iou_threshold);
            write_text(ev.out, report.to_json().dump(2) + "\n");
            if (!ev.curve.empty()) write_text(ev.curve, report.curve_csv());
            std::cout << "precision=" << report.final_precision
                      << " recall=" << report.final_recall
                      << " AP=" << report.average_precision << "\n";
            return kExitOk;
        }

        if (cmd_gen->parsed()) {
            const SceneScript script = scene_script_from_json(read_json_file(gen.script));
            const GeneratedScene scene = generate(script);
            StreamMeta meta = scene.meta;
            write_sequence(gen.out, scene.frames, meta);
            if (!gen.annotations.empty())
                write_text(gen.annotations, scene.annotations.to_json().dump(2) + "\n");
            if (!gen.editlog.empty()) {
                nlohmann::json log = nlohmann::json::array();
                for (const EditRecord& r : scene.edit_log)
                    log.push_back({{"kind", r.kind},
                                   {"start", r.start},
                                   {"count", r.count},
                                   {"insert_at", r.insert_at}});
                write_text(gen.editlog, log.dump(2) + "\n");
            }
            note(common, "synthgen: wrote " + std::to_string(scene.frames.size()) +
                             " frames to " + gen.out);
            return kExitOk;
        }

        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
