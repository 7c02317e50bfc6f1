/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#pragma once

#include <algorithm>

#include <json.hpp>

#include "vsyn/core.hpp"
#include "vsyn/eval.hpp"
#include "vsyn/tracker.hpp"

namespace vsyn {

// Deterministic synthetic scenes with exact ground truth: moving textured
// rectangles over a constant, textured or scrolling background, plus scripted
// edits (delete / duplicate / insert) for tamper fixtures. Everything derives
// from the seed; the same script generates byte-identical output anywhere.

struct AgentSpec {
    int id = 0;             // 0 = auto (1-based position in the list)
    int width = 16, height = 16;
    double start_x = 0.0, start_y = 0.0;
    double vel_x = 0.0, vel_y = 0.0;  // pixels/frame
    int64_t start_frame = 0;
    int64_t end_frame = -1;  // inclusive; -1 = last frame
    int fill = -1;           // -1 = per-agent random texture, else flat value
};

struct BackgroundSpec {
    std::string kind = "constant";  // "constant" | "textured"
    int value = 96;
    double noise_sigma = 0.0;
    double scroll_x = 0.0, scroll_y = 0.0;  // wrapping pan, pixels/frame
};

struct EditSpec {
    std::string kind;  // "delete" | "duplicate" | "insert"
    int64_t start = 0;
    int64_t count = 0;
    int64_t insert_at = 0;  // duplicate only
    int value = 128;        // insert only: flat frame value
};

struct SceneScript {
    int64_t frame_count = 100;
    double fps = 18.0;
    int width = 320, height = 240;
    int channels = 1;
    uint64_t seed = 1;
    BackgroundSpec background;
    std::vector<AgentSpec> agents;
    std::vector<EditSpec> edits;
};

struct EditRecord {
    std::string kind;
    int64_t start = 0;   // position in the sequence at application time
    int64_t count = 0;
    int64_t insert_at = -1;
};

struct GeneratedScene {
    std::vector<Frame> frames;
    StreamMeta meta;
    AnnotationSet annotations;   // pre-edit timeline
    std::vector<Tube> tubes;     // ground-truth tubes, pre-edit timeline
    std::vector<EditRecord> edit_log;
};

namespace detail {

inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    Rng r(seed ^ (0xA24BAED4963EE407ULL * (salt + 1)));
    return r.next_u64();
}

inline void validate_script(const SceneScript& s) {
    if (s.frame_count < 0 || s.fps <= 0.0 || s.width <= 0 || s.height <= 0 ||
        (s.channels != 1 && s.channels != 3))
        throw Error("scene script: bad stream parameters");
    if (s.background.kind != "constant" && s.background.kind != "textured")
        throw Error("scene script: unknown background kind '" + s.background.kind + "'");
    for (const AgentSpec& a : s.agents) {
        if (a.width < 1 || a.height < 1) throw Error("scene script: agent size must be >= 1");
        const int64_t last = a.end_frame < 0 ? s.frame_count - 1 : a.end_frame;
        if (a.start_frame < 0 || last >= s.frame_count || a.start_frame > last)
            throw Error("scene script: agent lifetime outside stream");
        for (int64_t f = a.start_frame; f <= last; ++f) {
            const int64_t k = f - a.start_frame;
            const int x = static_cast<int>(std::lround(a.start_x + a.vel_x * k));
            const int y = static_cast<int>(std::lround(a.start_y + a.vel_y * k));
            if (x < 0 || y < 0 || x + a.width > s.width || y + a.height > s.height)
                throw Error("scene script: agent leaves frame bounds at frame " +
                            std::to_string(f));
        }
    }
}

inline BBox agent_bbox(const AgentSpec& a, int64_t frame) {
    const int64_t k = frame - a.start_frame;
    return {static_cast<int>(std::lround(a.start_x + a.vel_x * k)),
            static_cast<int>(std::lround(a.start_y + a.vel_y * k)), a.width, a.height};
}

}  // namespace detail

inline GeneratedScene generate(const SceneScript& script) {
    detail::validate_script(script);
    const int W = script.width, H = script.height, C = script.channels;

    // Static background base (texture fixed by the seed).
    std::vector<uint8_t> base(static_cast<size_t>(W) * H * C);
    {
        Rng rng(detail::mix_seed(script.seed, 0xB6));
        for (size_t i = 0; i < base.size(); ++i) {
            double v = script.background.value;
            if (script.background.kind == "textured") v += (rng.next_double() - 0.5) * 80.0;
            base[i] = clamp_u8(v);
        }
    }

    // Per-agent textures.
    std::vector<std::vector<uint8_t>> textures;
    for (size_t i = 0; i < script.agents.size(); ++i) {
        const AgentSpec& a = script.agents[i];
        std::vector<uint8_t> tex(static_cast<size_t>(a.width) * a.height * C);
        Rng rng(detail::mix_seed(script.seed, 0x5A0 + i));
        for (size_t j = 0; j < tex.size(); ++j)
            tex[j] = a.fill >= 0 ? static_cast<uint8_t>(a.fill)
                                 : clamp_u8(100.0 + rng.next_double() * 155.0);
        textures.push_back(std::move(tex));
    }

    GeneratedScene scene;
    scene.meta.fps = script.fps;
    scene.meta.width = W;
    scene.meta.height = H;
    scene.meta.source_id = "synthgen:" + std::to_string(script.seed);

    std::vector<std::vector<ObjectFrame>> tube_frames(script.agents.size());

    for (int64_t f = 0; f < script.frame_count; ++f) {
        Frame frame = make_frame(W, H, C);
        frame.index = f;
        frame.timestamp_ms = timestamp_for(f, script.fps);

        // Background (with wrapping scroll).
        const int off_x = static_cast<int>(std::llround(script.background.scroll_x * f));
        const int off_y = static_cast<int>(std::llround(script.background.scroll_y * f));
        for (int y = 0; y < H; ++y) {
            const int sy = ((y + off_y) % H + H) % H;
            for (int x = 0; x < W; ++x) {
                const int sx = ((x + off_x) % W + W) % W;
                for (int c = 0; c < C; ++c)
                    frame.at(x, y, c) = base[(static_cast<size_t>(sy) * W + sx) * C + c];
            }
        }

        // Agents, in list order (later agents draw on top).
        std::vector<GtBox>* ann = nullptr;
        for (size_t i = 0; i < script.agents.size(); ++i) {
            const AgentSpec& a = script.agents[i];
            const int64_t last = a.end_frame < 0 ? script.frame_count - 1 : a.end_frame;
            if (f < a.start_frame || f > last) continue;
            const BBox box = detail::agent_bbox(a, f);
            for (int y = 0; y < box.h; ++y)
                for (int x = 0; x < box.w; ++x)
                    for (int c = 0; c < C; ++c)
                        frame.at(box.x + x, box.y + y, c) =
                            textures[i][(static_cast<size_t>(y) * box.w + x) * C + c];
            if (!ann) ann = &scene.annotations.frames[f];
            ann->push_back({a.id > 0 ? a.id : static_cast<int64_t>(i) + 1, box});
        }

        // Per-frame sensor noise, seeded by frame index.
        if (script.background.noise_sigma > 0.0) {
            Rng rng(detail::mix_seed(script.seed, 0x10000 + static_cast<uint64_t>(f)));
            for (size_t i = 0; i < frame.pixels.size(); ++i)
                frame.pixels[i] = clamp_u8(frame.pixels[i] +
                                           rng.next_gaussian() * script.background.noise_sigma);
        }

        // Ground-truth tube entries crop the finished frame.
        for (size_t i = 0; i < script.agents.size(); ++i) {
            const AgentSpec& a = script.agents[i];
            const int64_t last = a.end_frame < 0 ? script.frame_count - 1 : a.end_frame;
            if (f < a.start_frame || f > last) continue;
            const BBox box = detail::agent_bbox(a, f);
            ObjectFrame of;
            of.original_frame_index = f;
            of.original_timestamp_ms = frame.timestamp_ms;
            of.bbox = box;
            of.mask_patch = make_mask(box.w, box.h, 1);
            of.image_patch = make_frame(box.w, box.h, C);
            for (int y = 0; y < box.h; ++y)
                for (int x = 0; x < box.w; ++x)
                    for (int c = 0; c < C; ++c)
                        of.image_patch.at(x, y, c) = frame.at(box.x + x, box.y + y, c);
            tube_frames[i].push_back(std::move(of));
        }

        scene.frames.push_back(std::move(frame));
    }

    // Ground-truth tubes in chronological order (ids follow appearance).
    std::vector<size_t> order(script.agents.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return script.agents[a].start_frame < script.agents[b].start_frame;
    });
    int64_t next_id = 1;
    for (size_t i : order) {
        if (tube_frames[i].empty()) continue;
        Tube tube;
        tube.object_id = next_id++;
        tube.start_timestamp_ms = tube_frames[i].front().original_timestamp_ms;
        tube.frames = std::move(tube_frames[i]);
        scene.tubes.push_back(std::move(tube));
    }

    // Scripted edits, applied in order to the current sequence.
    for (const EditSpec& e : script.edits) {
        const int64_t n = static_cast<int64_t>(scene.frames.size());
        if (e.kind == "delete") {
            if (e.start < 0 || e.count < 0 || e.start + e.count > n)
                throw Error("scene script: delete range out of bounds");
            scene.frames.erase(scene.frames.begin() + e.start,
                               scene.frames.begin() + e.start + e.count);
            scene.edit_log.push_back({"delete", e.start, e.count, -1});
        } else if (e.kind == "duplicate") {
            if (e.start < 0 || e.count < 0 || e.start + e.count > n || e.insert_at < 0 ||
                e.insert_at > n)
                throw Error("scene script: duplicate range out of bounds");
            std::vector<Frame> copy(scene.frames.begin() + e.start,
                                    scene.frames.begin() + e.start + e.count);
            scene.frames.insert(scene.frames.begin() + e.insert_at,
                                std::make_move_iterator(copy.begin()),
                                std::make_move_iterator(copy.end()));
            scene.edit_log.push_back({"duplicate", e.start, e.count, e.insert_at});
        } else if (e.kind == "insert") {
            if (e.start < 0 || e.start > n || e.count < 0)
                throw Error("scene script: insert position out of bounds");
            std::vector<Frame> extra(static_cast<size_t>(e.count),
                                     make_frame(W, H, C, static_cast<uint8_t>(e.value)));
            scene.frames.insert(scene.frames.begin() + e.start,
                                std::make_move_iterator(extra.begin()),
                                std::make_move_iterator(extra.end()));
            scene.edit_log.push_back({"insert", e.start, e.count, -1});
        } else {
            throw Error("scene script: unknown edit kind '" + e.kind + "'");
        }
    }

    // Edited output pretends continuity: reindex and restamp.
    for (size_t i = 0; i < scene.frames.size(); ++i) {
        scene.frames[i].index = static_cast<int64_t>(i);
        scene.frames[i].timestamp_ms = timestamp_for(static_cast<int64_t>(i), script.fps);
    }
    scene.meta.frame_count = static_cast<int64_t>(scene.frames.size());
    return scene;
}

inline SceneScript scene_script_from_json(const nlohmann::json& j) {
    static const char* kTop[] = {"frames", "fps", "width", "height", "channels",
                                 "seed",   "background", "agents", "edits"};
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* k : kTop) known |= key == k;
        if (!known) throw Error("scene script: unknown key '" + key + "'");
    }
    SceneScript s;
    try {
        s.frame_count = j.value("frames", s.frame_count);
        s.fps = j.value("fps", s.fps);
        s.width = j.value("width", s.width);
        s.height = j.value("height", s.height);
        s.channels = j.value("channels", s.channels);
        s.seed = j.value("seed", s.seed);
        if (j.contains("background")) {
            const auto& b = j.at("background");
            s.background.kind = b.value("kind", s.background.kind);
            s.background.value = b.value("value", s.background.value);
            s.background.noise_sigma = b.value("noise_sigma", s.background.noise_sigma);
            if (b.contains("scroll")) {
                s.background.scroll_x = b.at("scroll").at(0).get<double>();
                s.background.scroll_y = b.at("scroll").at(1).get<double>();
            }
        }
        for (const auto& ja : j.value("agents", nlohmann::json::array())) {
            AgentSpec a;
            a.id = ja.value("id", 0);
            a.width = ja.at("size").at(0).get<int>();
            a.height = ja.at("size").at(1).get<int>();
            a.start_x = ja.at("start").at(0).get<double>();
            a.start_y = ja.at("start").at(1).get<double>();
            if (ja.contains("velocity")) {
                a.vel_x = ja.at("velocity").at(0).get<double>();
                a.vel_y = ja.at("velocity").at(1).get<double>();
            }
            a.start_frame = ja.value("start_frame", static_cast<int64_t>(0));
            a.end_frame = ja.value("end_frame", static_cast<int64_t>(-1));
            a.fill = ja.value("fill", -1);
            s.agents.push_back(a);
        }
        for (const auto& je : j.value("edits", nlohmann::json::array())) {
            EditSpec e;
            e.kind = je.at("kind").get<std::string>();
            e.start = je.at("start").get<int64_t>();
            e.count = je.value("count", static_cast<int64_t>(1));
            e.insert_at = je.value("insert_at", static_cast<int64_t>(0));
            e.value = je.value("value", 128);
            s.edits.push_back(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("scene script: bad JSON: ") + e.what());
    }
    return s;
}

}  // namespace vsyn
