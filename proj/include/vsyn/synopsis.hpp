/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "vsyn/bgmodel.hpp"
#include "vsyn/core.hpp"
#include "vsyn/regions.hpp"
#include "vsyn/tracker.hpp"
#include "vsyn/video_io.hpp"

namespace vsyn {

/// One object frame placed into a synopsis frame. The box is the original
/// spatial location, unchanged.
struct Placement {
    int64_t object_id = 0;
    std::shared_ptr<const Tube> tube;
    size_t entry_index = 0;
    BBox bbox;
    int64_t synopsis_frame_index = 0;
    int64_t original_frame_index = 0;
    int64_t original_timestamp_ms = 0;
    std::string label_text;  // original wall time, hh:mm:ss

    const ObjectFrame& source() const { return tube->frames[entry_index]; }
};

// TODO: optional mask-level collision test; box-level is conservative and
// rejects placements whose silhouettes would not actually touch.
inline bool collides(const Placement& a, const Placement& b) {
    return collides(a.bbox, b.bbox);
}

inline std::string format_hms(int64_t timestamp_ms) {
    const int64_t s = timestamp_ms / 1000;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld",
                  static_cast<long long>(s / 3600), static_cast<long long>((s / 60) % 60),
                  static_cast<long long>(s % 60));
    return buf;
}

/// FR = synopsis frame count / original frame count.
inline double frame_reduction(int64_t tsv, int64_t tov) {
    if (tov < 1) throw Error("frame_reduction: original frame count must be >= 1");
    if (tsv < 0) throw Error("frame_reduction: negative synopsis frame count");
    return static_cast<double>(tsv) / static_cast<double>(tov);
}

struct SynopsisFrameRecord {
    int64_t index = 0;
    int64_t background_orig_frame = -1;  // snapshot id: original frame it was taken at
    std::vector<Placement> placements;
};

struct SynopsisManifest {
    std::vector<SynopsisFrameRecord> frames;
    int64_t tov = 0;
    int64_t tsv = 0;
    double fr = 0.0;
    int cluster_size = 0;
    double build_seconds = 0.0;  // reported via RunSummary; see to_json
    double fps_build = 0.0;

    /// Deterministic wire format: timing is excluded so identical runs are
    /// byte-identical regardless of wall clock.
    nlohmann::json to_json() const {
        nlohmann::json jframes = nlohmann::json::array();
        for (const SynopsisFrameRecord& fr_rec : frames) {
            nlohmann::json jp = nlohmann::json::array();
            for (const Placement& p : fr_rec.placements)
                jp.push_back({{"object_id", p.object_id},
                              {"orig_frame", p.original_frame_index},
                              {"t_orig_ms", p.original_timestamp_ms},
                              {"bbox", {p.bbox.x, p.bbox.y, p.bbox.w, p.bbox.h}},
                              {"label", p.label_text}});
            jframes.push_back({{"index", fr_rec.index},
                               {"background", fr_rec.background_orig_frame},
                               {"placements", std::move(jp)}});
        }
        return {{"frames", std::move(jframes)},
                {"summary",
                 {{"tov", tov}, {"tsv", tsv}, {"fr", fr}, {"cs", cluster_size}}}};
    }
};

/// FIFO cluster scheduler: tubes enter in ascending object_id order, each
/// step sweeps the cluster by id and places every cursor frame that fits
/// without collision, then exhausted tubes make room for pending ones.
class TubeScheduler {
public:
    explicit TubeScheduler(int cluster_size) : cluster_size_(cluster_size) {
        if (cluster_size_ < 1) throw Error("TubeScheduler: cluster size must be >= 1");
    }

    /// Tubes must arrive in ascending object_id order (chronological).
    void add_tube(std::shared_ptr<const Tube> tube) {
        if (!tube || tube->frames.empty()) throw Error("TubeScheduler: empty tube");
        if (tube->object_id <= last_added_id_)
            throw Error("TubeScheduler: tubes must arrive in ascending object_id order");
        last_added_id_ = tube->object_id;
        pending_.push_back(std::move(tube));
    }

    void refill() {
        while (static_cast<int>(cluster_.size()) < cluster_size_ && !pending_.empty()) {
            cluster_.push_back({std::move(pending_.front()), 0});
            pending_.pop_front();
        }
    }

    bool has_work() const { return !cluster_.empty() || !pending_.empty(); }
    int cluster_count() const { return static_cast<int>(cluster_.size()); }
    int pending_count() const { return static_cast<int>(pending_.size()); }
    int64_t next_frame_index() const { return synopsis_frame_index_; }

    /// Earliest original timestamp still unplaced; future placements can
    /// never predate it.
    int64_t earliest_unplaced_ms() const {
        int64_t m = std::numeric_limits<int64_t>::max();
        for (const Active& a : cluster_)
            m = std::min(m, a.tube->frames[a.cursor].original_timestamp_ms);
        for (const auto& t : pending_)
            m = std::min(m, t->frames.front().original_timestamp_ms);
        return m;
    }

    /// Emits one synopsis frame's placements; empty when no tubes remain.
    std::vector<Placement> step() {
        refill();
        if (cluster_.empty()) return {};
        std::vector<Placement> placed;
        for (Active& a : cluster_) {
            const ObjectFrame& of = a.tube->frames[a.cursor];
            bool fits = true;
            for (const Placement& p : placed)
                if (collides(p.bbox, of.bbox)) {
                    fits = false;
                    break;
                }
            if (!fits) continue;
            Placement p;
            p.object_id = a.tube->object_id;
            p.tube = a.tube;
            p.entry_index = a.cursor;
            p.bbox = of.bbox;
            p.synopsis_frame_index = synopsis_frame_index_;
            p.original_frame_index = of.original_frame_index;
            p.original_timestamp_ms = of.original_timestamp_ms;
            p.label_text = format_hms(of.original_timestamp_ms);
            placed.push_back(std::move(p));
            ++a.cursor;
        }
        std::erase_if(cluster_, [](const Active& a) {
            return a.cursor >= a.tube->frames.size();
        });
        refill();
        ++synopsis_frame_index_;
        return placed;
    }

private:
    struct Active {
        std::shared_ptr<const Tube> tube;
        size_t cursor = 0;
    };

    int cluster_size_;
    std::vector<Active> cluster_;  // ascending object_id by construction
    std::deque<std::shared_ptr<const Tube>> pending_;
    int64_t last_added_id_ = 0;
    int64_t synopsis_frame_index_ = 0;
};

namespace detail {

// 5x7 glyphs for the time labels; digits then ':'.
inline const uint8_t* glyph_rows(char c) {
    static const uint8_t kGlyphs[11][7] = {
        {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
        {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
        {0x0E, 0x11, 0x01, 0x06, 0x08, 0x10, 0x1F},  // 2
        {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
        {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
        {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
        {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
        {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
        {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
        {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
        {0x00, 0x04, 0x00, 0x00, 0x04, 0x00, 0x00},  // :
    };
    if (c >= '0' && c <= '9') return kGlyphs[c - '0'];
    if (c == ':') return kGlyphs[10];
    return nullptr;
}

inline void draw_text(Frame& frame, int x, int y, const std::string& text) {
    for (size_t i = 0; i < text.size(); ++i) {
        const uint8_t* g = glyph_rows(text[i]);
        if (!g) continue;
        const int gx = x + static_cast<int>(i) * 6;
        for (int ry = 0; ry < 7; ++ry)
            for (int rx = 0; rx < 5; ++rx) {
                if (!((g[ry] >> (4 - rx)) & 1)) continue;
                const int px = gx + rx, py = y + ry;
                if (px < 0 || py < 0 || px >= frame.width || py >= frame.height) continue;
                for (int c = 0; c < frame.channels; ++c) frame.at(px, py, c) = 255;
            }
    }
}

}  // namespace detail

/// Copies the background and pastes each placement's image patch through its
/// mask at the original location; labels are drawn last, adjacent to the box.
inline Frame render_synopsis_frame(const std::vector<Placement>& placements,
                                   const Frame& background, bool draw_labels = true) {
    Frame out = background;
    for (const Placement& p : placements) {
        const ObjectFrame& of = p.source();
        if (p.bbox.x < 0 || p.bbox.y < 0 || p.bbox.right() > background.width ||
            p.bbox.bottom() > background.height)
            throw Error("render_synopsis_frame: placement outside background bounds");
        if (of.image_patch.channels != background.channels)
            throw Error("render_synopsis_frame: channel mismatch");
        for (int py = 0; py < p.bbox.h; ++py)
            for (int px = 0; px < p.bbox.w; ++px) {
                if (!of.mask_patch.at(px, py)) continue;
                for (int c = 0; c < background.channels; ++c)
                    out.at(p.bbox.x + px, p.bbox.y + py, c) = of.image_patch.at(px, py, c);
            }
    }
    if (draw_labels) {
        for (const Placement& p : placements) {
            const int text_w = static_cast<int>(p.label_text.size()) * 6 - 1;
            int ty = p.bbox.y - 9;
            if (ty < 0) ty = std::min(p.bbox.bottom() + 2, background.height - 8);
            const int tx = std::clamp(p.bbox.x, 0, std::max(0, background.width - text_w));
            detail::draw_text(out, tx, ty, p.label_text);
        }
    }
    return out;
}

struct SynopsisConfig {
    int cluster_size = 15;
    int bg_snapshot_interval = 100;
    bool parallel = true;
    bool draw_labels = true;
    BgConfig bg;
    RegionsConfig regions;
    double gate_min_px = 20.0;
    int coast_limit = 0;  // 0 = auto
};

struct SynopsisResult {
    SynopsisManifest manifest;
    std::vector<Frame> frames;  // empty when a sink consumed them
};

namespace detail {

struct BgSnapshot {
    int64_t orig_frame = 0;
    int64_t timestamp_ms = 0;
    std::shared_ptr<const Frame> image;
};

/// Producer/consumer rendezvous. The consumer's refill and snapshot waits are
/// phrased so its decisions match a fully sequential run exactly.
struct PipelineShared {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::shared_ptr<const Tube>> ready;
    std::deque<BgSnapshot> snapshots;
    // Timestamp floor for tubes the producer has not released yet; no future
    // placement can start earlier. Lets the consumer discard old snapshots.
    int64_t unreleased_floor_ms = std::numeric_limits<int64_t>::max();
    bool producer_done = false;
    int64_t frames_processed = 0;
    std::exception_ptr error;

    void fail(std::exception_ptr e) {
        std::lock_guard lk(mu);
        error = std::move(e);
        producer_done = true;
        cv.notify_all();
    }
};

inline void produce_tubes(FrameSource& source, const SynopsisConfig& cfg,
                          PipelineShared& shared) {
    BackgroundModel bg(cfg.bg);
    Tracker tracker({source.meta().fps, source.meta().width, source.meta().height,
                     cfg.gate_min_px, cfg.coast_limit});
    std::map<int64_t, Tube> reorder;  // release strictly in object_id order
    int64_t next_release = 1;
    int64_t count = 0;
    int64_t last_snapshot_frame = -1;

    auto unreleased_floor = [&](int64_t frame_ts) {
        // Held-back tubes, live tracks, and any track yet to spawn.
        int64_t floor = frame_ts;
        for (const auto& [id, tube] : reorder)
            floor = std::min(floor, tube.start_timestamp_ms);
        floor = std::min(floor, tracker.earliest_live_start_ms());
        return floor;
    };

    auto release_ready = [&](bool all, int64_t floor) {
        std::lock_guard lk(shared.mu);
        if (all) {
            for (auto& [id, tube] : reorder)
                shared.ready.push_back(std::make_shared<const Tube>(std::move(tube)));
            reorder.clear();
        } else {
            while (!reorder.empty() && reorder.begin()->first == next_release) {
                shared.ready.push_back(
                    std::make_shared<const Tube>(std::move(reorder.begin()->second)));
                reorder.erase(reorder.begin());
                ++next_release;
            }
        }
        shared.unreleased_floor_ms = floor;
        shared.cv.notify_all();
    };

    while (auto frame = source.next()) {
        const LabelMask mask = bg.apply(*frame);
        const Mask cleaned = clean_mask(mask.foreground(), cfg.regions);
        const std::vector<Detection> dets = extract_regions(cleaned, *frame, cfg.regions);
        for (Tube& t : tracker.step(frame->index, frame->timestamp_ms, dets))
            reorder.emplace(t.object_id, std::move(t));
        release_ready(false, unreleased_floor(frame->timestamp_ms));

        ++count;
        if (count % cfg.bg_snapshot_interval == 0) {
            std::lock_guard lk(shared.mu);
            shared.snapshots.push_back(
                {frame->index, frame->timestamp_ms,
                 std::make_shared<const Frame>(bg.snapshot())});
            last_snapshot_frame = frame->index;
            shared.frames_processed = count;
            shared.cv.notify_all();
        } else {
            std::lock_guard lk(shared.mu);
            shared.frames_processed = count;
        }
    }

    for (Tube& t : tracker.finish()) reorder.emplace(t.object_id, std::move(t));
    if (count > 0 && last_snapshot_frame != count - 1) {
        std::lock_guard lk(shared.mu);
        shared.snapshots.push_back({count - 1, timestamp_for(count - 1, source.meta().fps),
                                    std::make_shared<const Frame>(bg.snapshot())});
    }
    release_ready(true, std::numeric_limits<int64_t>::max());
    {
        std::lock_guard lk(shared.mu);
        shared.producer_done = true;
        shared.cv.notify_all();
    }
}

inline void consume_tubes(const SynopsisConfig& cfg, PipelineShared& shared,
                          SynopsisManifest& manifest,
                          const std::function<void(Frame&&)>& sink, double fps) {
    TubeScheduler sched(cfg.cluster_size);
    while (true) {
        {
            std::unique_lock lk(shared.mu);
            // Fill the cluster up to CS before placing; a sequential run has
            // every tube available, so the concurrent run must wait rather
            // than schedule a smaller cluster.
            while (sched.cluster_count() + sched.pending_count() < cfg.cluster_size) {
                shared.cv.wait(lk, [&] {
                    return shared.error || !shared.ready.empty() || shared.producer_done;
                });
                if (shared.error) std::rethrow_exception(shared.error);
                if (shared.ready.empty() && shared.producer_done) break;
                sched.add_tube(std::move(shared.ready.front()));
                shared.ready.pop_front();
            }
        }
        if (!sched.has_work()) {
            std::lock_guard lk(shared.mu);
            if (shared.producer_done && shared.ready.empty()) break;
            continue;
        }

        const int64_t syn_index = sched.next_frame_index();
        std::vector<Placement> placements = sched.step();
        if (placements.empty()) continue;

        int64_t t_min = placements.front().original_timestamp_ms;
        for (const Placement& p : placements)
            t_min = std::min(t_min, p.original_timestamp_ms);

        std::shared_ptr<const Frame> background;
        int64_t background_frame = -1;
        {
            std::unique_lock lk(shared.mu);
            shared.cv.wait(lk, [&] {
                return shared.error || shared.producer_done ||
                       (!shared.snapshots.empty() &&
                        shared.snapshots.back().timestamp_ms >= t_min);
            });
            if (shared.error) std::rethrow_exception(shared.error);
            if (shared.snapshots.empty())
                throw Error("synopsis: no background snapshot available");
            const BgSnapshot* pick = &shared.snapshots.front();
            for (const BgSnapshot& s : shared.snapshots) {
                if (s.timestamp_ms <= t_min) pick = &s;
                else break;
            }
            background = pick->image;
            background_frame = pick->orig_frame;

            // Snapshots no future placement can select are dead weight: keep
            // only the newest one at or below the placement-time floor.
            int64_t bound = std::min(shared.unreleased_floor_ms, sched.earliest_unplaced_ms());
            for (const auto& t : shared.ready)
                bound = std::min(bound, t->frames.front().original_timestamp_ms);
            while (shared.snapshots.size() >= 2 &&
                   shared.snapshots[1].timestamp_ms <= bound)
                shared.snapshots.pop_front();
        }

        SynopsisFrameRecord rec;
        rec.index = syn_index;
        rec.background_orig_frame = background_frame;
        rec.placements = placements;
        manifest.frames.push_back(std::move(rec));

        Frame rendered = render_synopsis_frame(placements, *background, cfg.draw_labels);
        rendered.index = syn_index;
        rendered.timestamp_ms = timestamp_for(syn_index, fps);
        sink(std::move(rendered));
    }
}

}  // namespace detail

/// End-to-end pipeline: background model -> regions -> tracker -> scheduler
/// -> renderer. Tube generation and rearrangement run in parallel when
/// cfg.parallel; output is identical either way.
inline SynopsisResult run_synopsis(FrameSource& source, const SynopsisConfig& cfg,
                                   const std::function<void(Frame&&)>& sink = nullptr) {
    if (cfg.cluster_size < 1) throw Error("run_synopsis: cluster size must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    const double fps = source.meta().fps;

    SynopsisResult result;
    auto deliver = sink ? sink : std::function<void(Frame&&)>([&](Frame&& f) {
        result.frames.push_back(std::move(f));
    });

    detail::PipelineShared shared;
    if (cfg.parallel) {
        std::thread producer([&] {
            try {
                detail::produce_tubes(source, cfg, shared);
            } catch (...) {
                shared.fail(std::current_exception());
            }
        });
        try {
            detail::consume_tubes(cfg, shared, result.manifest, deliver, fps);
        } catch (...) {
            producer.join();
            throw;
        }
        producer.join();
    } else {
        detail::produce_tubes(source, cfg, shared);
        detail::consume_tubes(cfg, shared, result.manifest, deliver, fps);
    }

    SynopsisManifest& m = result.manifest;
    m.tov = shared.frames_processed;
    m.tsv = static_cast<int64_t>(m.frames.size());
    m.fr = m.tov > 0 ? frame_reduction(m.tsv, m.tov) : 0.0;
    m.cluster_size = cfg.cluster_size;
    m.build_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.fps_build = m.build_seconds > 0.0 ? static_cast<double>(m.tov) / m.build_seconds : 0.0;
    return result;
}

}  // namespace vsyn
