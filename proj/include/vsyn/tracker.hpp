/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#pragma once

#include <algorithm>
#include <deque>
#include <limits>
#include <span>

#include "vsyn/core.hpp"
#include "vsyn/regions.hpp"

namespace vsyn {

/// One per-frame element of a tube. Coasted entries carry predicted boxes
/// and repeat the last real patches.
struct ObjectFrame {
    int64_t original_frame_index = 0;
    int64_t original_timestamp_ms = 0;
    BBox bbox;
    Frame image_patch;
    Mask mask_patch;
    bool predicted = false;
};

/// A confirmed object track, finalized: the unit the scheduler consumes.
struct Tube {
    int64_t object_id = 0;  // chronological confirmation order, 1-based
    std::vector<ObjectFrame> frames;
    int64_t start_timestamp_ms = 0;

    int64_t length() const { return static_cast<int64_t>(frames.size()); }
};

/// Minimum consecutive tracked frames before an object earns an id:
/// N = framerate * 0.5, never below 1.
inline int confirmation_threshold(double fps) {
    if (fps <= 0.0) throw Error("confirmation_threshold: fps must be positive");
    return std::max<int>(1, static_cast<int>(std::lround(fps * 0.5)));
}

/// Weighted center displacement from the track's center history C[0..i].
/// For i <= 10 recent differences are weighted by recency over the whole
/// history; past that, a fixed 10-frame window applies. Both coordinates are
/// independent. Returns the displacement D; the prediction is C[i] + D.
inline PointF predict_displacement(std::span<const PointF> centers) {
    const size_t count = centers.size();
    if (count <= 1) return {0.0, 0.0};
    const size_t i = count - 1;  // index of the newest center
    PointF d{0.0, 0.0};
    if (i <= 10) {
        double wsum = 0.0;
        for (size_t n = 0; n + 1 <= i; ++n) {
            const double w = static_cast<double>(n + 1);
            d.x += (centers[n + 1].x - centers[n].x) * w;
            d.y += (centers[n + 1].y - centers[n].y) * w;
            wsum += w;
        }
        d.x /= wsum;
        d.y /= wsum;
    } else {
        for (size_t n = 1; n <= 10; ++n) {
            const double w = static_cast<double>(10 - n) / 45.0;
            d.x += (centers[i].x - centers[i - n].x) * w;
            d.y += (centers[i].y - centers[i - n].y) * w;
        }
    }
    return d;
}

inline PointF predict_center(std::span<const PointF> centers) {
    if (centers.empty()) throw Error("predict_center: no centers");
    const PointF d = predict_displacement(centers);
    return {centers.back().x + d.x, centers.back().y + d.y};
}

/// Result of one-to-one greedy gating between predictions and detections.
struct Assignment {
    std::vector<std::pair<int, int>> matches;  // (track_idx, det_idx)
    std::vector<int> unmatched_tracks;
    std::vector<int> unmatched_detections;
};

/// Greedy ascending-distance matching. Pairs beyond their track's gate are
/// not candidates. Ties break on track rank (object_id for confirmed tracks,
/// then candidate creation order) and then detection index.
inline Assignment associate(const std::vector<PointF>& predicted,
                            const std::vector<double>& gates,
                            const std::vector<int64_t>& ranks,
                            const std::vector<PointF>& det_centers) {
    struct Cand {
        double dist;
        int64_t rank;
        int track;
        int det;
    };
    std::vector<Cand> cands;
    for (int t = 0; t < static_cast<int>(predicted.size()); ++t)
        for (int d = 0; d < static_cast<int>(det_centers.size()); ++d) {
            const double dx = predicted[t].x - det_centers[d].x;
            const double dy = predicted[t].y - det_centers[d].y;
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (dist <= gates[t]) cands.push_back({dist, ranks[t], t, d});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.rank != b.rank) return a.rank < b.rank;
        return a.det < b.det;
    });

    Assignment out;
    std::vector<char> track_used(predicted.size(), 0), det_used(det_centers.size(), 0);
    for (const Cand& c : cands) {
        if (track_used[c.track] || det_used[c.det]) continue;
        track_used[c.track] = 1;
        det_used[c.det] = 1;
        out.matches.emplace_back(c.track, c.det);
    }
    for (int t = 0; t < static_cast<int>(predicted.size()); ++t)
        if (!track_used[t]) out.unmatched_tracks.push_back(t);
    for (int d = 0; d < static_cast<int>(det_centers.size()); ++d)
        if (!det_used[d]) out.unmatched_detections.push_back(d);
    return out;
}

struct TrackerConfig {
    double fps = 18.0;
    int frame_width = 0;   // for clamping coasted boxes
    int frame_height = 0;
    double gate_min_px = 20.0;
    int coast_limit = 0;  // 0 = auto: the confirmation threshold N
};

/// Assembles detections into tubes: predict, gate, greedily associate,
/// confirm after N consecutive real entries, coast unmatched tracks, close
/// and finalize. Strictly sequential: one stream, ascending frame indices.
class Tracker {
public:
    explicit Tracker(TrackerConfig config) : cfg_(config) {
        n_confirm_ = confirmation_threshold(cfg_.fps);
        coast_limit_ = cfg_.coast_limit > 0 ? cfg_.coast_limit : n_confirm_;
    }

    int confirm_after() const { return n_confirm_; }
    int coast_limit() const { return coast_limit_; }
    int64_t next_object_id() const { return next_object_id_; }

    /// Feeds one frame's detections; returns tubes finalized by this step.
    std::vector<Tube> step(int64_t frame_index, int64_t timestamp_ms,
                           const std::vector<Detection>& detections) {
        if (has_last_ && frame_index <= last_frame_)
            throw Error("Tracker: frame indices must be ascending");
        has_last_ = true;
        last_frame_ = frame_index;

        std::vector<PointF> predicted(tracks_.size());
        std::vector<double> gates(tracks_.size());
        std::vector<int64_t> ranks(tracks_.size());
        for (size_t t = 0; t < tracks_.size(); ++t) {
            const LiveTrack& tr = tracks_[t];
            predicted[t] = predict_center(tr.centers);
            const double diag = std::sqrt(static_cast<double>(tr.last_bbox().w) * tr.last_bbox().w +
                                          static_cast<double>(tr.last_bbox().h) * tr.last_bbox().h);
            gates[t] = std::max(diag, cfg_.gate_min_px);
            // Confirmed tracks outrank candidates on exact distance ties.
            ranks[t] = tr.object_id > 0 ? tr.object_id : (1LL << 40) + tr.serial;
        }
        std::vector<PointF> det_centers(detections.size());
        for (size_t d = 0; d < detections.size(); ++d)
            det_centers[d] = detections[d].bbox.center();

        const Assignment as = associate(predicted, gates, ranks, det_centers);

        std::vector<Tube> finalized;
        for (const auto& [t, d] : as.matches)
            append_real(tracks_[t], detections[d], frame_index, timestamp_ms);
        for (int t : as.unmatched_tracks)
            coast_or_close(tracks_[t], predicted[t], frame_index, timestamp_ms, finalized);
        for (int d : as.unmatched_detections)
            spawn(detections[d], frame_index, timestamp_ms);

        // Confirm candidates (creation order keeps ids deterministic).
        for (LiveTrack& tr : tracks_)
            if (tr.object_id == 0 && tr.consecutive_real >= n_confirm_)
                tr.object_id = next_object_id_++;

        std::erase_if(tracks_, [](const LiveTrack& tr) { return tr.closed; });
        std::sort(finalized.begin(), finalized.end(),
                  [](const Tube& a, const Tube& b) { return a.object_id < b.object_id; });
        return finalized;
    }

    /// Closes every live track at end of stream.
    std::vector<Tube> finish() {
        std::vector<Tube> finalized;
        for (LiveTrack& tr : tracks_) finalize_if_confirmed(tr, finalized);
        tracks_.clear();
        std::sort(finalized.begin(), finalized.end(),
                  [](const Tube& a, const Tube& b) { return a.object_id < b.object_id; });
        return finalized;
    }

    size_t live_track_count() const { return tracks_.size(); }

    /// Earliest first-entry timestamp among live tracks; no tube this tracker
    /// finalizes in the future can start before it.
    int64_t earliest_live_start_ms() const {
        int64_t m = std::numeric_limits<int64_t>::max();
        for (const LiveTrack& tr : tracks_)
            m = std::min(m, tr.entries.front().original_timestamp_ms);
        return m;
    }

private:
    struct LiveTrack {
        int64_t serial = 0;     // creation order, ties and determinism
        int64_t object_id = 0;  // 0 until confirmed
        std::vector<PointF> centers;
        std::vector<ObjectFrame> entries;
        int consecutive_real = 0;
        int coast_count = 0;
        bool closed = false;

        const BBox& last_bbox() const { return entries.back().bbox; }
        const ObjectFrame* last_real() const {
            for (auto it = entries.rbegin(); it != entries.rend(); ++it)
                if (!it->predicted) return &*it;
            return nullptr;
        }
    };

    void append_real(LiveTrack& tr, const Detection& det, int64_t frame_index,
                     int64_t timestamp_ms) {
        ObjectFrame of;
        of.original_frame_index = frame_index;
        of.original_timestamp_ms = timestamp_ms;
        of.bbox = det.bbox;
        of.image_patch = det.image_patch;
        of.mask_patch = det.mask_patch;
        of.predicted = false;
        tr.entries.push_back(std::move(of));
        tr.centers.push_back(det.bbox.center());
        tr.coast_count = 0;
        ++tr.consecutive_real;
    }

    void coast_or_close(LiveTrack& tr, const PointF& predicted_center, int64_t frame_index,
                        int64_t timestamp_ms, std::vector<Tube>& finalized) {
        ++tr.coast_count;
        tr.consecutive_real = 0;
        if (tr.coast_count > coast_limit_) {
            finalize_if_confirmed(tr, finalized);
            tr.closed = true;
            return;
        }
        const ObjectFrame* real = tr.last_real();
        const BBox& prev = tr.last_bbox();
        BBox box{static_cast<int>(std::lround(predicted_center.x - prev.w / 2.0)),
                 static_cast<int>(std::lround(predicted_center.y - prev.h / 2.0)), prev.w,
                 prev.h};
        if (cfg_.frame_width > 0) {
            box.x = std::clamp(box.x, 0, std::max(0, cfg_.frame_width - box.w));
            box.y = std::clamp(box.y, 0, std::max(0, cfg_.frame_height - box.h));
        }
        ObjectFrame of;
        of.original_frame_index = frame_index;
        of.original_timestamp_ms = timestamp_ms;
        of.bbox = box;
        if (real) {
            of.image_patch = real->image_patch;
            of.mask_patch = real->mask_patch;
        }
        of.predicted = true;
        tr.entries.push_back(std::move(of));
        tr.centers.push_back(box.center());
    }

    void spawn(const Detection& det, int64_t frame_index, int64_t timestamp_ms) {
        LiveTrack tr;
        tr.serial = next_serial_++;
        append_real(tr, det, frame_index, timestamp_ms);
        tracks_.push_back(std::move(tr));
    }

    void finalize_if_confirmed(LiveTrack& tr, std::vector<Tube>& finalized) {
        if (tr.object_id == 0) return;
        // Trim trailing predicted entries; a tube ends on real evidence.
        while (!tr.entries.empty() && tr.entries.back().predicted) {
            tr.entries.pop_back();
            tr.centers.pop_back();
        }
        if (tr.entries.empty()) return;
        Tube tube;
        tube.object_id = tr.object_id;
        tube.start_timestamp_ms = tr.entries.front().original_timestamp_ms;
        tube.frames = std::move(tr.entries);
        finalized.push_back(std::move(tube));
    }

    TrackerConfig cfg_;
    int n_confirm_ = 1;
    int coast_limit_ = 1;
    int64_t next_serial_ = 0;
    int64_t next_object_id_ = 1;
    int64_t last_frame_ = -1;
    bool has_last_ = false;
    std::vector<LiveTrack> tracks_;
};

}  // namespace vsyn
