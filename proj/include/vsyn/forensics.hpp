/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#pragma once

#include <algorithm>

#include <json.hpp>

#include "vsyn/bgmodel.hpp"
#include "vsyn/core.hpp"
#include "vsyn/flow.hpp"

namespace vsyn {

enum class AlarmKind { Forgery, CameraTamper, Anomaly, Trespass };

inline const char* alarm_kind_name(AlarmKind k) {
    switch (k) {
        case AlarmKind::Forgery: return "FORGERY";
        case AlarmKind::CameraTamper: return "CAMERA_TAMPER";
        case AlarmKind::Anomaly: return "ANOMALY";
        case AlarmKind::Trespass: return "TRESPASS";
    }
    return "?";
}

/// Uniform report record; one JSON line per event on the wire.
struct AlarmEvent {
    AlarmKind kind = AlarmKind::Forgery;
    int64_t frame_start = 0;
    int64_t frame_end = 0;  // inclusive
    double score = 0.0;
    nlohmann::json detail;  // block coords, polygon id, z-score, ...

    nlohmann::json to_json() const {
        return {{"kind", alarm_kind_name(kind)},
                {"frame_start", frame_start},
                {"frame_end", frame_end},
                {"score", score},
                {"detail", detail}};
    }
};

/// Per-transition scalars: V[t] = flow-magnitude variance of t -> t+1,
/// F[t] = total flow magnitude. Length = frame_count - 1.
struct VariationSequence {
    std::vector<double> variance;  // V
    std::vector<double> total;     // F
};

inline VariationSequence flow_variation_sequence(const std::vector<Frame>& frames,
                                                 const FlowConfig& cfg = {}) {
    VariationSequence seq;
    if (frames.size() < 2) return seq;
    Frame prev = to_luma(frames[0]);
    for (size_t t = 1; t < frames.size(); ++t) {
        Frame next = to_luma(frames[t]);
        const FlowStats st = flow_stats(dense_flow(prev, next, cfg));
        seq.variance.push_back(st.variance);
        seq.total.push_back(st.total);
        prev = std::move(next);
    }
    return seq;
}

struct ForgeryConfig {
    int window = 50;        // sliding window for the robust z-score
    double k = 3.0;         // z-score alarm threshold
    double dup_eps = 1.0;   // mean-abs-diff (gray levels) for frozen transitions
    int min_dup = 3;        // minimum frozen run length
    double rho = 0.98;      // autocorrelation bound for repeated subsequences
    int dup_window = 10;    // correlation segment length
    FlowConfig flow;
};

namespace detail {

/// Robust z-scores over a centered sliding window (median / MAD, excluding
/// the probe itself). The MAD gets a floor: an absolute term at the flow
/// estimator's resolution (1e-3 px^2) plus 1% of the local median, so a flat
/// sequence cannot make sub-resolution wiggles significant.
inline std::vector<double> robust_zscores(const std::vector<double>& v, int window) {
    const int n = static_cast<int>(v.size());
    std::vector<double> z(static_cast<size_t>(n), 0.0);
    if (n < 3) return z;
    const int half = std::max(1, window / 2);
    std::vector<double> buf;
    for (int t = 0; t < n; ++t) {
        buf.clear();
        for (int j = std::max(0, t - half); j <= std::min(n - 1, t + half); ++j)
            if (j != t) buf.push_back(v[static_cast<size_t>(j)]);
        if (buf.size() < 2) continue;
        std::sort(buf.begin(), buf.end());
        const double median = buf[buf.size() / 2];
        for (double& b : buf) b = std::abs(b - median);
        std::sort(buf.begin(), buf.end());
        const double mad = buf[buf.size() / 2];
        const double sigma = std::max(1.4826 * mad, 1e-3 + 0.01 * std::abs(median));
        z[static_cast<size_t>(t)] = std::abs(v[static_cast<size_t>(t)] - median) / sigma;
    }
    return z;
}

inline double mean_abs_diff(const Frame& a, const Frame& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i)
        s += std::abs(static_cast<int>(a.pixels[i]) - static_cast<int>(b.pixels[i]));
    return s / static_cast<double>(a.pixels.size());
}

inline double pearson(const double* x, const double* y, int n) {
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double cxy = 0.0, cxx = 0.0, cyy = 0.0;
    for (int i = 0; i < n; ++i) {
        cxy += (x[i] - mx) * (y[i] - my);
        cxx += (x[i] - mx) * (x[i] - mx);
        cyy += (y[i] - my) * (y[i] - my);
    }
    if (cxx <= 0.0 || cyy <= 0.0) return 0.0;
    return cxy / std::sqrt(cxx * cyy);
}

}  // namespace detail

/// Inter-frame forgery scan. Three detectors over the variation sequence:
///  - robust z-score discontinuities (insertion/deletion cuts),
///  - frozen runs: >= min_dup consecutive transitions with mean abs pixel
///    difference < dup_eps (held frames),
///  - repeated subsequences: segments of V correlating above rho at some lag
///    (re-inserted copies); segments must carry signal and agree in level,
///    otherwise flat or ramp-shaped sequences alias as repeats.
inline std::vector<AlarmEvent> forgery_scan(const std::vector<Frame>& frames,
                                            const ForgeryConfig& cfg = {}) {
    const int64_t T = static_cast<int64_t>(frames.size());
    if (T < cfg.window + 2) throw Error("forgery_scan: stream too short");

    const VariationSequence seq = flow_variation_sequence(frames, cfg.flow);
    const std::vector<double> z = detail::robust_zscores(seq.variance, cfg.window);
    std::vector<AlarmEvent> events;

    // z-score discontinuities; consecutive flagged transitions merge.
    for (int64_t t = 0; t < static_cast<int64_t>(z.size());) {
        if (z[static_cast<size_t>(t)] <= cfg.k) {
            ++t;
            continue;
        }
        int64_t end = t;
        double score = z[static_cast<size_t>(t)];
        while (end + 1 < static_cast<int64_t>(z.size()) &&
               z[static_cast<size_t>(end + 1)] > cfg.k) {
            ++end;
            score = std::max(score, z[static_cast<size_t>(end)]);
        }
        AlarmEvent ev;
        ev.kind = AlarmKind::Forgery;
        ev.frame_start = t;
        ev.frame_end = end + 1;  // a transition t spans frames [t, t+1]
        ev.score = score;
        ev.detail = {{"type", "discontinuity"}, {"z", score}};
        events.push_back(std::move(ev));
        t = end + 1;
    }

    // Frozen-transition runs.
    for (int64_t t = 0; t + 1 < T;) {
        if (detail::mean_abs_diff(frames[static_cast<size_t>(t)],
                                  frames[static_cast<size_t>(t + 1)]) >= cfg.dup_eps) {
            ++t;
            continue;
        }
        int64_t end = t;
        while (end + 2 < T &&
               detail::mean_abs_diff(frames[static_cast<size_t>(end + 1)],
                                     frames[static_cast<size_t>(end + 2)]) < cfg.dup_eps)
            ++end;
        const int64_t run = end - t + 1;
        if (run >= cfg.min_dup) {
            AlarmEvent ev;
            ev.kind = AlarmKind::Forgery;
            ev.frame_start = t;
            ev.frame_end = end + 1;
            ev.score = static_cast<double>(run);
            ev.detail = {{"type", "frozen_run"}, {"transitions", run}};
            events.push_back(std::move(ev));
        }
        t = end + 1;
    }

    // Repeated subsequences by lagged autocorrelation of V.
    const int m = cfg.dup_window;
    const int nv = static_cast<int>(seq.variance.size());
    if (nv >= 2 * m) {
        double global_sd = 0.0;
        {
            double s = 0.0, s2 = 0.0;
            for (double x : seq.variance) {
                s += x;
                s2 += x * x;
            }
            const double mean = s / nv;
            global_sd = std::sqrt(std::max(0.0, s2 / nv - mean * mean));
        }
        std::vector<char> flagged(static_cast<size_t>(nv), 0);
        for (int lag = m / 2; lag + m <= nv; ++lag) {
            for (int a = 0; a + lag + m <= nv; ++a) {
                const double* x = seq.variance.data() + a;
                const double* y = seq.variance.data() + a + lag;
                double mx = 0.0, my = 0.0;
                for (int i = 0; i < m; ++i) {
                    mx += x[i];
                    my += y[i];
                }
                mx /= m;
                my /= m;
                // Repeated segments agree in level; reject cheaply first.
                if (std::abs(mx - my) > 0.05 * (std::abs(mx) + std::abs(my)) / 2.0 + 1e-9)
                    continue;
                double vx = 0.0, vy = 0.0;
                for (int i = 0; i < m; ++i) {
                    vx += (x[i] - mx) * (x[i] - mx);
                    vy += (y[i] - my) * (y[i] - my);
                }
                const double sdx = std::sqrt(vx / m), sdy = std::sqrt(vy / m);
                // And must carry real signal: relative to the stream and
                // above the flow estimator's resolution.
                const double sd_floor = std::max(0.05 * global_sd, 1e-3);
                if (sdx < sd_floor || sdy < sd_floor) continue;
                if (detail::pearson(x, y, m) <= cfg.rho) continue;
                for (int i = 0; i < m; ++i) flagged[static_cast<size_t>(a + lag + i)] = 1;
            }
        }
        for (int t = 0; t < nv;) {
            if (!flagged[static_cast<size_t>(t)]) {
                ++t;
                continue;
            }
            int end = t;
            while (end + 1 < nv && flagged[static_cast<size_t>(end + 1)]) ++end;
            AlarmEvent ev;
            ev.kind = AlarmKind::Forgery;
            ev.frame_start = t;
            ev.frame_end = end + 1;
            ev.score = static_cast<double>(end - t + 1);
            ev.detail = {{"type", "repeated_sequence"}};
            events.push_back(std::move(ev));
            t = end + 1;
        }
    }

    std::sort(events.begin(), events.end(), [](const AlarmEvent& a, const AlarmEvent& b) {
        return a.frame_start != b.frame_start ? a.frame_start < b.frame_start
                                              : a.frame_end < b.frame_end;
    });
    return events;
}

struct TamperConfig {
    double tau = 0.6;     // foreground area fraction; scene dependent, tune it
    int persistence = 3;  // consecutive frames above tau before alarming
};

/// Camera-tamper monitor: alarms when the foreground area fraction stays
/// above tau for `persistence` consecutive frames. One event per breach
/// episode, emitted the moment persistence is met.
class CameraTamperMonitor {
public:
    explicit CameraTamperMonitor(TamperConfig cfg = {}) : cfg_(cfg) {
        if (cfg_.persistence < 1 || cfg_.tau < 0.0 || cfg_.tau > 1.0)
            throw Error("CameraTamperMonitor: bad configuration");
    }

    static double foreground_ratio(const LabelMask& mask) {
        const size_t fg = mask.count(PixelLabel::Foreground);
        return static_cast<double>(fg) / static_cast<double>(mask.labels.size());
    }

    std::optional<AlarmEvent> step(const LabelMask& mask, int64_t frame_index) {
        const double ratio = foreground_ratio(mask);
        if (ratio <= cfg_.tau) {
            streak_ = 0;
            alarmed_ = false;
            return std::nullopt;
        }
        if (streak_ == 0) streak_start_ = frame_index;
        ++streak_;
        if (streak_ < cfg_.persistence || alarmed_) return std::nullopt;
        alarmed_ = true;
        AlarmEvent ev;
        ev.kind = AlarmKind::CameraTamper;
        ev.frame_start = streak_start_;
        ev.frame_end = frame_index;
        ev.score = ratio;
        ev.detail = {{"ratio", ratio}};
        return ev;
    }

private:
    TamperConfig cfg_;
    int streak_ = 0;
    int64_t streak_start_ = 0;
    bool alarmed_ = false;
};

struct AnomalyConfig {
    double margin = 0.1;  // trained maxima may be exceeded by this fraction
    int hits = 2;         // consecutive anomalous feature matrices per block
    int max_corners = 400;
    int group = 5;  // per-frame histograms summed per feature matrix
    FlowConfig flow;
};

/// Per-block per-bin maxima of grouped flow histograms over normal footage.
struct BusynessMatrix {
    int width = 0, height = 0;  // frame geometry the matrix was trained on
    int blocks_x = 0, blocks_y = 0, bins = 9, block_px = 8;
    std::vector<double> data;

    double at(int bx, int by, int bin) const {
        return data[(static_cast<size_t>(by) * blocks_x + bx) * bins + bin];
    }

    nlohmann::json to_json() const {
        return {{"geometry",
                 {{"width", width},
                  {"height", height},
                  {"blocks_x", blocks_x},
                  {"blocks_y", blocks_y},
                  {"block_px", block_px}}},
                {"bins", bins},
                {"data", data}};
    }

    static BusynessMatrix from_json(const nlohmann::json& j) {
        BusynessMatrix m;
        try {
            const auto& g = j.at("geometry");
            m.width = g.at("width").get<int>();
            m.height = g.at("height").get<int>();
            m.blocks_x = g.at("blocks_x").get<int>();
            m.blocks_y = g.at("blocks_y").get<int>();
            m.block_px = g.at("block_px").get<int>();
            m.bins = j.at("bins").get<int>();
            m.data = j.at("data").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("busyness matrix: bad JSON: ") + e.what());
        }
        if (m.data.size() !=
            static_cast<size_t>(m.blocks_x) * m.blocks_y * static_cast<size_t>(m.bins))
            throw Error("busyness matrix: data size does not match geometry");
        return m;
    }
};

namespace detail {

/// Sparse flow histograms for each transition: flow sampled at corners of the
/// earlier frame.
inline std::vector<BlockHistograms> transition_histograms(const std::vector<Frame>& frames,
                                                          const AnomalyConfig& cfg) {
    std::vector<BlockHistograms> out;
    if (frames.size() < 2) return out;
    Frame prev = to_luma(frames[0]);
    for (size_t t = 1; t < frames.size(); ++t) {
        Frame next = to_luma(frames[t]);
        const std::vector<PointI> corners = corner_features(prev, cfg.max_corners);
        const FlowField field = dense_flow(prev, next, cfg.flow);
        out.push_back(block_histograms(field, &corners, cfg.flow.bins, cfg.flow.block_px));
        prev = std::move(next);
    }
    return out;
}

/// Element-wise sum of `group` consecutive histograms, sliding by one.
inline std::vector<std::vector<double>> feature_matrices(
    const std::vector<BlockHistograms>& hists, int group) {
    std::vector<std::vector<double>> out;
    if (static_cast<int>(hists.size()) < group) return out;
    const size_t sz = hists[0].data.size();
    for (size_t start = 0; start + group <= hists.size(); ++start) {
        std::vector<double> fm(sz, 0.0);
        for (int g = 0; g < group; ++g)
            for (size_t i = 0; i < sz; ++i) fm[i] += hists[start + g].data[i];
        out.push_back(std::move(fm));
    }
    return out;
}

}  // namespace detail

/// Entry-wise max of feature matrices. Exposed for oracle-level tests.
inline BusynessMatrix busyness_from_histograms(const std::vector<BlockHistograms>& hists,
                                               int group, int width, int height) {
    if (static_cast<int>(hists.size()) < group)
        throw Error("busyness_train: not enough transitions");
    BusynessMatrix m;
    m.width = width;
    m.height = height;
    m.blocks_x = hists[0].blocks_x;
    m.blocks_y = hists[0].blocks_y;
    m.bins = hists[0].bins;
    m.block_px = hists[0].block_px;
    m.data.assign(hists[0].data.size(), 0.0);
    for (const std::vector<double>& fm : detail::feature_matrices(hists, group))
        for (size_t i = 0; i < fm.size(); ++i) m.data[i] = std::max(m.data[i], fm[i]);
    return m;
}

inline BusynessMatrix busyness_train(const std::vector<Frame>& frames,
                                     const AnomalyConfig& cfg = {}) {
    if (static_cast<int>(frames.size()) < cfg.group + 1)
        throw Error("busyness_train: stream shorter than " + std::to_string(cfg.group + 1) +
                    " frames");
    const auto hists = detail::transition_histograms(frames, cfg);
    return busyness_from_histograms(hists, cfg.group, frames[0].width, frames[0].height);
}

/// A block is anomalous when any bin of its test feature matrix exceeds the
/// trained maximum by more than `margin`; an event fires after `hits`
/// consecutive anomalous matrices for that block.
inline std::vector<AlarmEvent> busyness_test(const std::vector<Frame>& frames,
                                             const BusynessMatrix& matrix,
                                             const AnomalyConfig& cfg = {}) {
    if (static_cast<int>(frames.size()) < cfg.group + 1)
        throw Error("busyness_test: stream shorter than " + std::to_string(cfg.group + 1) +
                    " frames");
    if (frames[0].width != matrix.width || frames[0].height != matrix.height)
        throw Error("busyness_test: matrix geometry does not match stream");
    const auto hists = detail::transition_histograms(frames, cfg);
    const auto fms = detail::feature_matrices(hists, cfg.group);

    std::vector<AlarmEvent> events;
    const size_t nblocks = static_cast<size_t>(matrix.blocks_x) * matrix.blocks_y;
    std::vector<int> streak(nblocks, 0);
    std::vector<char> alarmed(nblocks, 0);
    for (size_t g = 0; g < fms.size(); ++g) {
        for (size_t b = 0; b < nblocks; ++b) {
            double worst = 0.0;
            bool anomalous = false;
            for (int bin = 0; bin < matrix.bins; ++bin) {
                const size_t i = b * static_cast<size_t>(matrix.bins) + bin;
                if (fms[g][i] > matrix.data[i] * (1.0 + cfg.margin)) {
                    anomalous = true;
                    worst = std::max(worst,
                                     fms[g][i] - matrix.data[i] * (1.0 + cfg.margin));
                }
            }
            if (!anomalous) {
                streak[b] = 0;
                alarmed[b] = 0;
                continue;
            }
            ++streak[b];
            if (streak[b] < cfg.hits || alarmed[b]) continue;
            alarmed[b] = 1;
            AlarmEvent ev;
            ev.kind = AlarmKind::Anomaly;
            // Feature matrix g covers transitions [g, g+group) = frames
            // [g, g+group]; the streak began hits-1 matrices earlier.
            ev.frame_start = static_cast<int64_t>(g) - (cfg.hits - 1);
            ev.frame_end = static_cast<int64_t>(g) + cfg.group;
            ev.score = worst;
            ev.detail = {{"block", {static_cast<int>(b) % matrix.blocks_x,
                                    static_cast<int>(b) / matrix.blocks_x}}};
            events.push_back(std::move(ev));
        }
    }
    return events;
}

struct TrespassConfig {
    double area_frac = 0.01;  // fraction of polygon interior that must be FG
    int persistence = 2;
};

struct Polygon {
    std::string id;
    std::vector<PointF> points;
};

/// Even-odd point-in-polygon test against pixel centers.
inline bool point_in_polygon(double px, double py, const std::vector<PointF>& poly) {
    bool inside = false;
    const size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const PointF& a = poly[j];
        const PointF& b = poly[i];
        if ((b.y > py) != (a.y > py)) {
            const double xint = b.x + (py - b.y) * (a.x - b.x) / (a.y - b.y);
            if (px < xint) inside = !inside;
        }
    }
    return inside;
}

/// Per-polygon foreground-presence monitor over user-defined zones.
class TrespassMonitor {
public:
    TrespassMonitor(std::vector<Polygon> polygons, int width, int height,
                    TrespassConfig cfg = {})
        : cfg_(cfg), polygons_(std::move(polygons)) {
        if (cfg_.persistence < 1) throw Error("TrespassMonitor: bad persistence");
        for (const Polygon& poly : polygons_) {
            if (poly.points.size() < 3)
                throw Error("TrespassMonitor: degenerate polygon '" + poly.id + "'");
            Zone z;
            z.id = poly.id;
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x)
                    if (point_in_polygon(x + 0.5, y + 0.5, poly.points))
                        z.pixels.push_back(static_cast<size_t>(y) * width + x);
            zones_.push_back(std::move(z));
        }
    }

    std::vector<AlarmEvent> step(const LabelMask& mask, int64_t frame_index) {
        std::vector<AlarmEvent> events;
        for (Zone& z : zones_) {
            if (z.pixels.empty()) continue;
            size_t fg = 0;
            for (size_t i : z.pixels)
                fg += mask.labels[i] == static_cast<uint8_t>(PixelLabel::Foreground);
            const double frac = static_cast<double>(fg) / static_cast<double>(z.pixels.size());
            if (frac <= cfg_.area_frac) {
                z.streak = 0;
                z.alarmed = false;
                continue;
            }
            if (z.streak == 0) z.streak_start = frame_index;
            ++z.streak;
            if (z.streak < cfg_.persistence || z.alarmed) continue;
            z.alarmed = true;
            AlarmEvent ev;
            ev.kind = AlarmKind::Trespass;
            ev.frame_start = z.streak_start;
            ev.frame_end = frame_index;
            ev.score = frac;
            ev.detail = {{"polygon", z.id}};
            events.push_back(std::move(ev));
        }
        return events;
    }

private:
    struct Zone {
        std::string id;
        std::vector<size_t> pixels;
        int streak = 0;
        int64_t streak_start = 0;
        bool alarmed = false;
    };

    TrespassConfig cfg_;
    std::vector<Polygon> polygons_;
    std::vector<Zone> zones_;
};

}  // namespace vsyn
