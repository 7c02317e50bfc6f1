/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#pragma once

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

#include "vsyn/core.hpp"

namespace vsyn {

struct GtBox {
    int64_t id = 0;
    BBox box;
};

/// Ground-truth (or detection) boxes keyed by frame index.
struct AnnotationSet {
    std::map<int64_t, std::vector<GtBox>> frames;

    int64_t total_boxes() const {
        int64_t n = 0;
        for (const auto& [f, boxes] : frames) n += static_cast<int64_t>(boxes.size());
        return n;
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [f, boxes] : frames) {
            nlohmann::json jb = nlohmann::json::array();
            for (const GtBox& b : boxes)
                jb.push_back({{"id", b.id},
                              {"x", b.box.x},
                              {"y", b.box.y},
                              {"w", b.box.w},
                              {"h", b.box.h}});
            arr.push_back({{"frame", f}, {"boxes", std::move(jb)}});
        }
        return arr;
    }

    static AnnotationSet from_json(const nlohmann::json& j) {
        AnnotationSet set;
        try {
            for (const auto& jf : j) {
                const int64_t frame = jf.at("frame").get<int64_t>();
                auto& boxes = set.frames[frame];
                for (const auto& jb : jf.at("boxes"))
                    boxes.push_back({jb.value("id", static_cast<int64_t>(0)),
                                     BBox{jb.at("x").get<int>(), jb.at("y").get<int>(),
                                          jb.at("w").get<int>(), jb.at("h").get<int>()}});
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("annotations: bad JSON: ") + e.what());
        }
        return set;
    }
};

struct FrameCount {
    int64_t frame = 0;
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t np = 0;
};

/// Greedy one-to-one matching by descending IoU. Extra detections on an
/// already-matched ground truth count as false positives.
inline FrameCount match_frame(const std::vector<BBox>& detections,
                              const std::vector<GtBox>& gts, double iou_threshold) {
    struct Pair {
        double iou;
        int det, gt;
    };
    std::vector<Pair> pairs;
    for (int d = 0; d < static_cast<int>(detections.size()); ++d)
        for (int g = 0; g < static_cast<int>(gts.size()); ++g) {
            const double v = iou(detections[static_cast<size_t>(d)], gts[static_cast<size_t>(g)].box);
            if (v >= iou_threshold) pairs.push_back({v, d, g});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.det != b.det) return a.det < b.det;
        return a.gt < b.gt;
    });
    std::vector<char> det_used(detections.size(), 0), gt_used(gts.size(), 0);
    int64_t tp = 0;
    for (const Pair& p : pairs) {
        if (det_used[static_cast<size_t>(p.det)] || gt_used[static_cast<size_t>(p.gt)]) continue;
        det_used[static_cast<size_t>(p.det)] = 1;
        gt_used[static_cast<size_t>(p.gt)] = 1;
        ++tp;
    }
    FrameCount out;
    out.tp = tp;
    out.fp = static_cast<int64_t>(detections.size()) - tp;
    out.np = static_cast<int64_t>(gts.size());
    return out;
}

/// Cumulative precision/recall series and the scalar AP
/// (final precision x final recall, not area under the curve).
struct EvalReport {
    std::vector<FrameCount> per_frame;
    std::vector<double> precision;  // precision(i), cumulative
    std::vector<double> recall;     // recall(i), cumulative over total NP
    double final_precision = 1.0;
    double final_recall = 0.0;
    double average_precision = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json jf = nlohmann::json::array();
        for (size_t i = 0; i < per_frame.size(); ++i)
            jf.push_back({{"frame", per_frame[i].frame},
                          {"tp", per_frame[i].tp},
                          {"fp", per_frame[i].fp},
                          {"np", per_frame[i].np},
                          {"precision", precision[i]},
                          {"recall", recall[i]}});
        return {{"frames", std::move(jf)},
                {"precision", final_precision},
                {"recall", final_recall},
                {"average_precision", average_precision}};
    }

    /// CSV of (i, precision, recall) curve points for plotting.
    std::string curve_csv() const {
        std::ostringstream os;
        os << "i,precision,recall\n";
        for (size_t i = 0; i < precision.size(); ++i)
            os << (i + 1) << "," << precision[i] << "," << recall[i] << "\n";
        return os.str();
    }
};

/// Builds the report from per-frame counts. Precision before the first
/// detection is 1.0 by convention; a zero total NP is an error.
inline EvalReport report_from_counts(std::vector<FrameCount> counts) {
    if (counts.empty()) throw Error("eval report: no evaluated frames");
    int64_t total_np = 0;
    for (const FrameCount& c : counts) total_np += c.np;
    if (total_np == 0) throw Error("eval report: zero annotated boxes (recall undefined)");

    EvalReport rep;
    rep.per_frame = std::move(counts);
    int64_t cum_tp = 0, cum_det = 0;
    for (const FrameCount& c : rep.per_frame) {
        cum_tp += c.tp;
        cum_det += c.tp + c.fp;
        rep.precision.push_back(cum_det > 0 ? static_cast<double>(cum_tp) / cum_det : 1.0);
        rep.recall.push_back(static_cast<double>(cum_tp) / static_cast<double>(total_np));
    }
    rep.final_precision = rep.precision.back();
    rep.final_recall = rep.recall.back();
    rep.average_precision = rep.final_precision * rep.final_recall;
    return rep;
}

/// Scores detections against annotations over the union of their frames.
inline EvalReport evaluate(const AnnotationSet& detections, const AnnotationSet& annotations,
                           double iou_threshold = 0.5) {
    std::vector<int64_t> frames;
    for (const auto& [f, _] : annotations.frames) frames.push_back(f);
    for (const auto& [f, _] : detections.frames)
        if (!annotations.frames.count(f)) frames.push_back(f);
    std::sort(frames.begin(), frames.end());

    std::vector<FrameCount> counts;
    static const std::vector<GtBox> kNone;
    for (int64_t f : frames) {
        auto ai = annotations.frames.find(f);
        auto di = detections.frames.find(f);
        std::vector<BBox> det_boxes;
        if (di != detections.frames.end())
            for (const GtBox& b : di->second) det_boxes.push_back(b.box);
        FrameCount c =
            match_frame(det_boxes, ai != annotations.frames.end() ? ai->second : kNone,
                        iou_threshold);
        c.frame = f;
        counts.push_back(c);
    }
    return report_from_counts(std::move(counts));
}

}  // namespace vsyn
