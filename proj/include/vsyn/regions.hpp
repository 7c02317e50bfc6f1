/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#pragma once

#include <algorithm>

#include "vsyn/core.hpp"

namespace vsyn {

struct RegionsConfig {
    double min_area_frac = 0.0002;  // components below this fraction of the frame are noise
    int dilate_iters = 2;
    int erode_iters = 1;
    int kernel = 5;  // elliptical structuring element, kernel x kernel
};

/// One clean per-object detection extracted from a foreground mask.
struct Detection {
    int64_t frame_index = 0;
    BBox bbox;                    // smallest axis-aligned box enclosing the hull
    std::vector<PointI> contour;  // outer boundary, ordered
    std::vector<PointI> hull;     // convex hull of the contour
    int64_t area_px = 0;          // component pixel count
    Mask mask_patch;              // component pixels within bbox (0/1)
    Frame image_patch;            // frame pixels within bbox
};

namespace detail {

/// Elliptical structuring element offsets for an odd kernel size.
inline std::vector<PointI> ellipse_offsets(int size) {
    if (size < 1 || size % 2 == 0) throw Error("kernel size must be odd and positive");
    const int r = size / 2;
    std::vector<PointI> offsets;
    if (r == 0) return {{0, 0}};
    const double inv_r2 = 1.0 / (static_cast<double>(r) * r);
    for (int dy = -r; dy <= r; ++dy) {
        const double t = 1.0 - static_cast<double>(dy) * dy * inv_r2;
        const int dx_max = t > 0.0 ? static_cast<int>(std::lround(r * std::sqrt(t))) : 0;
        for (int dx = -dx_max; dx <= dx_max; ++dx) offsets.push_back({dx, dy});
    }
    return offsets;
}

inline Mask dilate(const Mask& in, const std::vector<PointI>& offsets) {
    Mask out = make_mask(in.width, in.height, 0);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            if (!in.at(x, y)) continue;
            for (const PointI& o : offsets) {
                const int nx = x + o.x, ny = y + o.y;
                if (nx >= 0 && ny >= 0 && nx < in.width && ny < in.height) out.at(nx, ny) = 1;
            }
        }
    return out;
}

inline Mask erode(const Mask& in, const std::vector<PointI>& offsets) {
    // Out-of-bounds neighborhood is ignored, so components are not eaten at
    // the frame border.
    Mask out = make_mask(in.width, in.height, 0);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            if (!in.at(x, y)) continue;
            bool keep = true;
            for (const PointI& o : offsets) {
                const int nx = x + o.x, ny = y + o.y;
                if (nx >= 0 && ny >= 0 && nx < in.width && ny < in.height && !in.at(nx, ny)) {
                    keep = false;
                    break;
                }
            }
            if (keep) out.at(x, y) = 1;
        }
    return out;
}

/// Moore-neighbor boundary trace starting at the component's topmost-leftmost
/// pixel, walking the outer boundary clockwise (image coords, y down).
/// Terminates by Jacob's criterion: the start pixel re-entered with the same
/// outgoing direction as the first move. Thin spurs legitimately revisit
/// pixels. `is_set` restricts the walk to one component.
template <typename IsSet>
inline std::vector<PointI> trace_contour(PointI start, IsSet is_set) {
    static const PointI kRing[8] = {{1, 0},  {1, 1},   {0, 1},  {-1, 1},
                                    {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
    // Scans the ring clockwise starting just after the backtrack direction.
    auto scan = [&](PointI cur, int back) -> std::pair<int, bool> {
        for (int i = 1; i <= 8; ++i) {
            const int d = (back + i) % 8;
            if (is_set(cur.x + kRing[d].x, cur.y + kRing[d].y)) return {d, true};
        }
        return {0, false};
    };

    std::vector<PointI> contour{start};
    // Topmost-leftmost start: the row above and the left neighbor are outside
    // the component, so "came from the west" is a valid initial backtrack.
    auto [d0, any] = scan(start, 4);
    if (!any) return contour;  // isolated pixel
    PointI cur{start.x + kRing[d0].x, start.y + kRing[d0].y};
    int back = (d0 + 4) % 8;
    for (int guard = 0; guard < (1 << 24); ++guard) {
        if (cur == start) {
            auto [d, ok] = scan(cur, back);
            if (!ok || d == d0) break;
            contour.push_back(cur);  // start revisited along a spur
            cur = PointI{cur.x + kRing[d].x, cur.y + kRing[d].y};
            back = (d + 4) % 8;
            continue;
        }
        contour.push_back(cur);
        auto [d, ok] = scan(cur, back);
        if (!ok) break;
        cur = PointI{cur.x + kRing[d].x, cur.y + kRing[d].y};
        back = (d + 4) % 8;
    }
    return contour;
}

inline long long cross(const PointI& o, const PointI& a, const PointI& b) {
    return static_cast<long long>(a.x - o.x) * (b.y - o.y) -
           static_cast<long long>(a.y - o.y) * (b.x - o.x);
}

/// Andrew monotone chain; strict hull (collinear points dropped).
inline std::vector<PointI> convex_hull(std::vector<PointI> pts) {
    std::sort(pts.begin(), pts.end(), [](const PointI& a, const PointI& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const size_t n = pts.size();
    if (n <= 2) return pts;
    std::vector<PointI> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace detail

/// Morphological closing-style cleanup: dilate then erode.
inline Mask clean_mask(const Mask& mask, const RegionsConfig& cfg = {}) {
    if (mask.data.empty()) throw Error("clean_mask: empty mask");
    const auto offsets = detail::ellipse_offsets(cfg.kernel);
    Mask m = mask;
    for (int i = 0; i < cfg.dilate_iters; ++i) m = detail::dilate(m, offsets);
    for (int i = 0; i < cfg.erode_iters; ++i) m = detail::erode(m, offsets);
    return m;
}

/// One Detection per 8-connected component with area >= min_area, sorted by
/// bbox origin (y, then x). Holes are ignored: only outer boundaries traced.
inline std::vector<Detection> extract_regions(const Mask& mask, const Frame& frame,
                                              const RegionsConfig& cfg = {}) {
    if (mask.width != frame.width || mask.height != frame.height)
        throw Error("extract_regions: mask and frame dimensions differ");
    const int W = mask.width, H = mask.height;
    const int64_t min_area = std::max<int64_t>(
        1, std::llround(cfg.min_area_frac * static_cast<double>(W) * H));

    std::vector<int32_t> label(static_cast<size_t>(W) * H, 0);
    std::vector<Detection> detections;
    std::vector<PointI> stack;
    int32_t next_label = 0;

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const size_t idx = static_cast<size_t>(y) * W + x;
            if (!mask.data[idx] || label[idx]) continue;
            ++next_label;
            const int32_t id = next_label;
            stack.clear();
            stack.push_back({x, y});
            label[idx] = id;
            PointI top_left{x, y};  // topmost, then leftmost (scan order start)
            int min_x = x, max_x = x, min_y = y, max_y = y;
            int64_t area = 0;
            while (!stack.empty()) {
                const PointI p = stack.back();
                stack.pop_back();
                ++area;
                min_x = std::min(min_x, p.x);
                max_x = std::max(max_x, p.x);
                min_y = std::min(min_y, p.y);
                max_y = std::max(max_y, p.y);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dx && !dy) continue;
                        const int nx = p.x + dx, ny = p.y + dy;
                        if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
                        const size_t nidx = static_cast<size_t>(ny) * W + nx;
                        if (mask.data[nidx] && !label[nidx]) {
                            label[nidx] = id;
                            stack.push_back({nx, ny});
                        }
                    }
            }
            if (area < min_area) continue;

            Detection det;
            det.frame_index = frame.index;
            det.area_px = area;
            auto in_component = [&](int px, int py) {
                return px >= 0 && py >= 0 && px < W && py < H &&
                       label[static_cast<size_t>(py) * W + px] == id;
            };
            det.contour = detail::trace_contour(top_left, in_component);
            det.hull = detail::convex_hull(det.contour);
            det.bbox = BBox{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};

            det.mask_patch = make_mask(det.bbox.w, det.bbox.h, 0);
            det.image_patch = make_frame(det.bbox.w, det.bbox.h, frame.channels);
            det.image_patch.index = frame.index;
            det.image_patch.timestamp_ms = frame.timestamp_ms;
            for (int py = 0; py < det.bbox.h; ++py)
                for (int px = 0; px < det.bbox.w; ++px) {
                    const int fx = det.bbox.x + px, fy = det.bbox.y + py;
                    if (label[static_cast<size_t>(fy) * W + fx] == id)
                        det.mask_patch.at(px, py) = 1;
                    for (int c = 0; c < frame.channels; ++c)
                        det.image_patch.at(px, py, c) = frame.at(fx, fy, c);
                }
            detections.push_back(std::move(det));
        }
    }

    std::sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
        if (a.bbox.y != b.bbox.y) return a.bbox.y < b.bbox.y;
        if (a.bbox.x != b.bbox.x) return a.bbox.x < b.bbox.x;
        return a.area_px > b.area_px;
    });
    return detections;
}

}  // namespace vsyn
