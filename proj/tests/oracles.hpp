// Test-only oracles: independent brute-force implementations used to freeze
// expected values. Deliberately naive; must not share code with the library
// paths they check.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vsyn/core.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Convex hull: a point is a hull vertex iff it is not expressible as a convex
// combination of the others; O(n^3) extreme-point test via half-plane checks.
inline bool is_extreme_point(const std::vector<vsyn::PointI>& pts, size_t idx) {
    // p is extreme iff p is not in the convex hull of the others. By
    // Caratheodory that reduces to: p on a segment between two others, or
    // p strictly inside a non-degenerate triangle of others.
    const vsyn::PointI p = pts[idx];
    auto cross = [](vsyn::PointI o, vsyn::PointI a, vsyn::PointI b) {
        return static_cast<long long>(a.x - o.x) * (b.y - o.y) -
               static_cast<long long>(a.y - o.y) * (b.x - o.x);
    };
    for (size_t i = 0; i < pts.size(); ++i) {
        if (i == idx) continue;
        for (size_t j = i + 1; j < pts.size(); ++j) {
            if (j == idx) continue;
            if (cross(pts[i], pts[j], p) == 0 &&
                p.x >= std::min(pts[i].x, pts[j].x) && p.x <= std::max(pts[i].x, pts[j].x) &&
                p.y >= std::min(pts[i].y, pts[j].y) && p.y <= std::max(pts[i].y, pts[j].y))
                return false;  // convex combination of two others
        }
    }
    for (size_t i = 0; i < pts.size(); ++i) {
        if (i == idx) continue;
        for (size_t j = i + 1; j < pts.size(); ++j) {
            if (j == idx) continue;
            for (size_t k = j + 1; k < pts.size(); ++k) {
                if (k == idx) continue;
                const long long d1 = cross(pts[i], pts[j], p);
                const long long d2 = cross(pts[j], pts[k], p);
                const long long d3 = cross(pts[k], pts[i], p);
                if ((d1 > 0 && d2 > 0 && d3 > 0) || (d1 < 0 && d2 < 0 && d3 < 0))
                    return false;  // strictly inside
            }
        }
    }
    return true;
}

inline std::vector<vsyn::PointI> hull_extreme_points(std::vector<vsyn::PointI> pts) {
    std::sort(pts.begin(), pts.end(), [](auto a, auto b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<vsyn::PointI> out;
    for (size_t i = 0; i < pts.size(); ++i)
        if (is_extreme_point(pts, i)) out.push_back(pts[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Dense morphology with the same boundary conventions the spec describes:
// dilation ORs the neighborhood, erosion ANDs it ignoring out-of-bounds.
inline vsyn::Mask naive_dilate(const vsyn::Mask& in, const std::vector<vsyn::PointI>& se) {
    vsyn::Mask out = vsyn::make_mask(in.width, in.height, 0);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            bool any = false;
            for (const auto& o : se) {
                const int sx = x - o.x, sy = y - o.y;
                if (sx >= 0 && sy >= 0 && sx < in.width && sy < in.height && in.at(sx, sy))
                    any = true;
            }
            out.at(x, y) = any ? 1 : 0;
        }
    return out;
}

inline vsyn::Mask naive_erode(const vsyn::Mask& in, const std::vector<vsyn::PointI>& se) {
    vsyn::Mask out = vsyn::make_mask(in.width, in.height, 0);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            bool all = true;
            for (const auto& o : se) {
                const int sx = x + o.x, sy = y + o.y;
                if (sx >= 0 && sy >= 0 && sx < in.width && sy < in.height && !in.at(sx, sy))
                    all = false;
            }
            out.at(x, y) = all && in.at(x, y) ? 1 : 0;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Center-prediction formulas, summed exactly as printed.
inline vsyn::PointF predict_short_history(const std::vector<vsyn::PointF>& c) {
    const size_t i = c.size() - 1;
    double dx = 0.0, dy = 0.0, den = 0.0;
    for (size_t n = 0; n + 1 <= i; ++n) {
        dx += (c[n + 1].x - c[n].x) * static_cast<double>(n + 1);
        dy += (c[n + 1].y - c[n].y) * static_cast<double>(n + 1);
        den += static_cast<double>(n + 1);
    }
    return {dx / den, dy / den};
}

inline vsyn::PointF predict_window10(const std::vector<vsyn::PointF>& c) {
    const size_t i = c.size() - 1;
    double dx = 0.0, dy = 0.0;
    for (size_t n = 1; n <= 10; ++n) {
        dx += (c[i].x - c[i - n].x) * static_cast<double>(10 - n) / 45.0;
        dy += (c[i].y - c[i - n].y) * static_cast<double>(10 - n) / 45.0;
    }
    return {dx, dy};
}

// ---------------------------------------------------------------------------
// Brute-force FIFO scheduler simulation, straight from the algorithm listing.
// Tubes are sequences of boxes; returns every step's placed (tube, frame)
// pairs. Assumes tubes are indexed in chronological (id) order.
struct SimPlacement {
    int tube;
    int frame;  // index within the tube
};

inline std::vector<std::vector<SimPlacement>> simulate_scheduler(
    const std::vector<std::vector<vsyn::BBox>>& tubes, int cluster_size) {
    std::vector<int> cursor(tubes.size(), 0);
    std::vector<int> cluster;  // tube indices, ascending
    size_t next_tube = 0;
    std::vector<std::vector<SimPlacement>> steps;

    auto overlaps = [](const vsyn::BBox& a, const vsyn::BBox& b) {
        return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
    };

    while (true) {
        while (static_cast<int>(cluster.size()) < cluster_size && next_tube < tubes.size())
            cluster.push_back(static_cast<int>(next_tube++));
        if (cluster.empty()) break;

        std::vector<SimPlacement> placed;
        std::vector<vsyn::BBox> boxes;
        for (int t : cluster) {
            const vsyn::BBox& b = tubes[static_cast<size_t>(t)][static_cast<size_t>(cursor[t])];
            bool fits = true;
            for (const vsyn::BBox& o : boxes)
                if (overlaps(o, b)) {
                    fits = false;
                    break;
                }
            if (!fits) continue;
            placed.push_back({t, cursor[t]});
            boxes.push_back(b);
            ++cursor[t];
        }
        std::vector<int> still;
        for (int t : cluster)
            if (cursor[t] < static_cast<int>(tubes[static_cast<size_t>(t)].size()))
                still.push_back(t);
        cluster = std::move(still);
        steps.push_back(std::move(placed));
    }
    return steps;
}

// ---------------------------------------------------------------------------
// Sliding-window robust z-score recomputed from first principles.
inline double robust_z_at(const std::vector<double>& v, int t, int window) {
    const int half = std::max(1, window / 2);
    std::vector<double> w;
    for (int j = std::max(0, t - half); j <= std::min<int>(static_cast<int>(v.size()) - 1, t + half);
         ++j)
        if (j != t) w.push_back(v[static_cast<size_t>(j)]);
    if (w.size() < 2) return 0.0;
    std::sort(w.begin(), w.end());
    const double med = w[w.size() / 2];
    for (double& x : w) x = std::fabs(x - med);
    std::sort(w.begin(), w.end());
    const double mad = w[w.size() / 2];
    const double sigma = std::max(1.4826 * mad, 1e-3 + 0.01 * std::fabs(med));
    return std::fabs(v[static_cast<size_t>(t)] - med) / sigma;
}

// ---------------------------------------------------------------------------
// Two-pass population variance.
inline double population_variance(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(xs.size());
}

// ---------------------------------------------------------------------------
// Cumulative precision/recall from a TP/FP/NP table, summed directly.
struct PrPoint {
    double precision;
    double recall;
};

inline std::vector<PrPoint> pr_series(const std::vector<std::array<int64_t, 3>>& tp_fp_np) {
    int64_t total_np = 0;
    for (const auto& row : tp_fp_np) total_np += row[2];
    std::vector<PrPoint> out;
    int64_t ctp = 0, cden = 0;
    for (const auto& row : tp_fp_np) {
        ctp += row[0];
        cden += row[0] + row[1];
        out.push_back({cden > 0 ? static_cast<double>(ctp) / static_cast<double>(cden) : 1.0,
                       static_cast<double>(ctp) / static_cast<double>(total_np)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Naive Harris response map (double precision, independent loops).
inline std::vector<double> naive_harris(const vsyn::Frame& f) {
    const int W = f.width, H = f.height;
    std::vector<double> gx(static_cast<size_t>(W) * H, 0.0), gy(gx), resp(gx);
    for (int y = 1; y < H - 1; ++y)
        for (int x = 1; x < W - 1; ++x) {
            gx[static_cast<size_t>(y) * W + x] = (f.at(x + 1, y) - f.at(x - 1, y)) / 2.0;
            gy[static_cast<size_t>(y) * W + x] = (f.at(x, y + 1) - f.at(x, y - 1)) / 2.0;
        }
    for (int y = 2; y < H - 2; ++y)
        for (int x = 2; x < W - 2; ++x) {
            double a = 0, b = 0, c = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const size_t i = static_cast<size_t>(y + dy) * W + (x + dx);
                    a += gx[i] * gx[i];
                    b += gx[i] * gy[i];
                    c += gy[i] * gy[i];
                }
            resp[static_cast<size_t>(y) * W + x] = a * c - b * b - 0.04 * (a + c) * (a + c);
        }
    return resp;
}

}  // namespace oracle
