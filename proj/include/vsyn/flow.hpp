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

struct FlowConfig {
    int levels = 3;     // pyramid depth
    int search_px = 4;  // +- search radius per level
    int block_px = 8;
    int bins = 9;  // orientation histogram bins over 360 degrees
};

/// Dense per-pixel displacement, prev -> next, in pixels/frame.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> u, v;

    float u_at(int x, int y) const { return u[static_cast<size_t>(y) * width + x]; }
    float v_at(int x, int y) const { return v[static_cast<size_t>(y) * width + x]; }
};

namespace detail {

inline uint8_t sample_clamped(const Frame& f, int x, int y) {
    x = std::clamp(x, 0, f.width - 1);
    y = std::clamp(y, 0, f.height - 1);
    return f.pixels[static_cast<size_t>(y) * f.width + x];
}

inline Frame downsample2(const Frame& f) {
    Frame out = make_frame(std::max(1, f.width / 2), std::max(1, f.height / 2), 1);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            const int sx = 2 * x, sy = 2 * y;
            const int sum = sample_clamped(f, sx, sy) + sample_clamped(f, sx + 1, sy) +
                            sample_clamped(f, sx, sy + 1) + sample_clamped(f, sx + 1, sy + 1);
            out.at(x, y) = static_cast<uint8_t>((sum + 2) / 4);
        }
    return out;
}

struct SadResult {
    int64_t sad = 0;
    int count = 0;  // pixels where both samples are in bounds

    double mean() const { return count > 0 ? static_cast<double>(sad) / count : 1e18; }
};

/// SAD over the in-bounds intersection only. Clamp-replicated borders would
/// make partial blocks match arbitrary displacements equally well.
inline SadResult block_sad(const Frame& prev, const Frame& next, int x0, int y0, int dx,
                           int dy, int block) {
    const int i_lo = std::max({0, -x0, -x0 - dx});
    const int i_hi = std::min({block, prev.width - x0, prev.width - x0 - dx});
    const int j_lo = std::max({0, -y0, -y0 - dy});
    const int j_hi = std::min({block, prev.height - y0, prev.height - y0 - dy});
    SadResult r;
    if (i_lo >= i_hi || j_lo >= j_hi) return r;
    for (int j = j_lo; j < j_hi; ++j) {
        const uint8_t* prow = prev.pixels.data() + static_cast<size_t>(y0 + j) * prev.width + x0;
        const uint8_t* nrow = next.pixels.data() +
                              static_cast<size_t>(y0 + j + dy) * next.width + x0 + dx;
        for (int i = i_lo; i < i_hi; ++i)
            r.sad += std::abs(static_cast<int>(prow[i]) - static_cast<int>(nrow[i]));
    }
    r.count = (i_hi - i_lo) * (j_hi - j_lo);
    return r;
}

struct BlockGrid {
    int bw = 0, bh = 0;
    std::vector<float> u, v;
};

}  // namespace detail

/// Coarse-to-fine pyramidal block matching with quadratic sub-pixel
/// refinement at the finest level. Textureless input yields near-zero flow
/// (ties resolve to the smallest displacement); callers must not trust it.
inline FlowField dense_flow(const Frame& prev, const Frame& next, const FlowConfig& cfg = {}) {
    if (prev.channels != 1 || next.channels != 1)
        throw Error("dense_flow: single-channel frames required");
    if (prev.width != next.width || prev.height != next.height)
        throw Error("dense_flow: frame dimensions differ");

    const int block = cfg.block_px;
    std::vector<Frame> pyr_prev{prev}, pyr_next{next};
    while (static_cast<int>(pyr_prev.size()) < cfg.levels &&
           std::min(pyr_prev.back().width, pyr_prev.back().height) >= 2 * block) {
        pyr_prev.push_back(detail::downsample2(pyr_prev.back()));
        pyr_next.push_back(detail::downsample2(pyr_next.back()));
    }

    detail::BlockGrid coarser;
    for (int level = static_cast<int>(pyr_prev.size()) - 1; level >= 0; --level) {
        const Frame& p = pyr_prev[static_cast<size_t>(level)];
        const Frame& n = pyr_next[static_cast<size_t>(level)];
        detail::BlockGrid grid;
        grid.bw = (p.width + block - 1) / block;
        grid.bh = (p.height + block - 1) / block;
        grid.u.assign(static_cast<size_t>(grid.bw) * grid.bh, 0.0f);
        grid.v.assign(static_cast<size_t>(grid.bw) * grid.bh, 0.0f);

        for (int by = 0; by < grid.bh; ++by) {
            for (int bx = 0; bx < grid.bw; ++bx) {
                const int x0 = bx * block, y0 = by * block;
                int gx = 0, gy = 0;
                if (coarser.bw > 0) {
                    const int cx = std::min((x0 + block / 2) / 2 / block, coarser.bw - 1);
                    const int cy = std::min((y0 + block / 2) / 2 / block, coarser.bh - 1);
                    const size_t ci = static_cast<size_t>(cy) * coarser.bw + cx;
                    gx = static_cast<int>(std::lround(2.0f * coarser.u[ci]));
                    gy = static_cast<int>(std::lround(2.0f * coarser.v[ci]));
                }
                const int min_count = block * block / 2;
                int best_dx = gx, best_dy = gy;
                double best_cost = -1.0;
                // Search around the propagated guess AND around zero: a bad
                // coarse-level lock must not poison every finer level.
                auto consider = [&](int dx, int dy) {
                    const detail::SadResult r = detail::block_sad(p, n, x0, y0, dx, dy, block);
                    if (r.count < min_count) return;
                    const double cost = r.mean();
                    const long long mag =
                        static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy;
                    const long long best_mag = static_cast<long long>(best_dx) * best_dx +
                                               static_cast<long long>(best_dy) * best_dy;
                    if (best_cost < 0.0 || cost < best_cost ||
                        (cost == best_cost &&
                         (mag < best_mag ||
                          (mag == best_mag &&
                           (dy < best_dy || (dy == best_dy && dx < best_dx)))))) {
                        best_cost = cost;
                        best_dx = dx;
                        best_dy = dy;
                    }
                };
                for (int dy = gy - cfg.search_px; dy <= gy + cfg.search_px; ++dy)
                    for (int dx = gx - cfg.search_px; dx <= gx + cfg.search_px; ++dx)
                        consider(dx, dy);
                if (gx != 0 || gy != 0)
                    for (int dy = -cfg.search_px; dy <= cfg.search_px; ++dy)
                        for (int dx = -cfg.search_px; dx <= cfg.search_px; ++dx) {
                            if (std::abs(dx - gx) <= cfg.search_px &&
                                std::abs(dy - gy) <= cfg.search_px)
                                continue;  // already covered by the guess window
                            consider(dx, dy);
                        }

                // Blocks too small to match keep the propagated guess.
                float fx = static_cast<float>(best_dx), fy = static_cast<float>(best_dy);
                if (level == 0 && best_cost >= 0.0) {
                    // Parabolic refinement per axis.
                    const double c0 = best_cost;
                    const detail::SadResult rxm =
                        detail::block_sad(p, n, x0, y0, best_dx - 1, best_dy, block);
                    const detail::SadResult rxp =
                        detail::block_sad(p, n, x0, y0, best_dx + 1, best_dy, block);
                    const double dx_denom = rxm.mean() - 2 * c0 + rxp.mean();
                    if (rxm.count >= min_count && rxp.count >= min_count && dx_denom > 0.0)
                        fx += static_cast<float>(
                            std::clamp(0.5 * (rxm.mean() - rxp.mean()) / dx_denom, -0.5, 0.5));
                    const detail::SadResult rym =
                        detail::block_sad(p, n, x0, y0, best_dx, best_dy - 1, block);
                    const detail::SadResult ryp =
                        detail::block_sad(p, n, x0, y0, best_dx, best_dy + 1, block);
                    const double dy_denom = rym.mean() - 2 * c0 + ryp.mean();
                    if (rym.count >= min_count && ryp.count >= min_count && dy_denom > 0.0)
                        fy += static_cast<float>(
                            std::clamp(0.5 * (rym.mean() - ryp.mean()) / dy_denom, -0.5, 0.5));
                }
                const size_t bi = static_cast<size_t>(by) * grid.bw + bx;
                grid.u[bi] = fx;
                grid.v[bi] = fy;
            }
        }
        coarser = std::move(grid);
    }

    FlowField field;
    field.width = prev.width;
    field.height = prev.height;
    field.u.resize(prev.pixel_count());
    field.v.resize(prev.pixel_count());
    for (int y = 0; y < prev.height; ++y) {
        const int by = std::min(y / block, coarser.bh - 1);
        for (int x = 0; x < prev.width; ++x) {
            const int bx = std::min(x / block, coarser.bw - 1);
            const size_t bi = static_cast<size_t>(by) * coarser.bw + bx;
            const size_t pi = static_cast<size_t>(y) * prev.width + x;
            field.u[pi] = coarser.u[bi];
            field.v[pi] = coarser.v[bi];
        }
    }
    return field;
}

/// Harris corners: at most max_n local response maxima with a minimum mutual
/// spacing of `min_spacing` pixels, strongest first.
inline std::vector<PointI> corner_features(const Frame& frame, int max_n,
                                           int min_spacing = 8, double quality = 0.01) {
    if (frame.channels != 1) throw Error("corner_features: single-channel frame required");
    if (max_n <= 0) return {};
    const int W = frame.width, H = frame.height;
    if (W < 5 || H < 5) return {};

    std::vector<float> ix(static_cast<size_t>(W) * H, 0.0f), iy(ix), resp(ix);
    for (int y = 1; y < H - 1; ++y)
        for (int x = 1; x < W - 1; ++x) {
            const size_t i = static_cast<size_t>(y) * W + x;
            ix[i] = 0.5f * (static_cast<float>(frame.at(x + 1, y)) - frame.at(x - 1, y));
            iy[i] = 0.5f * (static_cast<float>(frame.at(x, y + 1)) - frame.at(x, y - 1));
        }
    double max_resp = 0.0;
    for (int y = 2; y < H - 2; ++y)
        for (int x = 2; x < W - 2; ++x) {
            double sxx = 0.0, sxy = 0.0, syy = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const size_t i = static_cast<size_t>(y + dy) * W + (x + dx);
                    sxx += static_cast<double>(ix[i]) * ix[i];
                    sxy += static_cast<double>(ix[i]) * iy[i];
                    syy += static_cast<double>(iy[i]) * iy[i];
                }
            const double det = sxx * syy - sxy * sxy;
            const double tr = sxx + syy;
            const double r = det - 0.04 * tr * tr;
            resp[static_cast<size_t>(y) * W + x] = static_cast<float>(r);
            max_resp = std::max(max_resp, r);
        }
    if (max_resp <= 0.0) return {};
    const float threshold = static_cast<float>(quality * max_resp);

    struct Cand {
        float r;
        int x, y;
    };
    std::vector<Cand> cands;
    for (int y = 2; y < H - 2; ++y)
        for (int x = 2; x < W - 2; ++x) {
            const float r = resp[static_cast<size_t>(y) * W + x];
            if (r < threshold || r <= 0.0f) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!dx && !dy) continue;
                    if (resp[static_cast<size_t>(y + dy) * W + (x + dx)] > r) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) cands.push_back({r, x, y});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.r != b.r) return a.r > b.r;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });

    std::vector<PointI> points;
    const int spacing2 = min_spacing * min_spacing;
    for (const Cand& c : cands) {
        bool ok = true;
        for (const PointI& p : points) {
            const int dx = p.x - c.x, dy = p.y - c.y;
            if (dx * dx + dy * dy < spacing2) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        points.push_back({c.x, c.y});
        if (static_cast<int>(points.size()) >= max_n) break;
    }
    return points;
}

/// Per-block orientation histograms; bin value accumulates flow magnitude.
struct BlockHistograms {
    int blocks_x = 0, blocks_y = 0, bins = 9, block_px = 8;
    std::vector<double> data;  // [by][bx][bin]

    double at(int bx, int by, int bin) const {
        return data[(static_cast<size_t>(by) * blocks_x + bx) * bins + bin];
    }
    double& at(int bx, int by, int bin) {
        return data[(static_cast<size_t>(by) * blocks_x + bx) * bins + bin];
    }
    double total() const {
        double s = 0.0;
        for (double v : data) s += v;
        return s;
    }
};

/// Orientation bin of a flow vector: atan2 mapped to [0, 360), bins of
/// 360/bins degrees. Total and exclusive over all angles.
inline int orientation_bin(double u, double v, int bins) {
    double ang = std::atan2(v, u) * 180.0 / 3.14159265358979323846;
    if (ang < 0.0) ang += 360.0;
    if (ang >= 360.0) ang = 0.0;
    return std::min(bins - 1, static_cast<int>(ang / (360.0 / bins)));
}

/// Accumulates every pixel's vector, or only the given sparse points.
inline BlockHistograms block_histograms(const FlowField& field,
                                        const std::vector<PointI>* points = nullptr,
                                        int bins = 9, int block_px = 8) {
    if (bins < 1 || block_px < 1) throw Error("block_histograms: bad geometry");
    BlockHistograms h;
    h.bins = bins;
    h.block_px = block_px;
    h.blocks_x = (field.width + block_px - 1) / block_px;
    h.blocks_y = (field.height + block_px - 1) / block_px;
    h.data.assign(static_cast<size_t>(h.blocks_x) * h.blocks_y * bins, 0.0);

    auto add = [&](int x, int y) {
        const size_t i = static_cast<size_t>(y) * field.width + x;
        const double mag = std::sqrt(static_cast<double>(field.u[i]) * field.u[i] +
                                     static_cast<double>(field.v[i]) * field.v[i]);
        if (mag <= 0.0) return;
        h.at(x / block_px, y / block_px, orientation_bin(field.u[i], field.v[i], bins)) += mag;
    };
    if (points) {
        for (const PointI& p : *points)
            if (p.x >= 0 && p.y >= 0 && p.x < field.width && p.y < field.height) add(p.x, p.y);
    } else {
        for (int y = 0; y < field.height; ++y)
            for (int x = 0; x < field.width; ++x) add(x, y);
    }
    return h;
}

struct FlowStats {
    double total = 0.0;     // sum of magnitudes
    double variance = 0.0;  // population variance of per-pixel magnitudes
};

inline FlowStats flow_stats(const FlowField& field) {
    const size_t n = field.u.size();
    if (n == 0) return {};
    double sum = 0.0, sum2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double mag = std::sqrt(static_cast<double>(field.u[i]) * field.u[i] +
                                     static_cast<double>(field.v[i]) * field.v[i]);
        sum += mag;
        sum2 += mag * mag;
    }
    const double mean = sum / static_cast<double>(n);
    return {sum, std::max(0.0, sum2 / static_cast<double>(n) - mean * mean)};
}

}  // namespace vsyn
