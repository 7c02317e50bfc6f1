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

enum class PixelLabel : uint8_t { Background = 0, Shadow = 1, Foreground = 2 };

/// Three-way per-pixel classification produced by BackgroundModel::apply.
struct LabelMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> labels;  // PixelLabel values

    PixelLabel at(int x, int y) const {
        return static_cast<PixelLabel>(labels[static_cast<size_t>(y) * width + x]);
    }

    /// Binary view: 1 for FOREGROUND only; shadows are discarded downstream.
    Mask foreground() const {
        Mask m{width, height, std::vector<uint8_t>(labels.size(), 0)};
        for (size_t i = 0; i < labels.size(); ++i)
            m.data[i] = labels[i] == static_cast<uint8_t>(PixelLabel::Foreground) ? 1 : 0;
        return m;
    }

    size_t count(PixelLabel label) const {
        size_t n = 0;
        for (uint8_t v : labels) n += (v == static_cast<uint8_t>(label));
        return n;
    }
};

struct BgConfig {
    int history = 100;              // sliding sample window length
    double var_threshold = 25.0;    // squared-Mahalanobis acceptance bound
    double shadow_threshold = 0.5;  // luminance-ratio lower bound for shadows
    int max_components = 5;
};

/// Per-pixel adaptive Gaussian mixture with shadow labeling.
///
/// The sliding sample window is approximated recursively with learning rate
/// 1/min(frames_seen, history); component count per pixel grows and shrinks
/// with the data. Components keep one shared variance across channels.
/// Strictly sequential per stream: apply() mutates the model.
class BackgroundModel {
public:
    explicit BackgroundModel(BgConfig config = {}) : cfg_(config) {
        if (cfg_.history < 1 || cfg_.max_components < 1 || cfg_.max_components > 8 ||
            cfg_.var_threshold <= 0.0 || cfg_.shadow_threshold < 0.0 ||
            cfg_.shadow_threshold >= 1.0)
            throw Error("BackgroundModel: bad configuration");
    }

    const BgConfig& config() const { return cfg_; }
    int64_t frames_seen() const { return frames_seen_; }
    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }

    LabelMask apply(const Frame& frame) {
        if (frames_seen_ == 0) {
            init_geometry(frame);
        } else if (frame.width != width_ || frame.height != height_ ||
                   frame.channels != channels_) {
            throw Error("BackgroundModel: frame does not match model dimensions");
        }
        ++frames_seen_;
        const double alpha = 1.0 / static_cast<double>(
                                 std::min<int64_t>(frames_seen_, cfg_.history));

        LabelMask mask{width_, height_, std::vector<uint8_t>(frame.pixel_count())};
        const int K = cfg_.max_components;
        const size_t npx = frame.pixel_count();
        for (size_t p = 0; p < npx; ++p) {
            const uint8_t* x = frame.pixels.data() + p * channels_;
            mask.labels[p] = static_cast<uint8_t>(classify_and_update(p, x, alpha, K));
        }
        return mask;
    }

    /// Current background estimate: per-pixel mean of the dominant component.
    Frame snapshot() const {
        if (frames_seen_ == 0) throw Error("BackgroundModel: no frames processed");
        Frame f = make_frame(width_, height_, channels_);
        for (size_t p = 0; p < static_cast<size_t>(width_) * height_; ++p) {
            const size_t base = comp_base(p, 0);
            for (int c = 0; c < channels_; ++c)
                f.pixels[p * channels_ + c] = clamp_u8(mean_[base * channels_ + c]);
        }
        return f;
    }

    /// Invariant probes used by tests.
    double weight_sum(size_t pixel) const {
        double s = 0.0;
        for (int k = 0; k < ncomp_[pixel]; ++k) s += weight_[comp_base(pixel, k)];
        return s;
    }
    double min_variance() const {
        double v = kVarInit;
        for (size_t p = 0; p < ncomp_.size(); ++p)
            for (int k = 0; k < ncomp_[p]; ++k)
                v = std::min(v, static_cast<double>(var_[comp_base(p, k)]));
        return v;
    }

    static constexpr double kVarInit = 225.0;
    static constexpr double kVarFloor = 4.0;
    static constexpr double kBackgroundRatio = 0.9;  // dominant-mass cutoff
    static constexpr double kPruneWeight = 1e-4;
    static constexpr double kShadowChromaSpread = 0.12;

private:
    void init_geometry(const Frame& frame) {
        width_ = frame.width;
        height_ = frame.height;
        channels_ = frame.channels;
        const size_t npx = frame.pixel_count();
        const size_t slots = npx * static_cast<size_t>(cfg_.max_components);
        weight_.assign(slots, 0.0f);
        var_.assign(slots, static_cast<float>(kVarInit));
        mean_.assign(slots * channels_, 0.0f);
        ncomp_.assign(npx, 0);
    }

    size_t comp_base(size_t pixel, int k) const {
        return pixel * static_cast<size_t>(cfg_.max_components) + static_cast<size_t>(k);
    }

    PixelLabel classify_and_update(size_t p, const uint8_t* x, double alpha, int K) {
        const int n = ncomp_[p];

        // Squared Mahalanobis to each component (shared per-channel variance).
        double best_d2 = 1e30;
        int best_k = -1;
        double d2[8];
        for (int k = 0; k < n; ++k) {
            const size_t b = comp_base(p, k);
            double ss = 0.0;
            for (int c = 0; c < channels_; ++c) {
                const double d = static_cast<double>(x[c]) - mean_[b * channels_ + c];
                ss += d * d;
            }
            d2[k] = ss / var_[b];
            if (d2[k] < best_d2) {
                best_d2 = d2[k];
                best_k = k;
            }
        }
        const bool matched = best_k >= 0 && best_d2 <= cfg_.var_threshold;

        // Classification against the pre-update state. Components are kept in
        // descending weight order; the prefix holding kBackgroundRatio of the
        // total mass is the background set.
        PixelLabel label = PixelLabel::Foreground;
        if (n > 0) {
            double total = 0.0;
            for (int k = 0; k < n; ++k) total += weight_[comp_base(p, k)];
            double cum = 0.0;
            bool is_bg = false;
            for (int k = 0; k < n && cum < kBackgroundRatio * total; ++k) {
                if (d2[k] <= cfg_.var_threshold) {
                    is_bg = true;
                    break;
                }
                cum += weight_[comp_base(p, k)];
            }
            if (is_bg) {
                label = PixelLabel::Background;
            } else {
                label = shadow_or_foreground(p, x);
            }
        }

        update(p, x, alpha, matched, best_k, K);
        return label;
    }

    PixelLabel shadow_or_foreground(size_t p, const uint8_t* x) const {
        // Darkness ratio against the dominant component's mean. A pixel more
        // than twice darker than the background is no shadow.
        const size_t b = comp_base(p, 0);
        if (channels_ == 1) {
            const double bg = mean_[b];
            if (bg <= 0.0) return PixelLabel::Foreground;
            const double ratio = static_cast<double>(x[0]) / bg;
            if (ratio >= cfg_.shadow_threshold && ratio < 1.0) return PixelLabel::Shadow;
            return PixelLabel::Foreground;
        }
        double rmin = 1e30, rmax = -1e30, rsum = 0.0;
        for (int c = 0; c < channels_; ++c) {
            const double bg = mean_[b * channels_ + c];
            if (bg <= 0.0) return PixelLabel::Foreground;
            const double r = static_cast<double>(x[c]) / bg;
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
            rsum += r;
        }
        const double ratio = rsum / channels_;
        if (ratio >= cfg_.shadow_threshold && ratio < 1.0 &&
            rmax - rmin <= kShadowChromaSpread)
            return PixelLabel::Shadow;
        return PixelLabel::Foreground;
    }

    void update(size_t p, const uint8_t* x, double alpha, bool matched, int best_k, int K) {
        int n = ncomp_[p];
        if (matched) {
            for (int k = 0; k < n; ++k) {
                const size_t b = comp_base(p, k);
                if (k == best_k) {
                    weight_[b] += static_cast<float>(alpha * (1.0 - weight_[b]));
                    double rho = alpha / weight_[b];
                    rho = std::clamp(rho, alpha, 1.0);
                    double ss = 0.0;
                    for (int c = 0; c < channels_; ++c) {
                        const double d = static_cast<double>(x[c]) - mean_[b * channels_ + c];
                        ss += d * d;
                        mean_[b * channels_ + c] += static_cast<float>(rho * d);
                    }
                    const double target = ss / channels_;
                    double v = var_[b] + rho * (target - var_[b]);
                    var_[b] = static_cast<float>(std::max(v, kVarFloor));
                } else {
                    weight_[b] -= static_cast<float>(alpha * weight_[b]);
                }
            }
        } else {
            // New evidence: decay everyone, then add a fresh component,
            // evicting the weakest slot when the pixel is full.
            for (int k = 0; k < n; ++k) {
                const size_t b = comp_base(p, k);
                weight_[b] -= static_cast<float>(alpha * weight_[b]);
            }
            int slot = n;
            if (n == K) slot = n - 1;  // components sorted by weight; last is weakest
            else ncomp_[p] = static_cast<uint8_t>(n + 1);
            const size_t b = comp_base(p, slot);
            weight_[b] = static_cast<float>(alpha);
            var_[b] = static_cast<float>(kVarInit);
            for (int c = 0; c < channels_; ++c)
                mean_[b * channels_ + c] = static_cast<float>(x[c]);
        }
        n = ncomp_[p];

        // Drop components that have decayed to noise.
        int kept = 0;
        for (int k = 0; k < n; ++k) {
            const size_t b = comp_base(p, k);
            if (weight_[b] > kPruneWeight) {
                if (kept != k) copy_component(p, k, kept);
                ++kept;
            }
        }
        if (kept == 0) kept = 1;  // never drop the last component
        ncomp_[p] = static_cast<uint8_t>(kept);
        n = kept;

        // Keep ≤ 1 total mass and descending weight order (insertion sort,
        // stable, n ≤ max_components).
        double total = 0.0;
        for (int k = 0; k < n; ++k) total += weight_[comp_base(p, k)];
        if (total > 1.0) {
            const double inv = 1.0 / total;
            for (int k = 0; k < n; ++k)
                weight_[comp_base(p, k)] = static_cast<float>(weight_[comp_base(p, k)] * inv);
        }
        for (int k = 1; k < n; ++k) {
            int j = k;
            while (j > 0 && weight_[comp_base(p, j - 1)] < weight_[comp_base(p, j)]) {
                swap_components(p, j - 1, j);
                --j;
            }
        }
    }

    void copy_component(size_t p, int from, int to) {
        const size_t bf = comp_base(p, from), bt = comp_base(p, to);
        weight_[bt] = weight_[bf];
        var_[bt] = var_[bf];
        for (int c = 0; c < channels_; ++c)
            mean_[bt * channels_ + c] = mean_[bf * channels_ + c];
    }

    void swap_components(size_t p, int a, int b) {
        const size_t ba = comp_base(p, a), bb = comp_base(p, b);
        std::swap(weight_[ba], weight_[bb]);
        std::swap(var_[ba], var_[bb]);
        for (int c = 0; c < channels_; ++c)
            std::swap(mean_[ba * channels_ + c], mean_[bb * channels_ + c]);
    }

    BgConfig cfg_;
    int width_ = 0, height_ = 0, channels_ = 1;
    int64_t frames_seen_ = 0;
    std::vector<float> weight_;
    std::vector<float> var_;
    std::vector<float> mean_;
    std::vector<uint8_t> ncomp_;
};

}  // namespace vsyn
