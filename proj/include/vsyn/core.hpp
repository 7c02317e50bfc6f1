/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsyn {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct PointI {
    int x = 0;
    int y = 0;
    bool operator==(const PointI&) const = default;
};

struct PointF {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const PointF&) const = default;
};

struct BBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    long long area() const { return static_cast<long long>(w) * h; }
    PointF center() const { return {x + w / 2.0, y + h / 2.0}; }
    bool operator==(const BBox&) const = default;
};

/// Positive-area intersection; edge-touching boxes do not collide.
inline bool collides(const BBox& a, const BBox& b) {
    return a.x < b.right() && b.x < a.right() && a.y < b.bottom() && b.y < a.bottom();
}

inline double iou(const BBox& a, const BBox& b) {
    const int ix = std::max(a.x, b.x);
    const int iy = std::max(a.y, b.y);
    const int ix2 = std::min(a.right(), b.right());
    const int iy2 = std::min(a.bottom(), b.bottom());
    if (ix2 <= ix || iy2 <= iy) return 0.0;
    const double inter = static_cast<double>(ix2 - ix) * (iy2 - iy);
    const double uni = static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// One decoded image; the unit flowing through every pipeline stage.
/// Immutable by convention once handed off; safe to share across threads.
struct Frame {
    int64_t index = 0;
    int64_t timestamp_ms = 0;
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 = luma, 3 = RGB
    std::vector<uint8_t> pixels;  // row-major, width*height*channels

    bool empty() const { return pixels.empty(); }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    uint8_t at(int x, int y, int c = 0) const {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    uint8_t& at(int x, int y, int c = 0) {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool operator==(const Frame&) const = default;
};

inline Frame make_frame(int width, int height, int channels, uint8_t fill = 0) {
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3))
        throw Error("make_frame: bad geometry");
    Frame f;
    f.width = width;
    f.height = height;
    f.channels = channels;
    f.pixels.assign(static_cast<size_t>(width) * height * channels, fill);
    return f;
}

struct StreamMeta {
    double fps = 0.0;
    int64_t frame_count = 0;
    int width = 0;
    int height = 0;
    std::string source_id;
};

/// Timestamp of a frame in a constant-fps stream, rounded to the nearest ms.
inline int64_t timestamp_for(int64_t index, double fps) {
    if (fps <= 0.0) throw Error("timestamp_for: fps must be positive");
    return std::llround(static_cast<double>(index) * 1000.0 / fps);
}

/// BT.601 luma; idempotent on single-channel input.
inline Frame to_luma(const Frame& frame) {
    if (frame.channels == 1) return frame;
    if (frame.channels != 3) throw Error("to_luma: expected 1 or 3 channels");
    Frame out;
    out.index = frame.index;
    out.timestamp_ms = frame.timestamp_ms;
    out.width = frame.width;
    out.height = frame.height;
    out.channels = 1;
    out.pixels.resize(frame.pixel_count());
    const uint8_t* src = frame.pixels.data();
    for (size_t i = 0; i < out.pixels.size(); ++i, src += 3) {
        const double y = 0.299 * src[0] + 0.587 * src[1] + 0.114 * src[2];
        out.pixels[i] = static_cast<uint8_t>(std::lround(y));
    }
    return out;
}

/// Binary image; data holds 0/1 per pixel.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;

    uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    size_t count_set() const {
        size_t n = 0;
        for (uint8_t v : data) n += (v != 0);
        return n;
    }
    bool operator==(const Mask&) const = default;
};

inline Mask make_mask(int width, int height, uint8_t fill = 0) {
    if (width <= 0 || height <= 0) throw Error("make_mask: bad geometry");
    return Mask{width, height, std::vector<uint8_t>(static_cast<size_t>(width) * height, fill)};
}

/// Deterministic PRNG (splitmix64). Used everywhere randomness is needed so
/// output never depends on the platform's distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] inclusive.
    int64_t next_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(next_double() * static_cast<double>(hi - lo + 1));
    }

    /// Standard normal via Box-Muller (fixed algorithm, platform independent).
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline uint8_t clamp_u8(double v) {
    if (v <= 0.0) return 0;
    if (v >= 255.0) return 255;
    return static_cast<uint8_t>(std::lround(v));
}

}  // namespace vsyn
