/*
 * vsyn - streaming video synopsis and forensic analytics
 *
 * Licensed under the terms of the Apache 2.0 License.
 * See LICENSE file in the project root for terms.
 */
#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>

#include <json.hpp>

#include "vsyn/core.hpp"

namespace vsyn {

// Frame sequences live on disk as a directory of binary PGM (P5, luma) or
// PPM (P6, RGB) files named 000000.pgm, 000001.pgm, ... plus a stream.json
// sidecar: { "fps": number, "width": int, "height": int, "count": int }.
// Codec-free and bit-exact, so write->read round-trips are the identity.

namespace fs = std::filesystem;

/// Single-consumer stream of frames in ascending index order.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual const StreamMeta& meta() const = 0;
    virtual std::optional<Frame> next() = 0;
};

namespace detail {

inline int pnm_read_token(std::istream& in) {
    // Skips whitespace and '#' comments, then parses one non-negative integer.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) throw Error("pnm: malformed header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

}  // namespace detail

inline Frame read_pnm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    int channels = 0;
    if (m0 == 'P' && m1 == '5') channels = 1;
    else if (m0 == 'P' && m1 == '6') channels = 3;
    else throw Error("unsupported image magic in " + path.string());

    const int width = detail::pnm_read_token(in);
    const int height = detail::pnm_read_token(in);
    const int maxval = detail::pnm_read_token(in);
    if (width <= 0 || height <= 0) throw Error("bad dimensions in " + path.string());
    if (maxval != 255) throw Error("unsupported maxval in " + path.string());

    Frame f = make_frame(width, height, channels);
    in.read(reinterpret_cast<char*>(f.pixels.data()),
            static_cast<std::streamsize>(f.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(f.pixels.size()))
        throw Error("truncated image data in " + path.string());
    return f;
}

inline void write_pnm(const fs::path& path, const Frame& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << (frame.channels == 1 ? "P5" : "P6") << "\n"
        << frame.width << " " << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.pixels.data()),
              static_cast<std::streamsize>(frame.pixels.size()));
    if (!out) throw Error("short write to " + path.string());
}

namespace detail {

inline std::string frame_file_name(int64_t index, int channels) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06lld.%s", static_cast<long long>(index),
                  channels == 1 ? "pgm" : "ppm");
    return buf;
}

inline StreamMeta read_stream_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("unparsable metadata " + path.string() + ": " + e.what());
    }
    StreamMeta meta;
    try {
        meta.fps = j.at("fps").get<double>();
        meta.width = j.at("width").get<int>();
        meta.height = j.at("height").get<int>();
        meta.frame_count = j.at("count").get<int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("unparsable metadata " + path.string() + ": " + e.what());
    }
    if (meta.fps <= 0.0) throw Error("metadata fps must be positive: " + path.string());
    if (meta.frame_count < 0) throw Error("metadata count must be >= 0: " + path.string());
    return meta;
}

inline void write_stream_json(const fs::path& path, const StreamMeta& meta) {
    nlohmann::json j{{"fps", meta.fps},
                     {"width", meta.width},
                     {"height", meta.height},
                     {"count", meta.frame_count}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw Error("short write to " + path.string());
}

}  // namespace detail

/// Reads a directory sequence lazily, one frame per next() call.
class SequenceReader final : public FrameSource {
public:
    SequenceReader(fs::path dir, std::vector<fs::path> files, StreamMeta meta)
        : dir_(std::move(dir)), files_(std::move(files)), meta_(std::move(meta)) {}

    const StreamMeta& meta() const override { return meta_; }

    std::optional<Frame> next() override {
        if (cursor_ >= static_cast<int64_t>(files_.size())) return std::nullopt;
        Frame f = read_pnm(files_[static_cast<size_t>(cursor_)]);
        f.index = cursor_;
        f.timestamp_ms = timestamp_for(cursor_, meta_.fps);
        if (cursor_ == 0) {
            first_width_ = f.width;
            first_height_ = f.height;
            first_channels_ = f.channels;
            if (meta_.width != 0 && (meta_.width != f.width || meta_.height != f.height))
                throw Error("frame 0 does not match metadata dimensions");
        } else if (f.width != first_width_ || f.height != first_height_ ||
                   f.channels != first_channels_) {
            throw Error("inconsistent frame dimensions at index " + std::to_string(cursor_));
        }
        ++cursor_;
        return f;
    }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
    StreamMeta meta_;
    int64_t cursor_ = 0;
    int first_width_ = 0, first_height_ = 0, first_channels_ = 0;
};

/// In-memory source; hands out pre-built frames (test fixtures, synthgen).
class MemorySource final : public FrameSource {
public:
    MemorySource(std::vector<Frame> frames, StreamMeta meta)
        : frames_(std::move(frames)), meta_(std::move(meta)) {
        meta_.frame_count = static_cast<int64_t>(frames_.size());
        if (!frames_.empty()) {
            meta_.width = frames_[0].width;
            meta_.height = frames_[0].height;
        }
    }

    const StreamMeta& meta() const override { return meta_; }

    std::optional<Frame> next() override {
        if (cursor_ >= frames_.size()) return std::nullopt;
        return frames_[cursor_++];
    }

private:
    std::vector<Frame> frames_;
    StreamMeta meta_;
    size_t cursor_ = 0;
};

/// Opens a directory sequence (or a single PGM/PPM file as a 1-frame stream).
/// `override_meta` supplies fps when stream.json is absent and wins over it
/// when present.
inline std::unique_ptr<FrameSource> open_sequence(
    const fs::path& path, std::optional<StreamMeta> override_meta = std::nullopt) {
    if (!fs::exists(path)) throw Error("no such path: " + path.string());

    std::vector<fs::path> files;
    StreamMeta meta;
    bool have_meta = false;

    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (!entry.is_regular_file()) continue;
            const auto ext = entry.path().extension().string();
            if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
            return a.filename().string() < b.filename().string();
        });
        const fs::path sidecar = path / "stream.json";
        if (fs::exists(sidecar)) {
            meta = detail::read_stream_json(sidecar);
            have_meta = true;
        }
    } else {
        files.push_back(path);
    }

    if (override_meta) {
        if (!have_meta) meta = *override_meta;
        else {
            if (override_meta->fps > 0.0) meta.fps = override_meta->fps;
            if (!override_meta->source_id.empty()) meta.source_id = override_meta->source_id;
        }
        have_meta = true;
    }
    if (files.empty()) throw Error("no frames in " + path.string());
    if (!have_meta || meta.fps <= 0.0)
        throw Error("fps unknown for " + path.string() + " (no stream.json and no override)");
    if (have_meta && meta.frame_count > 0 &&
        meta.frame_count != static_cast<int64_t>(files.size()))
        throw Error("metadata count does not match frame files in " + path.string());

    meta.frame_count = static_cast<int64_t>(files.size());
    if (meta.source_id.empty()) meta.source_id = path.string();
    return std::make_unique<SequenceReader>(path, std::move(files), meta);
}

/// Writes frames + stream.json under sink_path (created if missing).
/// Round-trip property: open_sequence(write_sequence(F)) == F pixel-for-pixel.
inline void write_sequence(const fs::path& sink_path, const std::vector<Frame>& frames,
                           StreamMeta meta) {
    if (meta.fps <= 0.0) throw Error("write_sequence: fps must be positive");
    std::error_code ec;
    fs::create_directories(sink_path, ec);
    if (!fs::is_directory(sink_path))
        throw Error("cannot create sink directory " + sink_path.string());

    if (!frames.empty()) {
        if (meta.width == 0) meta.width = frames[0].width;
        if (meta.height == 0) meta.height = frames[0].height;
    }
    for (size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        if ((meta.width != 0 && f.width != meta.width) ||
            (meta.height != 0 && f.height != meta.height) ||
            f.channels != frames[0].channels)
            throw Error("frame dimension mismatch at index " + std::to_string(i));
        write_pnm(sink_path / detail::frame_file_name(static_cast<int64_t>(i), f.channels), f);
    }
    meta.frame_count = static_cast<int64_t>(frames.size());
    detail::write_stream_json(sink_path / "stream.json", meta);
}

/// Incremental writer with the same on-disk layout as write_sequence.
class SequenceWriter {
public:
    SequenceWriter(fs::path sink_path, StreamMeta meta)
        : dir_(std::move(sink_path)), meta_(std::move(meta)) {
        if (meta_.fps <= 0.0) throw Error("SequenceWriter: fps must be positive");
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (!fs::is_directory(dir_)) throw Error("cannot create sink directory " + dir_.string());
    }

    void push(const Frame& frame) {
        if (count_ == 0) {
            if (meta_.width == 0) meta_.width = frame.width;
            if (meta_.height == 0) meta_.height = frame.height;
            channels_ = frame.channels;
        }
        if ((meta_.width != 0 && frame.width != meta_.width) ||
            (meta_.height != 0 && frame.height != meta_.height) || frame.channels != channels_)
            throw Error("frame dimension mismatch at index " + std::to_string(count_));
        write_pnm(dir_ / detail::frame_file_name(count_, frame.channels), frame);
        ++count_;
    }

    /// Writes the sidecar; call once after the last frame.
    void finish() {
        meta_.frame_count = count_;
        detail::write_stream_json(dir_ / "stream.json", meta_);
    }

    int64_t count() const { return count_; }

private:
    fs::path dir_;
    StreamMeta meta_;
    int64_t count_ = 0;
    int channels_ = 1;
};

/// Drains a source into memory. Convenience for batch operations.
inline std::vector<Frame> read_all(FrameSource& source) {
    std::vector<Frame> frames;
    while (auto f = source.next()) frames.push_back(std::move(*f));
    return frames;
}

}  // namespace vsyn
