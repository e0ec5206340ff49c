#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "motionforge/classifier.hpp"
#include "motionforge/image.hpp"
#include "motionforge/synthesis.hpp"

namespace motionforge::streaming {

struct WindowConfig {
    int window = 25;    // N: retained frames per detection
    int stride = 1;     // k: spacing between retained frames
    int interval = 25;  // frames between successive predictions
    double fps = 25.0;  // metadata for second <-> frame conversion

    void validate() const;
};

inline int seconds_to_frames(double seconds, double fps) {
    return static_cast<int>(std::llround(seconds * fps));
}

// Strided ring buffer over the live stream with per-pixel integer rolling
// sums, so the mean frame costs O(pixels) regardless of the window length.
// Ingested frame indices are 1-based; a frame is retained iff its index is a
// multiple of the stride.
class FrameWindow {
public:
    explicit FrameWindow(int capacity);

    void push(const imaging::ImageBuffer& frame, int stride);
    void reset();

    bool warm() const { return count_ == capacity_; }
    int retained() const { return count_; }
    int capacity() const { return capacity_; }
    std::int64_t last_index() const { return last_index_; }

    // Bit-identical to mean_stack over the retained frames. Throws
    // "warm-up incomplete" while no frame has been retained.
    imaging::ImageBuffer mean_frame() const;

    // Retained frames, oldest first.
    std::vector<const imaging::ImageBuffer*> retained_frames() const;

private:
    int capacity_;
    std::vector<imaging::ImageBuffer> ring_;
    std::vector<std::uint64_t> rolling_sum_;
    int count_ = 0;
    int pos_ = 0;
    std::int64_t last_index_ = 0;
    int width_ = 0;
    int height_ = 0;
};

struct Detection {
    std::int64_t frame_index = 0;
    synthesis::ActionKind action = synthesis::ActionKind::Standing;
    std::array<double, 4> probabilities{};
    bool fall = false;
    std::optional<imaging::ImageBuffer> mean_frame;  // kept only on request
};

// Classifies the current window: mean frame, resized and normalized exactly
// like training batches, through the model. Requires a warm window.
Detection predict_at(const FrameWindow& window, const classifier::ModelArchitecture& arch,
                     const classifier::ParamsF& params, bool keep_mean_frame = false);

// Push-driven detector: emits a Detection at every `interval`-th frame once
// the window is warm.
class StreamDetector {
public:
    StreamDetector(const classifier::ModelArchitecture& arch, const classifier::ParamsF& params,
                   const WindowConfig& cfg, bool keep_mean_frames = false);

    std::optional<Detection> push(const imaging::ImageBuffer& frame);
    void reset();

    const FrameWindow& window() const { return window_; }

private:
    const classifier::ModelArchitecture& arch_;
    const classifier::ParamsF& params_;
    WindowConfig cfg_;
    bool keep_mean_frames_;
    FrameWindow window_;
};

// Runs the detector over a whole in-memory sequence. Sequences too short for
// one warm window yield an empty list.
std::vector<Detection> detect_over_video(const std::vector<imaging::ImageBuffer>& frames,
                                         const classifier::ModelArchitecture& arch,
                                         const classifier::ParamsF& params,
                                         const WindowConfig& cfg,
                                         bool keep_mean_frames = false);

// Throughput measurement over a synthetic random stream; used by the bench
// command and the performance property tests. Warm-up is excluded.
struct ThroughputStats {
    double mean_fps = 0.0;
    double p95_fps = 0.0;
    int frames = 0;
};

// push + mean_frame per frame.
ThroughputStats measure_mean_frame_throughput(int width, int height, const WindowConfig& cfg,
                                              int frames, std::uint64_t seed);

// push + mean_frame + classify per frame (worst-case per-frame cadence).
ThroughputStats measure_pipeline_throughput(const classifier::ModelArchitecture& arch,
                                            const classifier::ParamsF& params,
                                            const WindowConfig& cfg, int width, int height,
                                            int frames, std::uint64_t seed);

}  // namespace motionforge::streaming
