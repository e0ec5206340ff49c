#include "motionforge/streaming.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "motionforge/dataset.hpp"
#include "motionforge/imaging.hpp"
#include "motionforge/rng.hpp"

namespace motionforge::streaming {

using imaging::ImageBuffer;

void WindowConfig::validate() const {
    if (window < 1) throw std::invalid_argument("window length must be >= 1");
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    if (interval < 1) throw std::invalid_argument("detection interval must be >= 1");
    if (!(fps > 0.0)) throw std::invalid_argument("fps must be > 0");
}

FrameWindow::FrameWindow(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("window capacity must be >= 1");
    ring_.resize(capacity);
}

void FrameWindow::reset() {
    count_ = 0;
    pos_ = 0;
    last_index_ = 0;
    width_ = 0;
    height_ = 0;
    rolling_sum_.clear();
}

void FrameWindow::push(const ImageBuffer& frame, int stride) {
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    ++last_index_;
    if (last_index_ % stride != 0) return;

    if (width_ == 0) {
        width_ = frame.width;
        height_ = frame.height;
        rolling_sum_.assign(frame.data.size(), 0);
    } else if (frame.width != width_ || frame.height != height_) {
        throw std::runtime_error("frame dimensions changed mid-stream");
    }

    auto& slot = ring_[pos_];
    const std::size_t samples = frame.data.size();
    std::uint64_t* sum = rolling_sum_.data();
    if (count_ == capacity_) {
        const std::uint8_t* old = slot.data.data();
        const std::uint8_t* fresh = frame.data.data();
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(samples); ++i) {
            sum[i] += fresh[i];
            sum[i] -= old[i];
        }
    } else {
        const std::uint8_t* fresh = frame.data.data();
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(samples); ++i) {
            sum[i] += fresh[i];
        }
        ++count_;
    }
    slot = frame;
    pos_ = (pos_ + 1) % capacity_;
}

ImageBuffer FrameWindow::mean_frame() const {
    if (count_ == 0) throw std::runtime_error("warm-up incomplete: no retained frames");
    ImageBuffer out(width_, height_);
    const std::uint64_t n = static_cast<std::uint64_t>(count_);
    const std::uint64_t* sum = rolling_sum_.data();
    std::uint8_t* dst = out.data.data();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(out.data.size()); ++i) {
        dst[i] = imaging::mean_quantize(sum[i], n);
    }
    return out;
}

std::vector<const ImageBuffer*> FrameWindow::retained_frames() const {
    std::vector<const ImageBuffer*> frames;
    frames.reserve(count_);
    const int start = count_ == capacity_ ? pos_ : 0;
    for (int i = 0; i < count_; ++i) {
        frames.push_back(&ring_[(start + i) % capacity_]);
    }
    return frames;
}

Detection predict_at(const FrameWindow& window, const classifier::ModelArchitecture& arch,
                     const classifier::ParamsF& params, bool keep_mean_frame) {
    if (!window.warm()) {
        throw std::runtime_error("warm-up incomplete: window not full");
    }
    ImageBuffer mean = window.mean_frame();
    const auto tensor = dataset::image_to_tensor(mean, arch.input_size);
    const auto logits = classifier::forward<float>(arch, params, tensor, 1);

    // Softmax in double so the probabilities sum to 1 within 1e-6.
    std::array<double, 4> probs{};
    double mx = logits[0];
    for (int j = 1; j < arch.num_classes; ++j) mx = std::max(mx, static_cast<double>(logits[j]));
    double sum = 0.0;
    for (int j = 0; j < arch.num_classes; ++j) {
        probs[j] = std::exp(static_cast<double>(logits[j]) - mx);
        sum += probs[j];
    }
    int best = 0;
    for (int j = 0; j < arch.num_classes; ++j) {
        probs[j] /= sum;
        if (probs[j] > probs[best]) best = j;
    }

    Detection det;
    det.frame_index = window.last_index();
    det.action = synthesis::action_from_index(best);
    det.probabilities = probs;
    det.fall = det.action == synthesis::ActionKind::Falling;
    if (keep_mean_frame) det.mean_frame = std::move(mean);
    return det;
}

StreamDetector::StreamDetector(const classifier::ModelArchitecture& arch,
                               const classifier::ParamsF& params, const WindowConfig& cfg,
                               bool keep_mean_frames)
    : arch_(arch), params_(params), cfg_(cfg), keep_mean_frames_(keep_mean_frames),
      window_(cfg.window) {
    cfg_.validate();
    arch_.validate();
}

std::optional<Detection> StreamDetector::push(const ImageBuffer& frame) {
    window_.push(frame, cfg_.stride);
    const std::int64_t t = window_.last_index();
    if (!window_.warm() || t % cfg_.interval != 0) return std::nullopt;
    return predict_at(window_, arch_, params_, keep_mean_frames_);
}

void StreamDetector::reset() { window_.reset(); }

std::vector<Detection> detect_over_video(const std::vector<ImageBuffer>& frames,
                                         const classifier::ModelArchitecture& arch,
                                         const classifier::ParamsF& params,
                                         const WindowConfig& cfg, bool keep_mean_frames) {
    StreamDetector detector(arch, params, cfg, keep_mean_frames);
    std::vector<Detection> detections;
    for (const auto& frame : frames) {
        if (auto det = detector.push(frame)) detections.push_back(std::move(*det));
    }
    return detections;
}

namespace {

std::vector<ImageBuffer> random_frame_pool(int width, int height, int count,
                                           std::uint64_t seed) {
    std::vector<ImageBuffer> pool;
    pool.reserve(count);
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        ImageBuffer frame(width, height);
        for (auto& s : frame.data) s = static_cast<std::uint8_t>(rng.uniform_int(256));
        pool.push_back(std::move(frame));
    }
    return pool;
}

ThroughputStats stats_from_latencies(std::vector<double>& seconds) {
    ThroughputStats stats;
    stats.frames = static_cast<int>(seconds.size());
    double total = 0.0;
    for (double s : seconds) total += s;
    stats.mean_fps = seconds.size() / total;
    std::sort(seconds.begin(), seconds.end());
    const std::size_t p95 = std::min(seconds.size() - 1,
                                     static_cast<std::size_t>(seconds.size() * 0.95));
    stats.p95_fps = 1.0 / seconds[p95];
    return stats;
}

}  // namespace

ThroughputStats measure_mean_frame_throughput(int width, int height, const WindowConfig& cfg,
                                              int frames, std::uint64_t seed) {
    cfg.validate();
    if (frames < 1) throw std::invalid_argument("need at least one measured frame");
    const auto pool = random_frame_pool(width, height, 32, seed);
    FrameWindow window(cfg.window);

    // Warm-up: fill the window, untimed.
    std::size_t cursor = 0;
    while (!window.warm()) {
        window.push(pool[cursor++ % pool.size()], cfg.stride);
    }

    std::vector<double> latencies;
    latencies.reserve(frames);
    volatile std::uint8_t sink = 0;
    for (int i = 0; i < frames; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        window.push(pool[cursor++ % pool.size()], cfg.stride);
        const ImageBuffer mean = window.mean_frame();
        const auto t1 = std::chrono::steady_clock::now();
        sink = sink ^ mean.data[0];
        latencies.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    (void)sink;
    return stats_from_latencies(latencies);
}

ThroughputStats measure_pipeline_throughput(const classifier::ModelArchitecture& arch,
                                            const classifier::ParamsF& params,
                                            const WindowConfig& cfg, int width, int height,
                                            int frames, std::uint64_t seed) {
    cfg.validate();
    if (frames < 1) throw std::invalid_argument("need at least one measured frame");
    const auto pool = random_frame_pool(width, height, 32, seed);
    FrameWindow window(cfg.window);

    std::size_t cursor = 0;
    while (!window.warm()) {
        window.push(pool[cursor++ % pool.size()], cfg.stride);
    }

    std::vector<double> latencies;
    latencies.reserve(frames);
    volatile bool sink = false;
    for (int i = 0; i < frames; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        window.push(pool[cursor++ % pool.size()], cfg.stride);
        const Detection det = predict_at(window, arch, params);
        const auto t1 = std::chrono::steady_clock::now();
        sink = sink ^ det.fall;
        latencies.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    (void)sink;
    return stats_from_latencies(latencies);
}

}  // namespace motionforge::streaming
