#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "motionforge/classifier.hpp"
#include "motionforge/streaming.hpp"
#include "motionforge/synthesis.hpp"

namespace motionforge::evaluation {

// Fall is the positive class throughout.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;

    std::uint64_t total() const { return tp + fn + tn + fp; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fn += o.fn;
        tn += o.tn;
        fp += o.fp;
        return *this;
    }
};

// Percentages; a metric with a zero denominator is undefined, not 0.
struct Metrics {
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> precision;
    std::optional<double> accuracy;
};

Metrics metrics(const ConfusionCounts& counts);

// Two decimals, or "undefined".
std::string format_metric(const std::optional<double>& value);

struct LabeledVideo {
    std::string id;
    std::filesystem::path frame_dir;            // read lazily when frames is empty
    std::vector<imaging::ImageBuffer> frames;   // optional in-memory frames
    std::optional<bool> fall_video;             // video-level ground truth
    std::vector<bool> frame_fall;               // per-frame ground truth (1-based frame i -> [i-1])

    std::size_t frame_count() const;
};

struct InstantPrediction {
    synthesis::ActionKind action;
    std::array<double, 4> probabilities;
};

// Prediction at one detection instant. The model-backed classifier ignores
// the video and instant; the oracle ignores the mean frame and reads the
// ground truth, which makes the protocol tests model-independent.
using InstantClassifier = std::function<InstantPrediction(
    const LabeledVideo& video, std::int64_t frame_index,
    const imaging::ImageBuffer& mean_frame)>;

InstantClassifier model_classifier(const classifier::ModelArchitecture& arch,
                                   const classifier::ParamsF& params);
InstantClassifier oracle_classifier();

// URFD-style protocol: a video is predicted fall iff any detection instant
// predicts falling; scored against the video-level flag. Videos too short
// for one window count as non-fall predictions (with a warning).
ConfusionCounts video_level_eval(const std::vector<LabeledVideo>& videos,
                                 const InstantClassifier& classify,
                                 const streaming::WindowConfig& cfg);

// AIHub-style protocol: every detection instant T is scored against the
// per-frame flag at T. Requires per-frame ground truth.
ConfusionCounts frame_level_eval(const std::vector<LabeledVideo>& videos,
                                 const InstantClassifier& classify,
                                 const streaming::WindowConfig& cfg);

struct SweepRow {
    double seconds = 0.0;
    int frames = 0;
    ConfusionCounts counts;
    Metrics m;
};

// Interval ablation: per entry, video-level evaluation with N = interval =
// round(seconds * fps) and stride 1.
std::vector<SweepRow> interval_sweep(const std::vector<LabeledVideo>& videos,
                                     const InstantClassifier& classify,
                                     const std::vector<double>& seconds, double fps);

// Corpus directory: one subdirectory of numbered PNG frames per video.
std::vector<LabeledVideo> load_corpus(const std::filesystem::path& corpus_dir);

// Ground-truth file, one line per video:
//   video-level: "<id>\tfall" or "<id>\tadl"
//   frame-level: "<id>\t<start>-<end>[,<start>-<end>...]" or "<id>\t-" (no falls)
// Every video must be matched; unmatched ids on either side are an error.
void apply_ground_truth(std::vector<LabeledVideo>& videos,
                        const std::filesystem::path& gt_file, bool frame_level);

}  // namespace motionforge::evaluation
