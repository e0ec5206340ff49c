#include "motionforge/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "motionforge/png_io.hpp"

namespace motionforge::evaluation {

namespace fs = std::filesystem;
using imaging::ImageBuffer;
using synthesis::ActionKind;

Metrics metrics(const ConfusionCounts& c) {
    Metrics m;
    if (c.tp + c.fn > 0) m.sensitivity = 100.0 * c.tp / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0) m.specificity = 100.0 * c.tn / static_cast<double>(c.tn + c.fp);
    if (c.tp + c.fp > 0) m.precision = 100.0 * c.tp / static_cast<double>(c.tp + c.fp);
    if (c.total() > 0) m.accuracy = 100.0 * (c.tp + c.tn) / static_cast<double>(c.total());
    return m;
}

std::string format_metric(const std::optional<double>& value) {
    if (!value) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", *value);
    return buf;
}

std::size_t LabeledVideo::frame_count() const {
    if (!frames.empty()) return frames.size();
    if (frame_dir.empty() || !fs::is_directory(frame_dir)) return 0;
    std::size_t count = 0;
    for (const auto& e : fs::directory_iterator(frame_dir)) {
        if (e.path().extension() == ".png") ++count;
    }
    return count;
}

InstantClassifier model_classifier(const classifier::ModelArchitecture& arch,
                                   const classifier::ParamsF& params) {
    return [&arch, &params](const LabeledVideo&, std::int64_t,
                            const ImageBuffer& mean_frame) {
        const auto tensor = dataset::image_to_tensor(mean_frame, arch.input_size);
        const auto logits = classifier::forward<float>(arch, params, tensor, 1);
        const auto probs = classifier::softmax<float>(logits, 1, arch.num_classes);
        InstantPrediction pred{};
        int best = 0;
        for (int j = 0; j < arch.num_classes; ++j) {
            pred.probabilities[j] = probs[j];
            if (probs[j] > probs[best]) best = j;
        }
        pred.action = synthesis::action_from_index(best);
        return pred;
    };
}

InstantClassifier oracle_classifier() {
    return [](const LabeledVideo& video, std::int64_t frame_index, const ImageBuffer&) {
        bool fall = false;
        if (!video.frame_fall.empty()) {
            const auto i = static_cast<std::size_t>(frame_index - 1);
            fall = i < video.frame_fall.size() && video.frame_fall[i];
        } else if (video.fall_video) {
            fall = *video.fall_video;
        } else {
            throw std::runtime_error("oracle: video '" + video.id + "' has no ground truth");
        }
        InstantPrediction pred{};
        pred.action = fall ? ActionKind::Falling : ActionKind::Standing;
        pred.probabilities[synthesis::action_index(pred.action)] = 1.0;
        return pred;
    };
}

namespace {

// Streams a video's frames (memory or directory, lexicographic order) and
// invokes the classifier at every detection instant.
void for_each_instant(const LabeledVideo& video, const InstantClassifier& classify,
                      const streaming::WindowConfig& cfg,
                      const std::function<void(std::int64_t, const InstantPrediction&)>& on) {
    cfg.validate();
    streaming::FrameWindow window(cfg.window);
    auto feed = [&](const ImageBuffer& frame) {
        window.push(frame, cfg.stride);
        const std::int64_t t = window.last_index();
        if (window.warm() && t % cfg.interval == 0) {
            on(t, classify(video, t, window.mean_frame()));
        }
    };

    if (!video.frames.empty()) {
        for (const auto& frame : video.frames) feed(frame);
        return;
    }
    if (!fs::is_directory(video.frame_dir)) {
        throw std::runtime_error("video '" + video.id + "' has no frames");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(video.frame_dir)) {
        if (e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) feed(imaging::read_png(file));
}

}  // namespace

ConfusionCounts video_level_eval(const std::vector<LabeledVideo>& videos,
                                 const InstantClassifier& classify,
                                 const streaming::WindowConfig& cfg) {
    ConfusionCounts counts;
    for (const auto& video : videos) {
        if (!video.fall_video) {
            throw std::runtime_error("video '" + video.id +
                                     "' is missing video-level ground truth");
        }
        bool predicted_fall = false;
        std::size_t instants = 0;
        for_each_instant(video, classify, cfg,
                         [&](std::int64_t, const InstantPrediction& pred) {
                             ++instants;
                             if (pred.action == ActionKind::Falling) predicted_fall = true;
                         });
        if (instants == 0) {
            std::cerr << "warning: video '" << video.id
                      << "' too short for one detection window; counted as non-fall\n";
        }
        if (*video.fall_video) {
            predicted_fall ? ++counts.tp : ++counts.fn;
        } else {
            predicted_fall ? ++counts.fp : ++counts.tn;
        }
    }
    return counts;
}

ConfusionCounts frame_level_eval(const std::vector<LabeledVideo>& videos,
                                 const InstantClassifier& classify,
                                 const streaming::WindowConfig& cfg) {
    ConfusionCounts counts;
    for (const auto& video : videos) {
        if (video.frame_fall.empty()) {
            throw std::runtime_error("video '" + video.id +
                                     "' is missing per-frame ground truth");
        }
        for_each_instant(video, classify, cfg,
                         [&](std::int64_t t, const InstantPrediction& pred) {
                             const auto i = static_cast<std::size_t>(t - 1);
                             if (i >= video.frame_fall.size()) {
                                 throw std::runtime_error(
                                     "per-frame labels shorter than video '" + video.id + "'");
                             }
                             const bool gt_fall = video.frame_fall[i];
                             const bool predicted = pred.action == ActionKind::Falling;
                             if (gt_fall) {
                                 predicted ? ++counts.tp : ++counts.fn;
                             } else {
                                 predicted ? ++counts.fp : ++counts.tn;
                             }
                         });
    }
    return counts;
}

std::vector<SweepRow> interval_sweep(const std::vector<LabeledVideo>& videos,
                                     const InstantClassifier& classify,
                                     const std::vector<double>& seconds, double fps) {
    if (!(fps > 0.0)) throw std::invalid_argument("fps must be > 0");
    std::vector<SweepRow> rows;
    for (double sec : seconds) {
        if (!(sec > 0.0)) throw std::invalid_argument("sweep intervals must be positive");
        SweepRow row;
        row.seconds = sec;
        row.frames = streaming::seconds_to_frames(sec, fps);
        streaming::WindowConfig cfg;
        cfg.window = row.frames;
        cfg.stride = 1;
        cfg.interval = row.frames;
        cfg.fps = fps;
        row.counts = video_level_eval(videos, classify, cfg);
        row.m = metrics(row.counts);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<LabeledVideo> load_corpus(const fs::path& corpus_dir) {
    if (!fs::is_directory(corpus_dir)) {
        throw std::runtime_error("corpus directory does not exist: " + corpus_dir.string());
    }
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(corpus_dir)) {
        if (e.is_directory()) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<LabeledVideo> videos;
    for (const auto& dir : dirs) {
        LabeledVideo video;
        video.id = dir.filename().string();
        video.frame_dir = dir;
        videos.push_back(std::move(video));
    }
    if (videos.empty()) {
        throw std::runtime_error("corpus has no video directories: " + corpus_dir.string());
    }
    return videos;
}

void apply_ground_truth(std::vector<LabeledVideo>& videos, const fs::path& gt_file,
                        bool frame_level) {
    std::ifstream in(gt_file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read ground truth: " + gt_file.string());

    std::map<std::string, std::string> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error("ground truth line " + std::to_string(line_no) +
                                     ": expected <id>\\t<label>");
        }
        entries[line.substr(0, tab)] = line.substr(tab + 1);
    }

    std::set<std::string> unmatched_gt;
    for (const auto& [id, _] : entries) unmatched_gt.insert(id);
    std::vector<std::string> unmatched_videos;

    for (auto& video : videos) {
        auto it = entries.find(video.id);
        if (it == entries.end()) {
            unmatched_videos.push_back(video.id);
            continue;
        }
        unmatched_gt.erase(video.id);
        const std::string& value = it->second;
        if (!frame_level) {
            if (value == "fall") {
                video.fall_video = true;
            } else if (value == "adl") {
                video.fall_video = false;
            } else {
                throw std::runtime_error("ground truth for '" + video.id +
                                         "': expected fall or adl, got '" + value + "'");
            }
        } else {
            const std::size_t n = video.frame_count();
            video.frame_fall.assign(n, false);
            video.fall_video = false;
            if (value != "-") {
                std::size_t start = 0;
                while (start < value.size()) {
                    auto comma = value.find(',', start);
                    if (comma == std::string::npos) comma = value.size();
                    const std::string range = value.substr(start, comma - start);
                    const auto dash = range.find('-');
                    if (dash == std::string::npos) {
                        throw std::runtime_error("ground truth for '" + video.id +
                                                 "': malformed range '" + range + "'");
                    }
                    const long lo = std::stol(range.substr(0, dash));
                    const long hi = std::stol(range.substr(dash + 1));
                    if (lo < 1 || hi < lo) {
                        throw std::runtime_error("ground truth for '" + video.id +
                                                 "': bad range '" + range + "'");
                    }
                    for (long f = lo; f <= hi && f <= static_cast<long>(n); ++f) {
                        video.frame_fall[f - 1] = true;
                    }
                    video.fall_video = true;
                    start = comma + 1;
                }
            }
        }
    }

    if (!unmatched_videos.empty() || !unmatched_gt.empty()) {
        std::string msg = "ground truth / corpus mismatch;";
        if (!unmatched_videos.empty()) {
            msg += " videos without ground truth:";
            for (const auto& id : unmatched_videos) msg += " " + id;
            msg += ";";
        }
        if (!unmatched_gt.empty()) {
            msg += " ground-truth ids without videos:";
            for (const auto& id : unmatched_gt) msg += " " + id;
        }
        throw std::runtime_error(msg);
    }
}

}  // namespace motionforge::evaluation
