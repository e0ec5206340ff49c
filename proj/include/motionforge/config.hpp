#pragma once

#include <filesystem>
#include <string>

#include "motionforge/classifier.hpp"
#include "motionforge/streaming.hpp"
#include "motionforge/synthesis.hpp"

namespace motionforge::config {

// Sectioned key-value config file. Unknown sections or keys are rejected;
// command-line flags override whatever the file sets.
struct ToolkitConfig {
    struct Paths {
        std::string persons;
        std::string backgrounds;
        std::string dataset = "dataset";
        std::string checkpoint = "model.ckpt";
        std::string train_log = "train.log";
        std::string report_dir = "reports";
    } paths;

    struct Synthesis {
        std::string preset = "urfd-like";
        int per_class = 200;
        std::uint64_t seed = 1;
        synthesis::BlendSettings blend = synthesis::BlendSettings::preset("urfd-like");
        synthesis::JitterConfig jitter;
    } synth;

    struct Training {
        classifier::TrainConfig train;
        int input_size = 64;
    } training;

    streaming::WindowConfig window;

    struct Evaluation {
        std::string protocol = "video";  // "video" | "frame"
        std::string ground_truth;
    } eval;

    void validate() const;
};

ToolkitConfig load_config(const std::filesystem::path& file);

}  // namespace motionforge::config
