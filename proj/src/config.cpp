#include "motionforge/config.hpp"

#include <fstream>
#include <functional>
#include <map>

namespace motionforge::config {

void ToolkitConfig::validate() const {
    synth.blend.validate();
    synth.jitter.validate();
    training.train.validate();
    window.validate();
    if (training.input_size < 2) throw std::invalid_argument("input_size must be >= 2");
    if (synth.per_class < 1) throw std::invalid_argument("per_class must be >= 1");
    if (eval.protocol != "video" && eval.protocol != "frame") {
        throw std::invalid_argument("evaluation protocol must be 'video' or 'frame'");
    }
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

struct Parser {
    std::map<std::string, std::function<void(const std::string&)>> setters;

    void add(const std::string& key, std::string* out) {
        setters[key] = [out](const std::string& v) { *out = v; };
    }
    void add(const std::string& key, int* out) {
        setters[key] = [key, out](const std::string& v) {
            try {
                *out = std::stoi(v);
            } catch (const std::exception&) {
                throw std::runtime_error("config key " + key + ": expected integer, got '" +
                                         v + "'");
            }
        };
    }
    void add(const std::string& key, double* out) {
        setters[key] = [key, out](const std::string& v) {
            try {
                *out = std::stod(v);
            } catch (const std::exception&) {
                throw std::runtime_error("config key " + key + ": expected number, got '" +
                                         v + "'");
            }
        };
    }
    void add(const std::string& key, std::uint64_t* out) {
        setters[key] = [key, out](const std::string& v) {
            try {
                *out = std::stoull(v);
            } catch (const std::exception&) {
                throw std::runtime_error("config key " + key + ": expected integer, got '" +
                                         v + "'");
            }
        };
    }
};

}  // namespace

ToolkitConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config file: " + file.string());

    ToolkitConfig cfg;
    std::string preset_name;

    Parser p;
    p.add("paths.persons", &cfg.paths.persons);
    p.add("paths.backgrounds", &cfg.paths.backgrounds);
    p.add("paths.dataset", &cfg.paths.dataset);
    p.add("paths.checkpoint", &cfg.paths.checkpoint);
    p.add("paths.train_log", &cfg.paths.train_log);
    p.add("paths.report_dir", &cfg.paths.report_dir);

    p.add("synthesis.preset", &preset_name);
    p.add("synthesis.per_class", &cfg.synth.per_class);
    p.add("synthesis.seed", &cfg.synth.seed);
    p.add("synthesis.n_steps", &cfg.synth.blend.n_steps);
    p.add("synthesis.scale_min", &cfg.synth.blend.scale_min);
    p.add("synthesis.scale_max", &cfg.synth.blend.scale_max);
    p.add("synthesis.transition_min", &cfg.synth.blend.transition_min);
    p.add("synthesis.transition_max", &cfg.synth.blend.transition_max);
    p.add("synthesis.floor_min", &cfg.synth.blend.floor_min);
    p.add("synthesis.floor_max", &cfg.synth.blend.floor_max);
    p.add("synthesis.brightness_prob", &cfg.synth.jitter.brightness_prob);
    p.add("synthesis.brightness_min", &cfg.synth.jitter.brightness_min);
    p.add("synthesis.brightness_max", &cfg.synth.jitter.brightness_max);
    p.add("synthesis.contrast_prob", &cfg.synth.jitter.contrast_prob);
    p.add("synthesis.contrast_min", &cfg.synth.jitter.contrast_min);
    p.add("synthesis.contrast_max", &cfg.synth.jitter.contrast_max);
    p.add("synthesis.hue_prob", &cfg.synth.jitter.hue_prob);
    p.add("synthesis.hue_min", &cfg.synth.jitter.hue_min);
    p.add("synthesis.hue_max", &cfg.synth.jitter.hue_max);
    p.add("synthesis.blur_prob", &cfg.synth.jitter.blur_prob);
    p.add("synthesis.blur_sigma_min", &cfg.synth.jitter.blur_sigma_min);
    p.add("synthesis.blur_sigma_max", &cfg.synth.jitter.blur_sigma_max);
    p.add("synthesis.noise_prob", &cfg.synth.jitter.noise_prob);
    p.add("synthesis.noise_sigma_min", &cfg.synth.jitter.noise_sigma_min);
    p.add("synthesis.noise_sigma_max", &cfg.synth.jitter.noise_sigma_max);
    p.add("synthesis.flip_prob", &cfg.synth.jitter.flip_prob);

    p.add("training.batch_size", &cfg.training.train.batch_size);
    p.add("training.epochs", &cfg.training.train.epochs);
    p.add("training.learning_rate", &cfg.training.train.learning_rate);
    p.add("training.weight_decay", &cfg.training.train.weight_decay);
    p.add("training.beta1", &cfg.training.train.beta1);
    p.add("training.beta2", &cfg.training.train.beta2);
    p.add("training.epsilon", &cfg.training.train.epsilon);
    p.add("training.seed", &cfg.training.train.seed);
    p.add("training.val_fraction", &cfg.training.train.val_fraction);
    p.add("training.input_size", &cfg.training.input_size);

    p.add("streaming.window", &cfg.window.window);
    p.add("streaming.stride", &cfg.window.stride);
    p.add("streaming.interval", &cfg.window.interval);
    p.add("streaming.fps", &cfg.window.fps);

    p.add("evaluation.protocol", &cfg.eval.protocol);
    p.add("evaluation.ground_truth", &cfg.eval.ground_truth);

    // A preset must be applied before explicit blend overrides, so scan for
    // it first, then replay the remaining keys in file order.
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(file.string() + " line " + std::to_string(line_no) +
                                     ": expected key = value");
        }
        const std::string key = section + "." + trim(t.substr(0, eq));
        if (!p.setters.count(key)) {
            throw std::runtime_error(file.string() + " line " + std::to_string(line_no) +
                                     ": unknown config key: " + key);
        }
        pairs.emplace_back(key, trim(t.substr(eq + 1)));
    }

    for (const auto& [key, value] : pairs) {
        if (key == "synthesis.preset") {
            const int n_steps = cfg.synth.blend.n_steps;
            cfg.synth.blend = synthesis::BlendSettings::preset(value);
            cfg.synth.blend.n_steps = n_steps;
            cfg.synth.preset = value;
        }
    }
    for (const auto& [key, value] : pairs) {
        if (key != "synthesis.preset") p.setters.at(key)(value);
    }

    cfg.validate();
    return cfg;
}

}  // namespace motionforge::config
