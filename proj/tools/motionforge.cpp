// motionforge: synthesize motion-image datasets, train the compact action
// classifier, and run fall detection over frame streams.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "motionforge/classifier.hpp"
#include "motionforge/config.hpp"
#include "motionforge/dataset.hpp"
#include "motionforge/evaluation.hpp"
#include "motionforge/png_io.hpp"
#include "motionforge/rng.hpp"
#include "motionforge/streaming.hpp"
#include "motionforge/synthesis.hpp"

namespace fs = std::filesystem;
using namespace motionforge;

namespace {

classifier::ModelArchitecture make_arch(const config::ToolkitConfig& cfg) {
    classifier::ModelArchitecture arch;
    arch.input_size = cfg.training.input_size;
    return arch;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("frame directory does not exist: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void write_detection(std::ostream& out, const streaming::Detection& det) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%lld\t%s\t%.6f\t%.6f\t%.6f\t%.6f\t%d\n",
                  static_cast<long long>(det.frame_index), synthesis::action_name(det.action),
                  det.probabilities[0], det.probabilities[1], det.probabilities[2],
                  det.probabilities[3], det.fall ? 1 : 0);
    out << buf;
}

// One contact sheet: r_1..r_N then the final training image, side by side.
imaging::ImageBuffer contact_sheet(const std::vector<imaging::ImageBuffer>& frames,
                                   const imaging::ImageBuffer& result) {
    const int gap = 2;
    const int h = result.height;
    const int count = static_cast<int>(frames.size()) + 1;
    const int w = count * result.width + (count - 1) * gap;
    imaging::ImageBuffer sheet(w, h, 255);
    int x_off = 0;
    auto blit = [&](const imaging::ImageBuffer& img) {
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                for (int c = 0; c < 3; ++c) sheet.at(x_off + x, y, c) = img.at(x, y, c);
            }
        }
        x_off += img.width + gap;
    };
    for (const auto& f : frames) blit(f);
    blit(result);
    return sheet;
}

int cmd_synth(const config::ToolkitConfig& cfg, int preview) {
    auto [persons, backgrounds] =
        dataset::ingest_assets(cfg.paths.persons, cfg.paths.backgrounds);
    std::cout << "ingested " << persons.size() << " person assets, " << backgrounds.size()
              << " backgrounds\n";

    const auto manifest =
        dataset::generate_dataset(persons, backgrounds, cfg.synth.blend, cfg.synth.jitter,
                                  cfg.synth.per_class, cfg.synth.seed, cfg.paths.dataset);
    for (auto action : synthesis::kAllActions) {
        std::cout << "  " << synthesis::action_name(action) << ": " << cfg.synth.per_class
                  << " samples\n";
    }
    std::cout << "wrote " << manifest.size() << " samples to " << cfg.paths.dataset << "\n";

    if (preview > 0) {
        const fs::path preview_dir = fs::path(cfg.paths.dataset) / "preview";
        fs::create_directories(preview_dir);
        for (int i = 0; i < preview; ++i) {
            const auto action = synthesis::kAllActions[i % 4];
            const std::uint64_t seed = mix_seed(cfg.synth.seed, 0xb00c0000ull + i);
            Rng rng(seed);
            const auto& person = persons[rng.uniform_int(persons.size())];
            const auto& bg = backgrounds[rng.uniform_int(backgrounds.size())];
            std::vector<imaging::ImageBuffer> frames;
            const auto sample = synthesis::synthesize_sample_with_frames(
                person.image, person.mask, person.id, bg.image, bg.id, action,
                cfg.synth.blend, cfg.synth.jitter, mix_seed(seed, 3), frames);
            char name[64];
            std::snprintf(name, sizeof(name), "preview_%03d_%s.png", i,
                          synthesis::action_name(action));
            imaging::write_png(preview_dir / name, contact_sheet(frames, sample.image));
        }
        std::cout << "wrote " << preview << " preview sheets to " << preview_dir.string()
                  << "\n";
    }
    return 0;
}

int cmd_train(const config::ToolkitConfig& cfg) {
    const auto manifest = dataset::read_manifest(fs::path(cfg.paths.dataset) / "manifest.tsv");
    if (manifest.records.empty()) throw std::runtime_error("dataset manifest is empty");
    auto [train_split, val_split] =
        dataset::split(manifest, cfg.training.train.val_fraction, cfg.training.train.seed);

    const auto arch = make_arch(cfg);
    std::cout << "training " << arch.parameter_count() << "-parameter model on "
              << train_split.size() << " samples (" << val_split.size() << " validation)\n";
    const auto result = classifier::train(train_split, val_split, arch, cfg.training.train);

    classifier::save_checkpoint(result.params, arch, cfg.paths.checkpoint);
    classifier::write_train_log(result.log, cfg.paths.train_log);
    std::printf("best validation accuracy %.2f%% (epoch %d)\n", result.best_val_accuracy,
                result.best_epoch);
    std::cout << "checkpoint: " << cfg.paths.checkpoint << "\ntraining log: "
              << cfg.paths.train_log << "\n";
    return 0;
}

int cmd_infer(const config::ToolkitConfig& cfg, const std::string& frames_dir,
              const std::string& out_file, const std::string& mean_dir) {
    auto [params, arch] = classifier::load_checkpoint(cfg.paths.checkpoint);
    const auto files = list_frames(frames_dir);

    std::ofstream file_out;
    if (!out_file.empty()) {
        file_out.open(out_file, std::ios::binary);
        if (!file_out) throw std::runtime_error("cannot write detections: " + out_file);
    }
    std::ostream& out = out_file.empty() ? std::cout : file_out;

    if (!mean_dir.empty()) fs::create_directories(mean_dir);

    streaming::StreamDetector detector(arch, params, cfg.window, !mean_dir.empty());
    std::size_t detections = 0;
    for (const auto& file : files) {
        auto det = detector.push(imaging::read_png(file));
        if (!det) continue;
        ++detections;
        write_detection(out, *det);
        if (!mean_dir.empty() && det->mean_frame) {
            char name[48];
            std::snprintf(name, sizeof(name), "mean_%08lld.png",
                          static_cast<long long>(det->frame_index));
            imaging::write_png(fs::path(mean_dir) / name, *det->mean_frame);
        }
    }
    if (detections == 0) {
        std::cerr << "warning: stream too short for one detection window ("
                  << files.size() << " frames, window " << cfg.window.window << " x stride "
                  << cfg.window.stride << ")\n";
    }
    return 0;
}

void write_metrics_report(const fs::path& file, const evaluation::ConfusionCounts& counts,
                          const evaluation::Metrics& m) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report: " + file.string());
    out << "tp\t" << counts.tp << "\nfn\t" << counts.fn << "\ntn\t" << counts.tn << "\nfp\t"
        << counts.fp << "\n";
    out << "sensitivity\t" << evaluation::format_metric(m.sensitivity) << "\n";
    out << "specificity\t" << evaluation::format_metric(m.specificity) << "\n";
    out << "precision\t" << evaluation::format_metric(m.precision) << "\n";
    out << "accuracy\t" << evaluation::format_metric(m.accuracy) << "\n";
}

int cmd_eval(const config::ToolkitConfig& cfg, const std::string& corpus_dir, bool oracle,
             const std::vector<double>& sweep, const std::string& report_override) {
    auto videos = evaluation::load_corpus(corpus_dir);
    const bool frame_level = cfg.eval.protocol == "frame";
    if (cfg.eval.ground_truth.empty()) {
        throw std::runtime_error("no ground-truth file configured (evaluation.ground_truth)");
    }
    evaluation::apply_ground_truth(videos, cfg.eval.ground_truth, frame_level);

    classifier::ParamsF params;
    classifier::ModelArchitecture arch;
    evaluation::InstantClassifier classify;
    if (oracle) {
        classify = evaluation::oracle_classifier();
    } else {
        std::tie(params, arch) = classifier::load_checkpoint(cfg.paths.checkpoint);
        classify = evaluation::model_classifier(arch, params);
    }

    fs::create_directories(cfg.paths.report_dir);

    if (!sweep.empty()) {
        const auto rows = evaluation::interval_sweep(videos, classify, sweep, cfg.window.fps);
        const fs::path report = report_override.empty()
                                    ? fs::path(cfg.paths.report_dir) / "sweep.tsv"
                                    : fs::path(report_override);
        std::ofstream out(report, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write report: " + report.string());
        std::printf("%8s %8s %10s\n", "second", "frames", "accuracy");
        out << "second\tframes\taccuracy\n";
        for (const auto& row : rows) {
            const std::string acc = evaluation::format_metric(row.m.accuracy);
            std::printf("%8.2f %8d %10s\n", row.seconds, row.frames, acc.c_str());
            char line[96];
            std::snprintf(line, sizeof(line), "%.2f\t%d\t%s\n", row.seconds, row.frames,
                          acc.c_str());
            out << line;
        }
        std::cout << "sweep report: " << report.string() << "\n";
        return 0;
    }

    const auto counts = frame_level ? evaluation::frame_level_eval(videos, classify, cfg.window)
                                    : evaluation::video_level_eval(videos, classify, cfg.window);
    const auto m = evaluation::metrics(counts);
    std::cout << cfg.eval.protocol << "-level evaluation over " << videos.size()
              << " videos (tp=" << counts.tp << " fn=" << counts.fn << " tn=" << counts.tn
              << " fp=" << counts.fp << ")\n";
    std::cout << "  sensitivity  " << evaluation::format_metric(m.sensitivity) << "\n";
    std::cout << "  specificity  " << evaluation::format_metric(m.specificity) << "\n";
    std::cout << "  precision    " << evaluation::format_metric(m.precision) << "\n";
    std::cout << "  accuracy     " << evaluation::format_metric(m.accuracy) << "\n";

    const fs::path report = report_override.empty()
                                ? fs::path(cfg.paths.report_dir) /
                                      (cfg.eval.protocol + "_report.tsv")
                                : fs::path(report_override);
    write_metrics_report(report, counts, m);
    std::cout << "report: " << report.string() << "\n";
    return 0;
}

int cmd_bench(const config::ToolkitConfig& cfg, int width, int height, int frames) {
    classifier::ParamsF params;
    classifier::ModelArchitecture arch;
    if (fs::exists(cfg.paths.checkpoint)) {
        std::tie(params, arch) = classifier::load_checkpoint(cfg.paths.checkpoint);
    } else {
        arch = make_arch(cfg);
        params = classifier::init_params<float>(arch, 1);
        std::cout << "no checkpoint at " << cfg.paths.checkpoint
                  << "; benchmarking a seeded untrained model\n";
    }

    const auto pipeline = streaming::measure_pipeline_throughput(
        arch, params, cfg.window, width, height, frames, 42);
    const auto mean_only =
        streaming::measure_mean_frame_throughput(width, height, cfg.window, frames, 42);

    std::printf("stream %dx%d, window N=%d stride k=%d, %d frames after warm-up\n", width,
                height, cfg.window.window, cfg.window.stride, frames);
    std::printf("%-28s %12s %12s\n", "stage", "mean fps", "p95 fps");
    std::printf("%-28s %12.1f %12.1f\n", "pipeline (push+mean+predict)", pipeline.mean_fps,
                pipeline.p95_fps);
    std::printf("%-28s %12.1f %12.1f\n", "mean frame (push+mean)", mean_only.mean_fps,
                mean_only.p95_fps);

    // Window-length independence of the rolling sum.
    for (int n : {5, 50}) {
        streaming::WindowConfig wcfg = cfg.window;
        wcfg.window = n;
        wcfg.interval = n;
        const auto stats =
            streaming::measure_mean_frame_throughput(width, height, wcfg, frames, 42);
        std::printf("%-28s %12.1f %12.1f\n",
                    ("mean frame, N=" + std::to_string(n)).c_str(), stats.mean_fps,
                    stats.p95_fps);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"motionforge: single-frame motion images for fall detection"};
    app.require_subcommand(1);

    // The config file loads before flag parsing so flags can override it.
    std::string config_path;
    if (const char* env = std::getenv("MOTIONFORGE_CONFIG")) config_path = env;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    }

    config::ToolkitConfig cfg;
    try {
        if (!config_path.empty()) cfg = config::load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    std::string config_flag;
    app.add_option("--config", config_flag, "Config file (sectioned key=value)");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic motion-image dataset");
    int preview = 0;
    synth->add_option("--persons", cfg.paths.persons, "Person/mask asset directory");
    synth->add_option("--backgrounds", cfg.paths.backgrounds, "Background asset directory");
    synth->add_option("--out", cfg.paths.dataset, "Output dataset directory");
    synth->add_option("--per-class", cfg.synth.per_class, "Samples per action class");
    synth->add_option("--seed", cfg.synth.seed, "Generation seed");
    synth->add_option("--n-steps", cfg.synth.blend.n_steps, "Poses per motion script");
    std::string preset_flag;
    synth->add_option("--preset", preset_flag, "Blend preset: urfd-like | aihub-like")
        ->check(CLI::IsMember({"urfd-like", "aihub-like"}));
    synth->add_option("--preview", preview, "Also write this many contact sheets");

    auto* train = app.add_subcommand("train", "Train the compact action classifier");
    train->add_option("--dataset", cfg.paths.dataset, "Dataset directory with manifest.tsv");
    train->add_option("--checkpoint", cfg.paths.checkpoint, "Checkpoint output path");
    train->add_option("--log", cfg.paths.train_log, "Training log output path");
    train->add_option("--epochs", cfg.training.train.epochs, "Training epochs");
    train->add_option("--batch-size", cfg.training.train.batch_size, "Mini-batch size M");
    train->add_option("--lr", cfg.training.train.learning_rate, "Learning rate");
    train->add_option("--weight-decay", cfg.training.train.weight_decay, "Weight decay");
    train->add_option("--seed", cfg.training.train.seed, "Training seed");
    train->add_option("--input-size", cfg.training.input_size, "Model input resolution");
    train->add_option("--val-fraction", cfg.training.train.val_fraction,
                      "Validation split fraction");

    auto* infer = app.add_subcommand("infer", "Detect falls over a directory of frames");
    std::string frames_dir, detections_out, mean_dir;
    infer->add_option("--frames", frames_dir, "Directory of numbered PNG frames")->required();
    infer->add_option("--checkpoint", cfg.paths.checkpoint, "Model checkpoint");
    infer->add_option("--out", detections_out, "Detections file (default: stdout)");
    infer->add_option("--save-mean-frames", mean_dir, "Write each window's mean frame here");
    infer->add_option("--window", cfg.window.window, "Window length N");
    infer->add_option("--stride", cfg.window.stride, "Stride k");
    infer->add_option("--interval", cfg.window.interval, "Frames between detections");
    infer->add_option("--fps", cfg.window.fps, "Stream frame rate");

    auto* eval = app.add_subcommand("eval", "Run an evaluation protocol over a corpus");
    std::string corpus_dir, report_override;
    bool oracle = false;
    std::string sweep_arg;
    eval->add_option("--corpus", corpus_dir, "Corpus directory (one subdir per video)")
        ->required();
    eval->add_option("--gt", cfg.eval.ground_truth, "Ground-truth file");
    eval->add_option("--checkpoint", cfg.paths.checkpoint, "Model checkpoint");
    eval->add_option("--protocol", cfg.eval.protocol, "video | frame")
        ->check(CLI::IsMember({"video", "frame"}));
    eval->add_flag("--oracle", oracle, "Score the ground-truth oracle instead of a model");
    eval->add_option("--sweep", sweep_arg, "Comma-separated interval seconds, e.g. 0.4,1.0");
    eval->add_option("--fps", cfg.window.fps, "Corpus frame rate");
    eval->add_option("--window", cfg.window.window, "Window length N");
    eval->add_option("--stride", cfg.window.stride, "Stride k");
    eval->add_option("--interval", cfg.window.interval, "Frames between detections");
    eval->add_option("--report", report_override, "Report file override");

    auto* bench = app.add_subcommand("bench", "Measure streaming throughput");
    int bench_w = 64, bench_h = 64, bench_frames = 2000;
    bench->add_option("--checkpoint", cfg.paths.checkpoint, "Model checkpoint (optional)");
    bench->add_option("--width", bench_w, "Synthetic frame width");
    bench->add_option("--height", bench_h, "Synthetic frame height");
    bench->add_option("--frames", bench_frames, "Frames to measure after warm-up");
    bench->add_option("--window", cfg.window.window, "Window length N");
    bench->add_option("--stride", cfg.window.stride, "Stride k");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!preset_flag.empty()) {
            const int n_steps = cfg.synth.blend.n_steps;
            cfg.synth.blend = synthesis::BlendSettings::preset(preset_flag);
            cfg.synth.blend.n_steps = n_steps;
            cfg.synth.preset = preset_flag;
        }
        if (synth->parsed()) return cmd_synth(cfg, preview);
        if (train->parsed()) return cmd_train(cfg);
        if (infer->parsed()) return cmd_infer(cfg, frames_dir, detections_out, mean_dir);
        if (eval->parsed()) {
            std::vector<double> sweep;
            if (!sweep_arg.empty()) {
                std::size_t start = 0;
                while (start < sweep_arg.size()) {
                    auto comma = sweep_arg.find(',', start);
                    if (comma == std::string::npos) comma = sweep_arg.size();
                    sweep.push_back(std::stod(sweep_arg.substr(start, comma - start)));
                    start = comma + 1;
                }
            }
            return cmd_eval(cfg, corpus_dir, oracle, sweep, report_override);
        }
        if (bench->parsed()) return cmd_bench(cfg, bench_w, bench_h, bench_frames);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
