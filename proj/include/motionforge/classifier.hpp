#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "motionforge/dataset.hpp"

namespace motionforge::classifier {

// Compact from-scratch CNN: per block a 3x3 same-padding convolution with
// bias, ReLU, and 2x2 max-pool; then global average pooling and one linear
// layer to the four action classes.
struct ModelArchitecture {
    int input_size = 64;
    int in_channels = 3;
    std::vector<int> conv_widths = {16, 32, 64, 128};
    int kernel = 3;
    int num_classes = 4;

    void validate() const;
    std::size_t parameter_count() const;
    int feature_size() const;  // spatial side after all pool stages

    bool operator==(const ModelArchitecture&) const = default;
};

template <typename T>
struct Tensor {
    std::string name;
    std::vector<int> shape;
    std::vector<T> values;
};

template <typename T>
struct Params {
    std::vector<Tensor<T>> tensors;

    Tensor<T>& find(const std::string& name);
    const Tensor<T>& find(const std::string& name) const;
};

using ParamsF = Params<float>;

struct TrainConfig {
    int batch_size = 32;
    int epochs = 100;
    double learning_rate = 1e-3;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;
    double val_fraction = 0.2;

    void validate() const;
};

// Seeded fan-in-scaled uniform weights, zero biases. Same seed, same params.
template <typename T>
Params<T> init_params(const ModelArchitecture& arch, std::uint64_t seed);

// batch: n contiguous CHW images of arch.input_size. Returns n x num_classes
// logits, row-major. Samples are independent; shapes are checked.
template <typename T>
std::vector<T> forward(const ModelArchitecture& arch, const Params<T>& params,
                       std::span<const T> batch, int n);

// Mean cross-entropy over the batch with max-subtraction stabilization.
// Returns the loss and the gradient w.r.t. the logits.
template <typename T>
std::pair<T, std::vector<T>> cross_entropy(std::span<const T> logits,
                                           std::span<const int> labels, int num_classes);

// Analytic gradients of the mean cross-entropy w.r.t. every parameter.
template <typename T>
Params<T> backward(const ModelArchitecture& arch, const Params<T>& params,
                   std::span<const T> batch, std::span<const int> labels, int n,
                   T* loss_out = nullptr);

template <typename T>
std::vector<T> softmax(std::span<const T> logits, int n, int num_classes);

// AdamW first/second moment state, tensor-parallel to Params.
template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;

    static AdamState zeros_like(const Params<T>& params);
};

// Decoupled weight decay followed by the bias-corrected adaptive update.
// step_index starts at 1.
template <typename T>
void optimizer_step(Params<T>& params, const Params<T>& gradients, AdamState<T>& state,
                    const TrainConfig& cfg, int step_index);

struct EpochLog {
    int epoch;
    double train_loss;
    double val_accuracy;  // percent
};

struct TrainResult {
    ParamsF params;  // best validation accuracy snapshot
    std::vector<EpochLog> log;
    double best_val_accuracy = 0.0;
    int best_epoch = 0;
};

// Seeded shuffled mini-batch loop over the train split; per-epoch validation
// accuracy decides which params are returned. epochs = 0 returns the
// initialization untouched.
TrainResult train(const dataset::Manifest& train_split, const dataset::Manifest& val_split,
                  const ModelArchitecture& arch, const TrainConfig& cfg);

double evaluate_accuracy(const dataset::Manifest& manifest, const ModelArchitecture& arch,
                         const ParamsF& params, int batch_size = 64);

// Line-delimited training log: header, then epoch \t loss \t val_accuracy.
void write_train_log(const std::vector<EpochLog>& log, const std::filesystem::path& file);

// Versioned little-endian checkpoint: architecture descriptor plus named
// float32 tensors. Round-trips bit-exactly.
void save_checkpoint(const ParamsF& params, const ModelArchitecture& arch,
                     const std::filesystem::path& file);
std::pair<ParamsF, ModelArchitecture> load_checkpoint(const std::filesystem::path& file);

}  // namespace motionforge::classifier
