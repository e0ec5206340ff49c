#include "motionforge/classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "motionforge/rng.hpp"

namespace motionforge::classifier {

void ModelArchitecture::validate() const {
    if (input_size < 1 || in_channels < 1 || num_classes < 2) {
        throw std::invalid_argument("invalid model architecture dimensions");
    }
    if (kernel != 3) throw std::invalid_argument("only 3x3 kernels are supported");
    if (conv_widths.empty()) throw std::invalid_argument("need at least one conv block");
    int side = input_size;
    for (std::size_t i = 0; i < conv_widths.size(); ++i) {
        if (conv_widths[i] < 1) throw std::invalid_argument("conv width must be >= 1");
        if (side < 2 || side % 2 != 0) {
            throw std::invalid_argument(
                "input_size must halve cleanly through every pool stage");
        }
        side /= 2;
    }
    if (parameter_count() >= 1'000'000) {
        throw std::invalid_argument("architecture exceeds the 1M parameter budget");
    }
}

std::size_t ModelArchitecture::parameter_count() const {
    std::size_t count = 0;
    int prev = in_channels;
    for (int w : conv_widths) {
        count += static_cast<std::size_t>(w) * prev * kernel * kernel + w;
        prev = w;
    }
    count += static_cast<std::size_t>(num_classes) * prev + num_classes;
    return count;
}

int ModelArchitecture::feature_size() const {
    int side = input_size;
    for (std::size_t i = 0; i < conv_widths.size(); ++i) side /= 2;
    return side;
}

template <typename T>
Tensor<T>& Params<T>::find(const std::string& name) {
    for (auto& t : tensors) {
        if (t.name == name) return t;
    }
    throw std::invalid_argument("no parameter tensor named " + name);
}

template <typename T>
const Tensor<T>& Params<T>::find(const std::string& name) const {
    return const_cast<Params<T>*>(this)->find(name);
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("moment coefficients must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (!(val_fraction > 0.0) || !(val_fraction < 1.0)) {
        throw std::invalid_argument("val_fraction must lie in (0, 1)");
    }
}

namespace {

// Shapes of every parameter tensor, in checkpoint order.
struct TensorSpec {
    std::string name;
    std::vector<int> shape;
};

std::vector<TensorSpec> tensor_specs(const ModelArchitecture& arch) {
    std::vector<TensorSpec> specs;
    int prev = arch.in_channels;
    for (std::size_t i = 0; i < arch.conv_widths.size(); ++i) {
        const std::string base = "conv" + std::to_string(i + 1);
        specs.push_back({base + ".weight", {arch.conv_widths[i], prev, arch.kernel, arch.kernel}});
        specs.push_back({base + ".bias", {arch.conv_widths[i]}});
        prev = arch.conv_widths[i];
    }
    specs.push_back({"fc.weight", {arch.num_classes, prev}});
    specs.push_back({"fc.bias", {arch.num_classes}});
    return specs;
}

std::size_t shape_elements(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

template <typename T>
void check_params(const ModelArchitecture& arch, const Params<T>& params) {
    const auto specs = tensor_specs(arch);
    if (params.tensors.size() != specs.size()) {
        throw std::invalid_argument("parameter tensor count does not match architecture");
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& t = params.tensors[i];
        if (t.name != specs[i].name || t.shape != specs[i].shape ||
            t.values.size() != shape_elements(specs[i].shape)) {
            throw std::invalid_argument("parameter tensor '" + specs[i].name +
                                        "' does not match architecture");
        }
    }
}

// conv 3x3, pad 1, stride 1, bias, ReLU. in: [n][c_in][side][side].
template <typename T>
void conv_relu_forward(const T* in, int n, int c_in, int side, const T* weight,
                       const T* bias, int c_out, T* out) {
    const std::size_t plane = static_cast<std::size_t>(side) * side;
#pragma omp parallel for collapse(2) schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int oc = 0; oc < c_out; ++oc) {
            std::vector<T> acc(plane, bias[oc]);
            const T* wbase = weight + static_cast<std::size_t>(oc) * c_in * 9;
            for (int ic = 0; ic < c_in; ++ic) {
                const T* xplane = in + (static_cast<std::size_t>(ni) * c_in + ic) * plane;
                for (int ky = 0; ky < 3; ++ky) {
                    const int dy = ky - 1;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int dx = kx - 1;
                        const T wv = wbase[(ic * 3 + ky) * 3 + kx];
                        const int y_lo = dy < 0 ? 1 : 0;
                        const int y_hi = dy > 0 ? side - 1 : side;
                        const int x_lo = dx < 0 ? 1 : 0;
                        const int x_hi = dx > 0 ? side - 1 : side;
                        for (int y = y_lo; y < y_hi; ++y) {
                            const T* src = xplane + (y + dy) * side + dx;
                            T* dst = acc.data() + static_cast<std::size_t>(y) * side;
                            for (int x = x_lo; x < x_hi; ++x) dst[x] += wv * src[x];
                        }
                    }
                }
            }
            T* oplane = out + (static_cast<std::size_t>(ni) * c_out + oc) * plane;
            for (std::size_t i = 0; i < plane; ++i) oplane[i] = acc[i] > T(0) ? acc[i] : T(0);
        }
    }
}

// 2x2 max-pool, stride 2. argmax keeps the flat input index for the scatter
// in the backward pass; ties resolve to the first (top-left) element.
template <typename T>
void maxpool_forward(const std::vector<T>& in, int n, int c, int side,
                     std::vector<T>& out, std::vector<int>& argmax) {
    const int os = side / 2;
    out.assign(static_cast<std::size_t>(n) * c * os * os, T(0));
    argmax.assign(out.size(), 0);
#pragma omp parallel for schedule(static)
    for (long long pc = 0; pc < static_cast<long long>(n) * c; ++pc) {
        const std::size_t in_off = static_cast<std::size_t>(pc) * side * side;
        const T* ip = in.data() + in_off;
        T* op = out.data() + static_cast<std::size_t>(pc) * os * os;
        int* ap = argmax.data() + static_cast<std::size_t>(pc) * os * os;
        for (int y = 0; y < os; ++y) {
            for (int x = 0; x < os; ++x) {
                const int base = (2 * y) * side + 2 * x;
                int best = base;
                T bv = ip[base];
                const int cands[3] = {base + 1, base + side, base + side + 1};
                for (int cand : cands) {
                    if (ip[cand] > bv) {
                        bv = ip[cand];
                        best = cand;
                    }
                }
                op[y * os + x] = bv;
                ap[y * os + x] = static_cast<int>(in_off) + best;
            }
        }
    }
}

template <typename T>
struct ForwardCache {
    std::vector<std::vector<T>> act;     // post-ReLU conv output per block
    std::vector<std::vector<T>> pooled;  // pooled output per block
    std::vector<std::vector<int>> argmax;
    std::vector<T> gap;
    std::vector<T> logits;
};

template <typename T>
void forward_impl(const ModelArchitecture& arch, const Params<T>& params,
                  std::span<const T> batch, int n, ForwardCache<T>& cache) {
    check_params(arch, params);
    if (n < 1) throw std::invalid_argument("batch must hold at least one sample");
    const std::size_t per_sample = static_cast<std::size_t>(arch.in_channels) *
                                   arch.input_size * arch.input_size;
    if (batch.size() != per_sample * static_cast<std::size_t>(n)) {
        throw std::invalid_argument("batch size does not match architecture input");
    }

    const int blocks = static_cast<int>(arch.conv_widths.size());
    cache.act.resize(blocks);
    cache.pooled.resize(blocks);
    cache.argmax.resize(blocks);

    int side = arch.input_size;
    int c_in = arch.in_channels;
    const T* in = batch.data();
    for (int l = 0; l < blocks; ++l) {
        const int c_out = arch.conv_widths[l];
        const auto& w = params.tensors[2 * l];
        const auto& b = params.tensors[2 * l + 1];
        cache.act[l].assign(static_cast<std::size_t>(n) * c_out * side * side, T(0));
        conv_relu_forward(in, n, c_in, side, w.values.data(), b.values.data(), c_out,
                          cache.act[l].data());
        maxpool_forward(cache.act[l], n, c_out, side, cache.pooled[l], cache.argmax[l]);
        side /= 2;
        c_in = c_out;
        in = cache.pooled[l].data();
    }

    // Global average pool.
    const int c_last = c_in;
    const std::size_t plane = static_cast<std::size_t>(side) * side;
    cache.gap.assign(static_cast<std::size_t>(n) * c_last, T(0));
#pragma omp parallel for schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int c = 0; c < c_last; ++c) {
            const T* p = cache.pooled[blocks - 1].data() +
                         (static_cast<std::size_t>(ni) * c_last + c) * plane;
            T sum = T(0);
            for (std::size_t i = 0; i < plane; ++i) sum += p[i];
            cache.gap[static_cast<std::size_t>(ni) * c_last + c] = sum / static_cast<T>(plane);
        }
    }

    const auto& fw = params.tensors[2 * blocks];
    const auto& fb = params.tensors[2 * blocks + 1];
    const int k = arch.num_classes;
    cache.logits.assign(static_cast<std::size_t>(n) * k, T(0));
#pragma omp parallel for schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        const T* g = cache.gap.data() + static_cast<std::size_t>(ni) * c_last;
        for (int j = 0; j < k; ++j) {
            T acc = fb.values[j];
            const T* wrow = fw.values.data() + static_cast<std::size_t>(j) * c_last;
            for (int c = 0; c < c_last; ++c) acc += wrow[c] * g[c];
            cache.logits[static_cast<std::size_t>(ni) * k + j] = acc;
        }
    }
}

}  // namespace

template <typename T>
Params<T> init_params(const ModelArchitecture& arch, std::uint64_t seed) {
    arch.validate();
    Params<T> params;
    const auto specs = tensor_specs(arch);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        Tensor<T> t;
        t.name = specs[i].name;
        t.shape = specs[i].shape;
        t.values.assign(shape_elements(t.shape), T(0));
        if (t.shape.size() > 1) {  // weights: fan-in-scaled uniform; biases stay zero
            std::size_t fan_in = 1;
            for (std::size_t d = 1; d < t.shape.size(); ++d) fan_in *= t.shape[d];
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            Rng rng(mix_seed(seed, i));
            for (auto& v : t.values) v = static_cast<T>(rng.uniform(-bound, bound));
        }
        params.tensors.push_back(std::move(t));
    }
    return params;
}

template <typename T>
std::vector<T> forward(const ModelArchitecture& arch, const Params<T>& params,
                       std::span<const T> batch, int n) {
    ForwardCache<T> cache;
    forward_impl(arch, params, batch, n, cache);
    return std::move(cache.logits);
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits, int n, int num_classes) {
    std::vector<T> probs(logits.size());
    for (int ni = 0; ni < n; ++ni) {
        const T* row = logits.data() + static_cast<std::size_t>(ni) * num_classes;
        T* out = probs.data() + static_cast<std::size_t>(ni) * num_classes;
        T mx = row[0];
        for (int j = 1; j < num_classes; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (int j = 0; j < num_classes; ++j) {
            out[j] = std::exp(row[j] - mx);
            sum += out[j];
        }
        for (int j = 0; j < num_classes; ++j) out[j] /= sum;
    }
    return probs;
}

template <typename T>
std::pair<T, std::vector<T>> cross_entropy(std::span<const T> logits,
                                           std::span<const int> labels, int num_classes) {
    const int n = static_cast<int>(labels.size());
    if (n < 1 || logits.size() != static_cast<std::size_t>(n) * num_classes) {
        throw std::invalid_argument("cross_entropy: logits/labels shape mismatch");
    }
    for (const T v : logits) {
        if (!std::isfinite(static_cast<double>(v))) {
            throw std::runtime_error("cross_entropy: non-finite logits");
        }
    }
    for (const int label : labels) {
        if (label < 0 || label >= num_classes) {
            throw std::invalid_argument("cross_entropy: label out of range");
        }
    }

    std::vector<T> grad = softmax(logits, n, num_classes);
    T loss = T(0);
    for (int ni = 0; ni < n; ++ni) {
        const T* row = logits.data() + static_cast<std::size_t>(ni) * num_classes;
        T mx = row[0];
        for (int j = 1; j < num_classes; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (int j = 0; j < num_classes; ++j) sum += std::exp(row[j] - mx);
        loss += -(row[labels[ni]] - mx - std::log(sum));
    }
    loss /= static_cast<T>(n);

    const T inv_n = T(1) / static_cast<T>(n);
    for (int ni = 0; ni < n; ++ni) {
        T* row = grad.data() + static_cast<std::size_t>(ni) * num_classes;
        row[labels[ni]] -= T(1);
        for (int j = 0; j < num_classes; ++j) row[j] *= inv_n;
    }
    return {loss, std::move(grad)};
}

namespace {

// dW/db/din for the 3x3 same-padding conv; dz is the gradient at the
// pre-pool, post-ReLU-mask stage. din may be null for the first block.
template <typename T>
void conv_backward(const T* in, const T* dz, int n, int c_in, int side, const T* weight,
                   int c_out, T* dw, T* db, T* din) {
    const std::size_t plane = static_cast<std::size_t>(side) * side;

#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < c_out; ++oc) {
        T bias_acc = T(0);
        T* dwbase = dw + static_cast<std::size_t>(oc) * c_in * 9;
        for (int ni = 0; ni < n; ++ni) {
            const T* dzplane = dz + (static_cast<std::size_t>(ni) * c_out + oc) * plane;
            for (std::size_t i = 0; i < plane; ++i) bias_acc += dzplane[i];
            for (int ic = 0; ic < c_in; ++ic) {
                const T* xplane = in + (static_cast<std::size_t>(ni) * c_in + ic) * plane;
                for (int ky = 0; ky < 3; ++ky) {
                    const int dy = ky - 1;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int dx = kx - 1;
                        const int y_lo = dy < 0 ? 1 : 0;
                        const int y_hi = dy > 0 ? side - 1 : side;
                        const int x_lo = dx < 0 ? 1 : 0;
                        const int x_hi = dx > 0 ? side - 1 : side;
                        T acc = T(0);
                        for (int y = y_lo; y < y_hi; ++y) {
                            const T* gsrc = dzplane + static_cast<std::size_t>(y) * side;
                            const T* xsrc = xplane + (y + dy) * side + dx;
                            for (int x = x_lo; x < x_hi; ++x) acc += gsrc[x] * xsrc[x];
                        }
                        dwbase[(ic * 3 + ky) * 3 + kx] += acc;
                    }
                }
            }
        }
        db[oc] += bias_acc;
    }

    if (!din) return;
#pragma omp parallel for schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        for (int ic = 0; ic < c_in; ++ic) {
            T* dplane = din + (static_cast<std::size_t>(ni) * c_in + ic) * plane;
            for (int oc = 0; oc < c_out; ++oc) {
                const T* dzplane = dz + (static_cast<std::size_t>(ni) * c_out + oc) * plane;
                const T* wbase = weight + (static_cast<std::size_t>(oc) * c_in + ic) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const int dy = ky - 1;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int dx = kx - 1;
                        const T wv = wbase[ky * 3 + kx];
                        const int y_lo = dy < 0 ? 1 : 0;
                        const int y_hi = dy > 0 ? side - 1 : side;
                        const int x_lo = dx < 0 ? 1 : 0;
                        const int x_hi = dx > 0 ? side - 1 : side;
                        for (int y = y_lo; y < y_hi; ++y) {
                            T* dst = dplane + (y + dy) * side + dx;
                            const T* gsrc = dzplane + static_cast<std::size_t>(y) * side;
                            for (int x = x_lo; x < x_hi; ++x) dst[x] += wv * gsrc[x];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

template <typename T>
Params<T> backward(const ModelArchitecture& arch, const Params<T>& params,
                   std::span<const T> batch, std::span<const int> labels, int n,
                   T* loss_out) {
    if (static_cast<int>(labels.size()) != n) {
        throw std::invalid_argument("backward: label count does not match batch");
    }
    ForwardCache<T> cache;
    forward_impl(arch, params, batch, n, cache);

    auto [loss, dlogits] = cross_entropy<T>(cache.logits, labels, arch.num_classes);
    if (loss_out) *loss_out = loss;

    Params<T> grads;
    grads.tensors.reserve(params.tensors.size());
    for (const auto& t : params.tensors) {
        grads.tensors.push_back({t.name, t.shape, std::vector<T>(t.values.size(), T(0))});
    }

    const int blocks = static_cast<int>(arch.conv_widths.size());
    const int c_last = arch.conv_widths[blocks - 1];
    const int fs = arch.feature_size();
    const std::size_t fplane = static_cast<std::size_t>(fs) * fs;
    const int k = arch.num_classes;

    auto& dfw = grads.tensors[2 * blocks].values;
    auto& dfb = grads.tensors[2 * blocks + 1].values;
    const auto& fw = params.tensors[2 * blocks].values;

    for (int ni = 0; ni < n; ++ni) {
        const T* g = cache.gap.data() + static_cast<std::size_t>(ni) * c_last;
        const T* dl = dlogits.data() + static_cast<std::size_t>(ni) * k;
        for (int j = 0; j < k; ++j) {
            dfb[j] += dl[j];
            T* wrow = dfw.data() + static_cast<std::size_t>(j) * c_last;
            for (int c = 0; c < c_last; ++c) wrow[c] += dl[j] * g[c];
        }
    }

    // gap -> last pooled plane (mean spreads gradient uniformly)
    std::vector<T> dpool(static_cast<std::size_t>(n) * c_last * fplane, T(0));
#pragma omp parallel for schedule(static)
    for (int ni = 0; ni < n; ++ni) {
        const T* dl = dlogits.data() + static_cast<std::size_t>(ni) * k;
        for (int c = 0; c < c_last; ++c) {
            T dg = T(0);
            for (int j = 0; j < k; ++j) dg += dl[j] * fw[static_cast<std::size_t>(j) * c_last + c];
            const T spread = dg / static_cast<T>(fplane);
            T* dst = dpool.data() + (static_cast<std::size_t>(ni) * c_last + c) * fplane;
            for (std::size_t i = 0; i < fplane; ++i) dst[i] = spread;
        }
    }

    int side = arch.input_size >> (blocks - 1);  // conv-input side of the last block
    for (int l = blocks - 1; l >= 0; --l) {
        const int c_out = arch.conv_widths[l];
        const int c_in = l == 0 ? arch.in_channels : arch.conv_widths[l - 1];
        const T* in = l == 0 ? batch.data() : cache.pooled[l - 1].data();

        // pool scatter + ReLU mask
        std::vector<T> dz(cache.act[l].size(), T(0));
        const auto& amax = cache.argmax[l];
#pragma omp parallel for schedule(static)
        for (long long pc = 0; pc < static_cast<long long>(n) * c_out; ++pc) {
            const std::size_t po = static_cast<std::size_t>(pc) * (side / 2) * (side / 2);
            for (std::size_t i = 0; i < static_cast<std::size_t>(side / 2) * (side / 2); ++i) {
                dz[amax[po + i]] += dpool[po + i];
            }
        }
        const auto& act = cache.act[l];
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(dz.size()); ++i) {
            if (act[i] <= T(0)) dz[i] = T(0);
        }

        std::vector<T> din;
        if (l > 0) din.assign(static_cast<std::size_t>(n) * c_in * side * side, T(0));
        conv_backward(in, dz.data(), n, c_in, side, params.tensors[2 * l].values.data(),
                      c_out, grads.tensors[2 * l].values.data(),
                      grads.tensors[2 * l + 1].values.data(),
                      l > 0 ? din.data() : nullptr);
        dpool = std::move(din);
        side *= 2;
    }
    return grads;
}

template <typename T>
AdamState<T> AdamState<T>::zeros_like(const Params<T>& params) {
    AdamState<T> state;
    for (const auto& t : params.tensors) {
        state.m.emplace_back(t.values.size(), T(0));
        state.v.emplace_back(t.values.size(), T(0));
    }
    return state;
}

template <typename T>
void optimizer_step(Params<T>& params, const Params<T>& gradients, AdamState<T>& state,
                    const TrainConfig& cfg, int step_index) {
    if (step_index < 1) throw std::invalid_argument("step_index must be >= 1");
    if (gradients.tensors.size() != params.tensors.size() ||
        state.m.size() != params.tensors.size()) {
        throw std::invalid_argument("optimizer state/gradient shape mismatch");
    }
    const T lr = static_cast<T>(cfg.learning_rate);
    const T wd = static_cast<T>(cfg.weight_decay);
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T eps = static_cast<T>(cfg.epsilon);
    const T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, step_index));
    const T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, step_index));
    const T decay = T(1) - lr * wd;

    for (std::size_t t = 0; t < params.tensors.size(); ++t) {
        auto& p = params.tensors[t].values;
        const auto& g = gradients.tensors[t].values;
        auto& m = state.m[t];
        auto& v = state.v[t];
        if (g.size() != p.size()) {
            throw std::invalid_argument("gradient shape mismatch for tensor '" +
                                        params.tensors[t].name + "'");
        }
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(p.size()); ++i) {
            p[i] *= decay;  // decoupled weight decay
            m[i] = b1 * m[i] + (T(1) - b1) * g[i];
            v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
            const T mhat = m[i] / bc1;
            const T vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

TrainResult train(const dataset::Manifest& train_split, const dataset::Manifest& val_split,
                  const ModelArchitecture& arch, const TrainConfig& cfg) {
    arch.validate();
    cfg.validate();
    if (train_split.records.empty()) throw std::invalid_argument("empty train split");

    TrainResult result;
    result.params = init_params<float>(arch, cfg.seed);
    result.best_val_accuracy = -1.0;

    auto state = AdamState<float>::zeros_like(result.params);
    ParamsF params = result.params;
    int step = 0;

    std::vector<std::size_t> order(train_split.records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng rng(mix_seed(cfg.seed, 0xe70c0000ull + static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
        }

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
            const auto batch = dataset::load_batch(train_split, idx, arch.input_size);

            float loss = 0.0f;
            auto grads = backward<float>(arch, params, batch.values, batch.labels,
                                         batch.count, &loss);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("non-finite training loss at step " +
                                         std::to_string(step + 1));
            }
            optimizer_step(params, grads, state, cfg, ++step);
            loss_sum += static_cast<double>(loss) * batch.count;
        }

        const double epoch_loss = loss_sum / static_cast<double>(order.size());
        const double val_acc = val_split.records.empty()
                                   ? 0.0
                                   : evaluate_accuracy(val_split, arch, params);
        result.log.push_back({epoch, epoch_loss, val_acc});
        if (val_acc > result.best_val_accuracy) {
            result.best_val_accuracy = val_acc;
            result.best_epoch = epoch;
            result.params = params;
        }
    }
    if (result.best_val_accuracy < 0.0) result.best_val_accuracy = 0.0;
    return result;
}

double evaluate_accuracy(const dataset::Manifest& manifest, const ModelArchitecture& arch,
                         const ParamsF& params, int batch_size) {
    if (manifest.records.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < manifest.records.size();
         start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end =
            std::min(manifest.records.size(), start + static_cast<std::size_t>(batch_size));
        std::vector<std::size_t> idx(end - start);
        for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
        const auto batch = dataset::load_batch(manifest, idx, arch.input_size);
        const auto logits = forward<float>(arch, params, batch.values, batch.count);
        for (int ni = 0; ni < batch.count; ++ni) {
            const float* row = logits.data() + static_cast<std::size_t>(ni) * arch.num_classes;
            int best = 0;
            for (int j = 1; j < arch.num_classes; ++j) {
                if (row[j] > row[best]) best = j;
            }
            if (best == batch.labels[ni]) ++correct;
        }
    }
    return 100.0 * static_cast<double>(correct) /
           static_cast<double>(manifest.records.size());
}

void write_train_log(const std::vector<EpochLog>& log, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write training log: " + file.string());
    out << "epoch\ttrain_loss\tval_accuracy\n";
    char buf[96];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.2f\n", row.epoch, row.train_loss,
                      row.val_accuracy);
        out << buf;
    }
}

namespace {

constexpr char kMagic[8] = {'M', 'F', 'C', 'K', 'P', 'T', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff),
                           static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v & 0xffffffffull));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        throw std::runtime_error("truncated checkpoint file");
    }
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

}  // namespace

void save_checkpoint(const ParamsF& params, const ModelArchitecture& arch,
                     const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + file.string());
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(arch.input_size));
    put_u32(out, static_cast<std::uint32_t>(arch.in_channels));
    put_u32(out, static_cast<std::uint32_t>(arch.kernel));
    put_u32(out, static_cast<std::uint32_t>(arch.num_classes));
    put_u32(out, static_cast<std::uint32_t>(arch.conv_widths.size()));
    for (int w : arch.conv_widths) put_u32(out, static_cast<std::uint32_t>(w));
    put_u32(out, static_cast<std::uint32_t>(params.tensors.size()));
    for (const auto& t : params.tensors) {
        put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
        put_u64(out, t.values.size());
        for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + file.string());
}

std::pair<ParamsF, ModelArchitecture> load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint: " + file.string());
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 6) != 0) {
        throw std::runtime_error("not a motionforge checkpoint: " + file.string());
    }
    if (std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("unsupported checkpoint version");
    }

    ModelArchitecture arch;
    arch.input_size = static_cast<int>(get_u32(in));
    arch.in_channels = static_cast<int>(get_u32(in));
    arch.kernel = static_cast<int>(get_u32(in));
    arch.num_classes = static_cast<int>(get_u32(in));
    const std::uint32_t blocks = get_u32(in);
    if (blocks == 0 || blocks > 64) throw std::runtime_error("corrupt checkpoint header");
    arch.conv_widths.resize(blocks);
    for (auto& w : arch.conv_widths) w = static_cast<int>(get_u32(in));

    const auto specs = tensor_specs(arch);
    const std::uint32_t count = get_u32(in);
    if (count != specs.size()) {
        throw std::runtime_error("checkpoint tensor count does not match architecture");
    }

    ParamsF params;
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor<float> t;
        const std::uint32_t name_len = get_u32(in);
        if (name_len > 256) throw std::runtime_error("corrupt checkpoint tensor name");
        t.name.resize(name_len);
        if (!in.read(t.name.data(), name_len)) {
            throw std::runtime_error("truncated checkpoint file");
        }
        const std::uint32_t ndim = get_u32(in);
        if (ndim > 8) throw std::runtime_error("corrupt checkpoint tensor shape");
        t.shape.resize(ndim);
        for (auto& d : t.shape) d = static_cast<int>(get_u32(in));
        const std::uint64_t elems = get_u64(in);
        if (t.name != specs[i].name || t.shape != specs[i].shape ||
            elems != shape_elements(specs[i].shape)) {
            throw std::runtime_error("checkpoint tensor '" + specs[i].name +
                                     "' does not match the stored architecture");
        }
        t.values.resize(elems);
        for (auto& v : t.values) v = std::bit_cast<float>(get_u32(in));
        params.tensors.push_back(std::move(t));
    }
    return {std::move(params), std::move(arch)};
}

// Explicit instantiations: float for production, double for the
// finite-difference gradient-check mode.
template struct Params<float>;
template struct Params<double>;
template struct AdamState<float>;
template struct AdamState<double>;
template Params<float> init_params<float>(const ModelArchitecture&, std::uint64_t);
template Params<double> init_params<double>(const ModelArchitecture&, std::uint64_t);
template std::vector<float> forward<float>(const ModelArchitecture&, const Params<float>&,
                                           std::span<const float>, int);
template std::vector<double> forward<double>(const ModelArchitecture&, const Params<double>&,
                                             std::span<const double>, int);
template std::vector<float> softmax<float>(std::span<const float>, int, int);
template std::vector<double> softmax<double>(std::span<const double>, int, int);
template std::pair<float, std::vector<float>> cross_entropy<float>(std::span<const float>,
                                                                   std::span<const int>, int);
template std::pair<double, std::vector<double>> cross_entropy<double>(std::span<const double>,
                                                                      std::span<const int>,
                                                                      int);
template Params<float> backward<float>(const ModelArchitecture&, const Params<float>&,
                                       std::span<const float>, std::span<const int>, int,
                                       float*);
template Params<double> backward<double>(const ModelArchitecture&, const Params<double>&,
                                         std::span<const double>, std::span<const int>, int,
                                         double*);
template void optimizer_step<float>(Params<float>&, const Params<float>&, AdamState<float>&,
                                    const TrainConfig&, int);
template void optimizer_step<double>(Params<double>&, const Params<double>&,
                                     AdamState<double>&, const TrainConfig&, int);

}  // namespace motionforge::classifier
