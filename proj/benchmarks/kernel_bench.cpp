// Kernel throughput: OpenMP-parallel implementations against the serial
// reference, plus the rolling-sum window against naive per-push restacking.
//
// Run: ./build/benchmarks/kernel_bench [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include <vector>

#include "motionforge/imaging.hpp"
#include "motionforge/reference.hpp"
#include "motionforge/rng.hpp"
#include "motionforge/streaming.hpp"

using namespace motionforge;
using imaging::AffineTransform;
using imaging::ImageBuffer;
using imaging::MaskBuffer;
using imaging::Sprite;

namespace {

Sprite bench_sprite(int w, int h) {
    Sprite s;
    s.pixels = ImageBuffer(w, h);
    s.alpha = MaskBuffer(w, h);
    Rng rng(1);
    for (auto& v : s.pixels.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
    for (auto& v : s.alpha.data) v = rng.bernoulli(0.6) ? 255 : 0;
    s.anchor_x = w / 2.0;
    s.anchor_y = h;
    return s;
}

ImageBuffer bench_image(int w, int h, std::uint64_t seed) {
    ImageBuffer img(w, h);
    Rng rng(seed);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
    return img;
}

const AffineTransform kWarp = AffineTransform::translation(40.0, 60.0)
                                  .after(AffineTransform::rotation(0.6))
                                  .after(AffineTransform::scaling(1.3, 1.3));

void BM_warp_parallel(benchmark::State& state) {
    const Sprite sprite = bench_sprite(160, 280);
    for (auto _ : state) {
        auto out = imaging::affine_warp(sprite, kWarp, 640, 480);
        benchmark::DoNotOptimize(out.pixels.data.data());
    }
}
BENCHMARK(BM_warp_parallel);

void BM_warp_serial(benchmark::State& state) {
    const Sprite sprite = bench_sprite(160, 280);
    for (auto _ : state) {
        auto out = ref::affine_warp(sprite, kWarp, 640, 480);
        benchmark::DoNotOptimize(out.pixels.data.data());
    }
}
BENCHMARK(BM_warp_serial);

void BM_composite_parallel(benchmark::State& state) {
    const ImageBuffer bg = bench_image(640, 480, 2);
    const Sprite sprite = imaging::affine_warp(bench_sprite(160, 280), kWarp, 640, 480);
    for (auto _ : state) {
        auto out = imaging::alpha_composite(bg, sprite);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_composite_parallel);

void BM_composite_serial(benchmark::State& state) {
    const ImageBuffer bg = bench_image(640, 480, 2);
    const Sprite sprite = imaging::affine_warp(bench_sprite(160, 280), kWarp, 640, 480);
    for (auto _ : state) {
        auto out = ref::alpha_composite(bg, sprite);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_composite_serial);

void BM_mean_stack_parallel(benchmark::State& state) {
    std::vector<ImageBuffer> frames;
    for (int i = 0; i < 10; ++i) frames.push_back(bench_image(640, 480, 10 + i));
    for (auto _ : state) {
        auto out = imaging::mean_stack(frames);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_mean_stack_parallel);

void BM_mean_stack_serial(benchmark::State& state) {
    std::vector<ImageBuffer> frames;
    for (int i = 0; i < 10; ++i) frames.push_back(bench_image(640, 480, 10 + i));
    for (auto _ : state) {
        auto out = ref::mean_stack(frames);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_mean_stack_serial);

// Rolling integer sums against restacking the window from scratch per push:
// the window length N only matters for the naive variant.
void BM_window_rolling(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::vector<ImageBuffer> pool;
    for (int i = 0; i < 16; ++i) pool.push_back(bench_image(640, 480, 20 + i));
    streaming::FrameWindow window(n);
    std::size_t cursor = 0;
    while (!window.warm()) window.push(pool[cursor++ % pool.size()], 1);
    for (auto _ : state) {
        window.push(pool[cursor++ % pool.size()], 1);
        auto mean = window.mean_frame();
        benchmark::DoNotOptimize(mean.data.data());
    }
}
BENCHMARK(BM_window_rolling)->Arg(5)->Arg(50);

void BM_window_naive(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::vector<ImageBuffer> pool;
    for (int i = 0; i < 16; ++i) pool.push_back(bench_image(640, 480, 20 + i));
    streaming::FrameWindow window(n);
    std::size_t cursor = 0;
    while (!window.warm()) window.push(pool[cursor++ % pool.size()], 1);
    for (auto _ : state) {
        window.push(pool[cursor++ % pool.size()], 1);
        const auto retained = window.retained_frames();
        std::vector<ImageBuffer> copy;
        copy.reserve(retained.size());
        for (const auto* f : retained) copy.push_back(*f);
        auto mean = ref::mean_stack(copy);
        benchmark::DoNotOptimize(mean.data.data());
    }
}
BENCHMARK(BM_window_naive)->Arg(5)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
