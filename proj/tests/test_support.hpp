#pragma once

// Shared fixtures: procedural person/background assets, random buffers, and
// scratch directories. No network, no external data.

#include <unistd.h>

#include <filesystem>
#include <string>

#include "motionforge/image.hpp"
#include "motionforge/rng.hpp"

namespace testsupport {

using motionforge::Rng;
using motionforge::imaging::ImageBuffer;
using motionforge::imaging::MaskBuffer;
using motionforge::imaging::Sprite;

inline ImageBuffer random_image(int w, int h, std::uint64_t seed) {
    ImageBuffer img(w, h);
    Rng rng(seed);
    for (auto& s : img.data) s = static_cast<std::uint8_t>(rng.uniform_int(256));
    return img;
}

inline MaskBuffer random_mask(int w, int h, std::uint64_t seed, double density = 0.5) {
    MaskBuffer mask(w, h);
    Rng rng(seed);
    for (auto& s : mask.data) s = rng.bernoulli(density) ? 255 : 0;
    return mask;
}

// A stick figure: colored torso rectangle plus a head block, mask matching.
// Distinct colors per seed so a classifier has texture to hold on to.
inline std::pair<ImageBuffer, MaskBuffer> make_person(int w, int h, std::uint64_t seed) {
    ImageBuffer img(w, h, 0);
    MaskBuffer mask(w, h, 0);
    Rng rng(seed);
    const std::uint8_t body_r = static_cast<std::uint8_t>(64 + rng.uniform_int(192));
    const std::uint8_t body_g = static_cast<std::uint8_t>(64 + rng.uniform_int(192));
    const std::uint8_t body_b = static_cast<std::uint8_t>(64 + rng.uniform_int(192));

    const int head_h = h / 4;
    const int body_x0 = w / 4, body_x1 = w - w / 4;
    for (int y = head_h; y < h; ++y) {
        for (int x = body_x0; x < body_x1; ++x) {
            img.at(x, y, 0) = body_r;
            img.at(x, y, 1) = body_g;
            img.at(x, y, 2) = body_b;
            mask.at(x, y) = 255;
        }
    }
    const int head_x0 = w / 3, head_x1 = w - w / 3;
    for (int y = 0; y < head_h; ++y) {
        for (int x = head_x0; x < head_x1; ++x) {
            img.at(x, y, 0) = 230;
            img.at(x, y, 1) = 190;
            img.at(x, y, 2) = 160;
            mask.at(x, y) = 255;
        }
    }
    return {std::move(img), std::move(mask)};
}

// A smooth two-tone gradient scene, person-free.
inline ImageBuffer make_background(int w, int h, std::uint64_t seed) {
    ImageBuffer img(w, h);
    Rng rng(seed);
    const double base_r = rng.uniform(40, 160);
    const double base_g = rng.uniform(40, 160);
    const double base_b = rng.uniform(40, 160);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double t = static_cast<double>(y) / h;
            img.at(x, y, 0) = static_cast<std::uint8_t>(base_r + 60.0 * t);
            img.at(x, y, 1) = static_cast<std::uint8_t>(base_g + 40.0 * t);
            img.at(x, y, 2) = static_cast<std::uint8_t>(base_b + 50.0 * (1.0 - t));
        }
    }
    return img;
}

// Fresh scratch directory under the system temp dir; removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            path_ = base / ("motionforge_" + tag + "_" + std::to_string(::getpid()) + "_" +
                            std::to_string(i));
            if (!std::filesystem::exists(path_)) break;
        }
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& sub) const { return path_ / sub; }

private:
    std::filesystem::path path_;
};

}  // namespace testsupport
