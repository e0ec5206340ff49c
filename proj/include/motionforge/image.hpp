#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace motionforge::imaging {

// 8-bit RGB image, row-major interleaved samples.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    static constexpr int channels = 3;
    std::vector<std::uint8_t> data;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, std::uint8_t fill = 0) : width(w), height(h) {
        if (w < 1 || h < 1) throw std::invalid_argument("image dimensions must be >= 1");
        data.assign(static_cast<std::size_t>(w) * h * channels, fill);
    }

    std::uint8_t& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t sample_count() const { return data.size(); }

    bool same_size(const ImageBuffer& o) const {
        return width == o.width && height == o.height;
    }
    bool operator==(const ImageBuffer& o) const = default;
};

// Single-channel binary mask; every sample is 0 or 255 after ingestion.
struct MaskBuffer {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    MaskBuffer() = default;
    MaskBuffer(int w, int h, std::uint8_t fill = 0) : width(w), height(h) {
        if (w < 1 || h < 1) throw std::invalid_argument("mask dimensions must be >= 1");
        data.assign(static_cast<std::size_t>(w) * h, fill);
    }

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const MaskBuffer& o) const = default;
};

// Cutout person segment: pixels plus alpha mask plus a sub-pixel anchor
// (bottom-center of the mask bounding box, the "feet").
struct Sprite {
    ImageBuffer pixels;
    MaskBuffer alpha;
    double anchor_x = 0.0;
    double anchor_y = 0.0;

    int width() const { return pixels.width; }
    int height() const { return pixels.height; }
};

// 2x3 affine map  [a b tx; c d ty]  from source to output coordinates.
struct AffineTransform {
    double a = 1.0, b = 0.0, tx = 0.0;
    double c = 0.0, d = 1.0, ty = 0.0;

    static AffineTransform identity() { return {}; }
    static AffineTransform translation(double dx, double dy) {
        return {1.0, 0.0, dx, 0.0, 1.0, dy};
    }
    static AffineTransform scaling(double sx, double sy) {
        return {sx, 0.0, 0.0, 0.0, sy, 0.0};
    }
    static AffineTransform rotation(double radians);

    double determinant() const { return a * d - b * c; }

    // Composition: (*this) applied after `first`.
    AffineTransform after(const AffineTransform& first) const;
    AffineTransform inverse() const;  // throws on singular linear part

    void apply(double x, double y, double& ox, double& oy) const {
        ox = a * x + b * y + tx;
        oy = c * x + d * y + ty;
    }

    bool operator==(const AffineTransform& o) const = default;
};

}  // namespace motionforge::imaging
