#include "motionforge/reference.hpp"

#include <cmath>

#include "motionforge/imaging.hpp"

namespace motionforge::ref {

using imaging::AffineTransform;
using imaging::ImageBuffer;
using imaging::MaskBuffer;
using imaging::Sprite;

namespace {

inline std::uint8_t quantize(double v) {
    const double r = std::floor(v + 0.5);
    if (r <= 0.0) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

inline double sample_or_zero(const ImageBuffer& img, int x, int y, int ch) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
    return img.at(x, y, ch);
}

}  // namespace

Sprite affine_warp(const Sprite& src, const AffineTransform& t,
                   int out_width, int out_height) {
    if (out_width < 1 || out_height < 1) {
        throw std::invalid_argument("warp output dimensions must be >= 1");
    }
    const AffineTransform inv = t.inverse();

    Sprite out;
    out.pixels = ImageBuffer(out_width, out_height);
    out.alpha = MaskBuffer(out_width, out_height);
    t.apply(src.anchor_x, src.anchor_y, out.anchor_x, out.anchor_y);

    for (int oy = 0; oy < out_height; ++oy) {
        for (int ox = 0; ox < out_width; ++ox) {
            const double sx = inv.a * ox + inv.b * oy + inv.tx;
            const double sy = inv.c * ox + inv.d * oy + inv.ty;

            const double rxd = std::floor(sx + 0.5);
            const double ryd = std::floor(sy + 0.5);
            if (rxd >= 0.0 && rxd <= src.alpha.width - 1 &&
                ryd >= 0.0 && ryd <= src.alpha.height - 1) {
                out.alpha.at(ox, oy) =
                    src.alpha.at(static_cast<int>(rxd), static_cast<int>(ryd));
            }

            const double fxd = std::floor(sx);
            const double fyd = std::floor(sy);
            const int x0 = static_cast<int>(fxd);
            const int y0 = static_cast<int>(fyd);
            const double fx = sx - fxd;
            const double fy = sy - fyd;
            if (x0 < -1 || y0 < -1 || x0 >= src.pixels.width || y0 >= src.pixels.height) {
                continue;
            }
            const double w00 = (1.0 - fx) * (1.0 - fy);
            const double w10 = fx * (1.0 - fy);
            const double w01 = (1.0 - fx) * fy;
            const double w11 = fx * fy;
            for (int ch = 0; ch < 3; ++ch) {
                const double v = w00 * sample_or_zero(src.pixels, x0, y0, ch) +
                                 w10 * sample_or_zero(src.pixels, x0 + 1, y0, ch) +
                                 w01 * sample_or_zero(src.pixels, x0, y0 + 1, ch) +
                                 w11 * sample_or_zero(src.pixels, x0 + 1, y0 + 1, ch);
                out.pixels.at(ox, oy, ch) = quantize(v);
            }
        }
    }
    return out;
}

ImageBuffer alpha_composite(const ImageBuffer& background, const Sprite& sprite) {
    if (!background.same_size(sprite.pixels) ||
        sprite.alpha.width != background.width || sprite.alpha.height != background.height) {
        throw std::invalid_argument("alpha_composite: sprite/background dimension mismatch");
    }
    ImageBuffer out(background.width, background.height);
    for (int y = 0; y < background.height; ++y) {
        for (int x = 0; x < background.width; ++x) {
            const bool on = sprite.alpha.at(x, y) != 0;
            for (int ch = 0; ch < 3; ++ch) {
                out.at(x, y, ch) = on ? sprite.pixels.at(x, y, ch) : background.at(x, y, ch);
            }
        }
    }
    return out;
}

ImageBuffer mean_stack(std::span<const ImageBuffer> frames) {
    if (frames.empty()) throw std::invalid_argument("mean_stack: empty frame sequence");
    const int w = frames[0].width;
    const int h = frames[0].height;
    for (const auto& f : frames) {
        if (f.width != w || f.height != h) {
            throw std::invalid_argument("mean_stack: frame dimension mismatch");
        }
    }
    ImageBuffer out(w, h);
    const std::uint64_t n = frames.size();
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        std::uint64_t sum = 0;
        for (const auto& f : frames) sum += f.data[i];
        out.data[i] = imaging::mean_quantize(sum, n);
    }
    return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& src, int out_width, int out_height) {
    if (out_width < 1 || out_height < 1) {
        throw std::invalid_argument("resize output dimensions must be >= 1");
    }
    ImageBuffer out(out_width, out_height);
    const double sx_scale = static_cast<double>(src.width) / out_width;
    const double sy_scale = static_cast<double>(src.height) / out_height;
    auto clampw = [&](int v) { return v < 0 ? 0 : (v >= src.width ? src.width - 1 : v); };
    auto clamph = [&](int v) { return v < 0 ? 0 : (v >= src.height ? src.height - 1 : v); };

    for (int oy = 0; oy < out_height; ++oy) {
        const double sy = (oy + 0.5) * sy_scale - 0.5;
        const double fyd = std::floor(sy);
        const int y0 = static_cast<int>(fyd);
        const double fy = sy - fyd;
        for (int ox = 0; ox < out_width; ++ox) {
            const double sx = (ox + 0.5) * sx_scale - 0.5;
            const double fxd = std::floor(sx);
            const int x0 = static_cast<int>(fxd);
            const double fx = sx - fxd;
            for (int ch = 0; ch < 3; ++ch) {
                const double v =
                    (1.0 - fx) * (1.0 - fy) * src.at(clampw(x0), clamph(y0), ch) +
                    fx * (1.0 - fy) * src.at(clampw(x0 + 1), clamph(y0), ch) +
                    (1.0 - fx) * fy * src.at(clampw(x0), clamph(y0 + 1), ch) +
                    fx * fy * src.at(clampw(x0 + 1), clamph(y0 + 1), ch);
                out.at(ox, oy, ch) = quantize(v);
            }
        }
    }
    return out;
}

}  // namespace motionforge::ref
