#include "motionforge/imaging.hpp"

#include <cmath>
#include <cstdint>

namespace motionforge::imaging {

AffineTransform AffineTransform::rotation(double radians) {
    const double cs = std::cos(radians);
    const double sn = std::sin(radians);
    return {cs, -sn, 0.0, sn, cs, 0.0};
}

AffineTransform AffineTransform::after(const AffineTransform& first) const {
    AffineTransform r;
    r.a = a * first.a + b * first.c;
    r.b = a * first.b + b * first.d;
    r.c = c * first.a + d * first.c;
    r.d = c * first.b + d * first.d;
    r.tx = a * first.tx + b * first.ty + tx;
    r.ty = c * first.tx + d * first.ty + ty;
    return r;
}

AffineTransform AffineTransform::inverse() const {
    const double det = determinant();
    if (det == 0.0 || !std::isfinite(det)) {
        throw std::invalid_argument("non-invertible transform");
    }
    AffineTransform r;
    r.a = d / det;
    r.b = -b / det;
    r.c = -c / det;
    r.d = a / det;
    r.tx = -(r.a * tx + r.b * ty);
    r.ty = -(r.c * tx + r.d * ty);
    return r;
}

namespace {

inline std::uint8_t quantize(double v) {
    const double r = std::floor(v + 0.5);
    if (r <= 0.0) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
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

    const int sw = src.pixels.width;
    const int sh = src.pixels.height;
    const std::uint8_t* spx = src.pixels.data.data();
    const std::uint8_t* sal = src.alpha.data.data();
    std::uint8_t* opx = out.pixels.data.data();
    std::uint8_t* oal = out.alpha.data.data();

#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < out_height; ++oy) {
        for (int ox = 0; ox < out_width; ++ox) {
            const double sx = inv.a * ox + inv.b * oy + inv.tx;
            const double sy = inv.c * ox + inv.d * oy + inv.ty;

            // Nearest-neighbor alpha; outside the source is transparent.
            const double rxd = std::floor(sx + 0.5);
            const double ryd = std::floor(sy + 0.5);
            std::uint8_t alpha = 0;
            if (rxd >= 0.0 && rxd <= sw - 1 && ryd >= 0.0 && ryd <= sh - 1) {
                alpha = sal[static_cast<int>(ryd) * sw + static_cast<int>(rxd)];
            }
            oal[oy * out_width + ox] = alpha;

            // Bilinear color over a zero-padded source.
            const double fxd = std::floor(sx);
            const double fyd = std::floor(sy);
            const int x0 = static_cast<int>(fxd);
            const int y0 = static_cast<int>(fyd);
            const double fx = sx - fxd;
            const double fy = sy - fyd;
            const double w00 = (1.0 - fx) * (1.0 - fy);
            const double w10 = fx * (1.0 - fy);
            const double w01 = (1.0 - fx) * fy;
            const double w11 = fx * fy;

            std::uint8_t* dst = opx + (static_cast<std::size_t>(oy) * out_width + ox) * 3;
            if (x0 >= 0 && y0 >= 0 && x0 + 1 < sw && y0 + 1 < sh) {
                const std::uint8_t* p00 = spx + (static_cast<std::size_t>(y0) * sw + x0) * 3;
                const std::uint8_t* p10 = p00 + 3;
                const std::uint8_t* p01 = p00 + static_cast<std::size_t>(sw) * 3;
                const std::uint8_t* p11 = p01 + 3;
                for (int ch = 0; ch < 3; ++ch) {
                    dst[ch] = quantize(w00 * p00[ch] + w10 * p10[ch] +
                                       w01 * p01[ch] + w11 * p11[ch]);
                }
            } else if (x0 >= -1 && y0 >= -1 && x0 < sw && y0 < sh) {
                for (int ch = 0; ch < 3; ++ch) {
                    double acc = 0.0;
                    if (x0 >= 0 && y0 >= 0)
                        acc += w00 * spx[(static_cast<std::size_t>(y0) * sw + x0) * 3 + ch];
                    if (x0 + 1 < sw && y0 >= 0)
                        acc += w10 * spx[(static_cast<std::size_t>(y0) * sw + x0 + 1) * 3 + ch];
                    if (x0 >= 0 && y0 + 1 < sh)
                        acc += w01 * spx[(static_cast<std::size_t>(y0 + 1) * sw + x0) * 3 + ch];
                    if (x0 + 1 < sw && y0 + 1 < sh)
                        acc += w11 * spx[(static_cast<std::size_t>(y0 + 1) * sw + x0 + 1) * 3 + ch];
                    dst[ch] = quantize(acc);
                }
            }
            // else: fully outside, stays 0
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
    const std::uint8_t* bg = background.data.data();
    const std::uint8_t* fg = sprite.pixels.data.data();
    const std::uint8_t* al = sprite.alpha.data.data();
    std::uint8_t* dst = out.data.data();
    const int w = background.width;
    const int h = background.height;

#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            const std::size_t p = row + x;
            const std::size_t q = p * 3;
            if (al[p] != 0) {
                dst[q] = fg[q];
                dst[q + 1] = fg[q + 1];
                dst[q + 2] = fg[q + 2];
            } else {
                dst[q] = bg[q];
                dst[q + 1] = bg[q + 1];
                dst[q + 2] = bg[q + 2];
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
    const std::uint64_t n = frames.size();
    ImageBuffer out(w, h);
    std::uint8_t* dst = out.data.data();
    const std::size_t row_samples = static_cast<std::size_t>(w) * 3;

#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        std::vector<std::uint64_t> acc(row_samples, 0);
        const std::size_t off = static_cast<std::size_t>(y) * row_samples;
        for (const auto& f : frames) {
            const std::uint8_t* src = f.data.data() + off;
            for (std::size_t i = 0; i < row_samples; ++i) acc[i] += src[i];
        }
        for (std::size_t i = 0; i < row_samples; ++i) {
            dst[off + i] = mean_quantize(acc[i], n);
        }
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
    const std::uint8_t* spx = src.data.data();
    std::uint8_t* dst = out.data.data();
    const int sw = src.width;
    const int sh = src.height;

#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < out_height; ++oy) {
        const double sy = (oy + 0.5) * sy_scale - 0.5;
        const double fyd = std::floor(sy);
        const int y0 = static_cast<int>(fyd);
        const double fy = sy - fyd;
        const int y0c = y0 < 0 ? 0 : (y0 >= sh ? sh - 1 : y0);
        const int y1c = y0 + 1 < 0 ? 0 : (y0 + 1 >= sh ? sh - 1 : y0 + 1);
        for (int ox = 0; ox < out_width; ++ox) {
            const double sx = (ox + 0.5) * sx_scale - 0.5;
            const double fxd = std::floor(sx);
            const int x0 = static_cast<int>(fxd);
            const double fx = sx - fxd;
            const int x0c = x0 < 0 ? 0 : (x0 >= sw ? sw - 1 : x0);
            const int x1c = x0 + 1 < 0 ? 0 : (x0 + 1 >= sw ? sw - 1 : x0 + 1);
            const std::uint8_t* p00 = spx + (static_cast<std::size_t>(y0c) * sw + x0c) * 3;
            const std::uint8_t* p10 = spx + (static_cast<std::size_t>(y0c) * sw + x1c) * 3;
            const std::uint8_t* p01 = spx + (static_cast<std::size_t>(y1c) * sw + x0c) * 3;
            const std::uint8_t* p11 = spx + (static_cast<std::size_t>(y1c) * sw + x1c) * 3;
            std::uint8_t* d = dst + (static_cast<std::size_t>(oy) * out_width + ox) * 3;
            for (int ch = 0; ch < 3; ++ch) {
                const double v = (1.0 - fx) * (1.0 - fy) * p00[ch] + fx * (1.0 - fy) * p10[ch] +
                                 (1.0 - fx) * fy * p01[ch] + fx * fy * p11[ch];
                d[ch] = quantize(v);
            }
        }
    }
    return out;
}

}  // namespace motionforge::imaging
