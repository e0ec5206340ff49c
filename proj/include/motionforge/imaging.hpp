#pragma once

#include <span>

#include "motionforge/image.hpp"

namespace motionforge::imaging {

// Warps a sprite into an out_width x out_height canvas. Each output pixel is
// sampled at the inverse-mapped source location: bilinear over a zero-padded
// source for colors, nearest-neighbor for alpha (out-of-source -> 0). The
// anchor is mapped forward through t. Throws on a singular transform.
Sprite affine_warp(const Sprite& src, const AffineTransform& t,
                   int out_width, int out_height);

// Hard binary compositing: sprite pixel where alpha = 255, background pixel
// where alpha = 0. Dimensions must match; the background is not mutated.
ImageBuffer alpha_composite(const ImageBuffer& background, const Sprite& sprite);

// Per-pixel, per-channel arithmetic mean with integer accumulation and
// round-half-up quantization. All frames must share dimensions; N >= 1.
ImageBuffer mean_stack(std::span<const ImageBuffer> frames);

// Bilinear resize with half-pixel center mapping; identity when sizes match.
ImageBuffer resize_bilinear(const ImageBuffer& src, int out_width, int out_height);

// Round-half-up quantization of a nonnegative integer ratio, shared by the
// mean kernels so rolling and naive means stay bit-identical.
inline std::uint8_t mean_quantize(std::uint64_t sum, std::uint64_t n) {
    return static_cast<std::uint8_t>((sum + n / 2) / n);
}

}  // namespace motionforge::imaging
