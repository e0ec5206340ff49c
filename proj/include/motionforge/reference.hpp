#pragma once

#include <span>

#include "motionforge/image.hpp"

namespace motionforge::ref {

// Serial reference kernels. Same sampling and rounding rules as the parallel
// implementations in imaging.hpp, written as plain single-threaded loops.
// Tests assert bit-equality against these; the kernel benchmark compares
// throughput against them.

imaging::Sprite affine_warp(const imaging::Sprite& src, const imaging::AffineTransform& t,
                            int out_width, int out_height);

imaging::ImageBuffer alpha_composite(const imaging::ImageBuffer& background,
                                     const imaging::Sprite& sprite);

imaging::ImageBuffer mean_stack(std::span<const imaging::ImageBuffer> frames);

imaging::ImageBuffer resize_bilinear(const imaging::ImageBuffer& src,
                                     int out_width, int out_height);

}  // namespace motionforge::ref
