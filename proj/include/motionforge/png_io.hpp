#pragma once

#include <filesystem>

#include "motionforge/image.hpp"

namespace motionforge::imaging {

// PNG ingestion normalizes everything to the toolkit's buffer types:
// images become 8-bit RGB (palette expanded, gray replicated, alpha
// stripped, 16-bit narrowed); masks take channel 0 and threshold at 128
// (>= 128 -> 255, else 0).

ImageBuffer read_png(const std::filesystem::path& file);
void write_png(const std::filesystem::path& file, const ImageBuffer& image);

MaskBuffer read_mask_png(const std::filesystem::path& file);
void write_mask_png(const std::filesystem::path& file, const MaskBuffer& mask);

}  // namespace motionforge::imaging
