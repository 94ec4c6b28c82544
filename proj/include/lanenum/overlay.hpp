// Prediction overlay: mask blended in green, predicted digit stamped in
// purple, written as binary PPM.
#pragma once

#include <filesystem>

#include "lanenum/image.hpp"

namespace lanenum {

// 50% green blend over mask pixels, then a 5x7 digit glyph at (4,4) in
// purple (160,32,240). Label must be 0..4.
ImageU8 render_overlay(const ImageU8& image, const Mask& mask, int label);

void write_ppm(const std::filesystem::path& path, const ImageU8& img);
ImageU8 read_ppm(const std::filesystem::path& path);

}  // namespace lanenum
