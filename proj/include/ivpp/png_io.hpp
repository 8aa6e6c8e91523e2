#pragma once

#include <filesystem>

#include "ivpp/image.hpp"

namespace ivpp {

// 8-bit grayscale PNG. Colour inputs are converted to gray on read.
GrayImage read_png_gray(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const GrayImage& image);

}  // namespace ivpp
