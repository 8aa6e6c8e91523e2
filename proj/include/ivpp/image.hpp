#pragma once

#include <cstdint>
#include <vector>

namespace ivpp {

// Single-channel image stored row-major.
template <class T>
struct Image {
  int height = 0;
  int width = 0;
  std::vector<T> pixels;

  Image() = default;
  Image(int h, int w, T fill = T{}) : height(h), width(w), pixels(std::size_t(h) * w, fill) {}

  bool empty() const { return pixels.empty(); }
  T& at(int y, int x) { return pixels[std::size_t(y) * width + x]; }
  const T& at(int y, int x) const { return pixels[std::size_t(y) * width + x]; }

  friend bool operator==(const Image&, const Image&) = default;
};

using GrayImage = Image<std::uint8_t>;
using FloatImage = Image<float>;

// 8-bit to [0, 1] and back (round-to-nearest, clamped).
FloatImage to_unit_float(const GrayImage& image);
GrayImage to_gray8(const FloatImage& image);

// Bilinear resize with half-pixel centres and edge clamping. Resizing to the
// same size is the identity.
FloatImage resize_bilinear(const FloatImage& image, int height, int width);
GrayImage resize_bilinear(const GrayImage& image, int height, int width);

}  // namespace ivpp
