#include "ivpp/image.hpp"

#include <algorithm>
#include <cmath>

#include "ivpp/error.hpp"

namespace ivpp {

FloatImage to_unit_float(const GrayImage& image) {
  FloatImage out(image.height, image.width);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) out.pixels[i] = image.pixels[i] / 255.0f;
  return out;
}

GrayImage to_gray8(const FloatImage& image) {
  GrayImage out(image.height, image.width);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const float v = std::clamp(image.pixels[i], 0.0f, 1.0f) * 255.0f;
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

namespace {

struct Tap {
  int lo;
  int hi;
  float frac;
};

std::vector<Tap> make_taps(int src, int dst) {
  std::vector<Tap> taps(dst);
  const double scale = double(src) / dst;
  for (int d = 0; d < dst; ++d) {
    double s = (d + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, double(src - 1));
    const int lo = static_cast<int>(std::floor(s));
    const int hi = std::min(lo + 1, src - 1);
    taps[d] = {lo, hi, static_cast<float>(s - lo)};
  }
  return taps;
}

template <class T, class Convert>
Image<T> resize_impl(const Image<T>& image, int height, int width, Convert convert) {
  require(!image.empty(), ErrorKind::precondition, "resize of an empty image");
  require(height > 0 && width > 0, ErrorKind::invalid_argument, "resize target must be positive");
  if (image.height == height && image.width == width) return image;
  const auto ytaps = make_taps(image.height, height);
  const auto xtaps = make_taps(image.width, width);
  Image<T> out(height, width);
  for (int y = 0; y < height; ++y) {
    const Tap ty = ytaps[y];
    for (int x = 0; x < width; ++x) {
      const Tap tx = xtaps[x];
      const float p00 = image.at(ty.lo, tx.lo);
      const float p01 = image.at(ty.lo, tx.hi);
      const float p10 = image.at(ty.hi, tx.lo);
      const float p11 = image.at(ty.hi, tx.hi);
      const float top = p00 + (p01 - p00) * tx.frac;
      const float bottom = p10 + (p11 - p10) * tx.frac;
      out.at(y, x) = convert(top + (bottom - top) * ty.frac);
    }
  }
  return out;
}

}  // namespace

FloatImage resize_bilinear(const FloatImage& image, int height, int width) {
  return resize_impl(image, height, width, [](float v) { return v; });
}

GrayImage resize_bilinear(const GrayImage& image, int height, int width) {
  return resize_impl(image, height, width, [](float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f)));
  });
}

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
      return "invalid-argument";
    case ErrorKind::io:
      return "io";
    case ErrorKind::format:
      return "format";
    case ErrorKind::precondition:
      return "precondition";
    case ErrorKind::numeric:
      return "numeric";
  }
  return "unknown";
}

}  // namespace ivpp
