#include "ivpp/augment.hpp"

#include <algorithm>
#include <cmath>

#include "ivpp/error.hpp"

namespace ivpp::augment {

namespace {

void check_range(const Range& r, const char* what, bool nonnegative) {
  require(r.lo <= r.hi, ErrorKind::invalid_argument, std::string(what) + ": lo > hi");
  if (nonnegative) {
    require(r.lo >= 0.0, ErrorKind::invalid_argument, std::string(what) + ": negative bound");
  }
}

void check_probability(double p, const char* what) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::invalid_argument,
          std::string(what) + " must be a probability");
}

double uniform(Rng& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

bool coin(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::bernoulli_distribution(p)(rng);
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * n - 2 - i;
  return i;
}

}  // namespace

void validate(const AugmentPolicy& p) {
  check_range(p.crop_area, "crop_area_range", true);
  require(p.crop_area.lo > 0.0 && p.crop_area.hi <= 1.0, ErrorKind::invalid_argument,
          "crop_area_range must lie in (0, 1]");
  check_range(p.crop_aspect, "crop_aspect_range", true);
  require(p.crop_aspect.lo > 0.0, ErrorKind::invalid_argument, "crop aspect must be positive");
  check_range(p.brightness, "brightness_range", false);
  check_range(p.contrast, "contrast_range", false);
  check_range(p.blur_sigma, "blur_sigma_range", true);
  check_probability(p.p_flip, "p_flip");
  check_probability(p.p_brightness, "p_brightness");
  check_probability(p.p_contrast, "p_contrast");
  check_probability(p.p_blur, "p_blur");
  require(p.blur_kernel >= 1 && p.blur_kernel % 2 == 1, ErrorKind::invalid_argument,
          "blur_kernel must be odd");
}

AugmentPolicy default_policy(Task task) {
  AugmentPolicy p;
  switch (task) {
    case Task::covid:
    case Task::ab:
      p.crop_area = {0.4, 1.0};
      p.crop_aspect = {0.8, 1.25};
      break;
    case Task::ls:
      p.crop_area = {0.95, 1.0};
      p.crop_aspect = {0.4, 0.6};
      break;
  }
  return p;
}

CropWindow sample_crop(int height, int width, const AugmentPolicy& policy, Rng& rng) {
  const double area = double(height) * width;
  const double log_lo = std::log(policy.crop_aspect.lo);
  const double log_hi = std::log(policy.crop_aspect.hi);
  for (int attempt = 0; attempt < kCropAttempts; ++attempt) {
    const double target = area * uniform(rng, policy.crop_area);
    const double aspect = std::exp(uniform(rng, {log_lo, log_hi}));
    const int w = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (w <= 0 || h <= 0 || w > width || h > height) continue;
    const double fraction = double(h) * w / area;
    if (fraction < policy.crop_area.lo || fraction > policy.crop_area.hi) continue;
    CropWindow win;
    win.height = h;
    win.width = w;
    win.y = std::uniform_int_distribution<int>(0, height - h)(rng);
    win.x = std::uniform_int_distribution<int>(0, width - w)(rng);
    return win;
  }
  CropWindow win;
  win.fallback = true;
  const double ratio = double(width) / height;
  if (ratio < policy.crop_aspect.lo) {
    win.width = width;
    win.height = std::clamp(static_cast<int>(std::lround(width / policy.crop_aspect.lo)), 1, height);
  } else if (ratio > policy.crop_aspect.hi) {
    win.height = height;
    win.width = std::clamp(static_cast<int>(std::lround(height * policy.crop_aspect.hi)), 1, width);
  } else {
    win.height = height;
    win.width = width;
  }
  win.y = (height - win.height) / 2;
  win.x = (width - win.width) / 2;
  return win;
}

FloatImage crop_resize(const FloatImage& image, const CropWindow& window) {
  if (window.y == 0 && window.x == 0 && window.height == image.height &&
      window.width == image.width) {
    return image;
  }
  FloatImage cropped(window.height, window.width);
  for (int y = 0; y < window.height; ++y) {
    const float* src = &image.pixels[std::size_t(window.y + y) * image.width + window.x];
    std::copy(src, src + window.width, &cropped.pixels[std::size_t(y) * window.width]);
  }
  return resize_bilinear(cropped, image.height, image.width);
}

FloatImage flip_horizontal(const FloatImage& image) {
  FloatImage out = image;
  for (int y = 0; y < image.height; ++y) {
    auto row = out.pixels.begin() + std::ptrdiff_t(y) * image.width;
    std::reverse(row, row + image.width);
  }
  return out;
}

FloatImage adjust_brightness(const FloatImage& image, double delta) {
  FloatImage out = image;
  for (auto& v : out.pixels) v = std::clamp(static_cast<float>(v + delta), 0.0f, 1.0f);
  return out;
}

FloatImage adjust_contrast(const FloatImage& image, double delta) {
  double mean = 0.0;
  for (float v : image.pixels) mean += v;
  mean /= static_cast<double>(image.pixels.size());
  const double factor = 1.0 + delta;
  FloatImage out = image;
  for (auto& v : out.pixels) {
    v = std::clamp(static_cast<float>(mean + (v - mean) * factor), 0.0f, 1.0f);
  }
  return out;
}

FloatImage gaussian_blur(const FloatImage& image, int kernel, double sigma) {
  require(kernel >= 1 && kernel % 2 == 1, ErrorKind::invalid_argument, "blur kernel must be odd");
  require(sigma > 0.0, ErrorKind::invalid_argument, "blur sigma must be positive");
  const int r = kernel / 2;
  std::vector<float> taps(kernel);
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    taps[i + r] = static_cast<float>(v);
    total += v;
  }
  for (auto& t : taps) t = static_cast<float>(t / total);

  const int h = image.height;
  const int w = image.width;
  FloatImage tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int k = -r; k <= r; ++k) acc += taps[k + r] * image.at(y, reflect(x + k, w));
      tmp.at(y, x) = acc;
    }
  }
  FloatImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int k = -r; k <= r; ++k) acc += taps[k + r] * tmp.at(reflect(y + k, h), x);
      out.at(y, x) = acc;
    }
  }
  return out;
}

FloatImage augment(const FloatImage& image, const AugmentPolicy& policy, Rng& rng) {
  require(!image.empty(), ErrorKind::precondition, "cannot augment an empty image");
  FloatImage out = crop_resize(image, sample_crop(image.height, image.width, policy, rng));
  if (coin(rng, policy.p_flip)) out = flip_horizontal(out);
  if (coin(rng, policy.p_brightness)) out = adjust_brightness(out, uniform(rng, policy.brightness));
  if (coin(rng, policy.p_contrast)) out = adjust_contrast(out, uniform(rng, policy.contrast));
  if (coin(rng, policy.p_blur)) {
    out = gaussian_blur(out, policy.blur_kernel, uniform(rng, policy.blur_sigma));
  }
  return out;
}

PreprocessSpec default_preprocess(Task task) {
  PreprocessSpec spec;
  spec.height = 224;
  spec.width = uses_mmode(task) ? 112 : 224;
  return spec;
}

void preprocess_into(const FloatImage& image, const PreprocessSpec& spec, float* out) {
  require(!image.empty(), ErrorKind::precondition, "cannot preprocess an empty image");
  require(spec.height > 0 && spec.width > 0, ErrorKind::invalid_argument,
          "preprocess target must be positive");
  const FloatImage resized = resize_bilinear(image, spec.height, spec.width);
  const std::size_t plane = std::size_t(spec.height) * spec.width;
  for (int c = 0; c < 3; ++c) {
    const float mean = spec.mean[c];
    const float inv = 1.0f / spec.std[c];
    float* dst = out + c * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = (resized.pixels[i] - mean) * inv;
  }
}

std::vector<float> preprocess(const FloatImage& image, const PreprocessSpec& spec) {
  std::vector<float> out(3 * std::size_t(spec.height) * spec.width);
  preprocess_into(image, spec, out.data());
  return out;
}

}  // namespace ivpp::augment
