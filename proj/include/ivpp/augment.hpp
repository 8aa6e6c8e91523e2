#pragma once

#include <array>
#include <random>
#include <vector>

#include "ivpp/image.hpp"
#include "ivpp/task.hpp"

namespace ivpp::augment {

using Rng = std::mt19937_64;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Stochastic pipeline applied in this order: random resized crop, horizontal
// flip, brightness, contrast, Gaussian blur. Brightness adds a delta to
// [0, 1] intensities; contrast scales deviations from the image mean by
// (1 + delta).
struct AugmentPolicy {
  Range crop_area{0.4, 1.0};
  Range crop_aspect{0.8, 1.25};  // width / height
  double p_flip = 0.5;
  double p_brightness = 0.5;
  double p_contrast = 0.5;
  double p_blur = 0.25;
  Range brightness{-0.25, 0.25};
  Range contrast{-0.25, 0.25};
  int blur_kernel = 5;
  Range blur_sigma{0.1, 2.0};
};

void validate(const AugmentPolicy& policy);

AugmentPolicy default_policy(Task task);

struct CropWindow {
  int y = 0;
  int x = 0;
  int height = 0;
  int width = 0;
  bool fallback = false;
};

inline constexpr int kCropAttempts = 10;

// Up to kCropAttempts rejection draws, then the largest centred window whose
// aspect ratio lies in the policy range.
CropWindow sample_crop(int height, int width, const AugmentPolicy& policy, Rng& rng);

FloatImage crop_resize(const FloatImage& image, const CropWindow& window);
FloatImage flip_horizontal(const FloatImage& image);
FloatImage adjust_brightness(const FloatImage& image, double delta);
FloatImage adjust_contrast(const FloatImage& image, double delta);
FloatImage gaussian_blur(const FloatImage& image, int kernel, double sigma);

FloatImage augment(const FloatImage& image, const AugmentPolicy& policy, Rng& rng);

struct PreprocessSpec {
  int height = 224;
  int width = 224;
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};  // ImageNet
  std::array<float, 3> std{0.229f, 0.224f, 0.225f};
};

// 224x224 for B-mode tasks, 224x112 (height x width) for M-mode.
PreprocessSpec default_preprocess(Task task);

// Bilinear resize, gray replicated to 3 channels, per-channel standardization.
// Output layout is channel-major (3, height, width).
std::vector<float> preprocess(const FloatImage& image, const PreprocessSpec& spec);

// Same, writing into `out` which must hold 3 * height * width floats.
void preprocess_into(const FloatImage& image, const PreprocessSpec& spec, float* out);

}  // namespace ivpp::augment
