#include <gtest/gtest.h>

#include <random>

#include "ivpp/augment.hpp"
#include "ivpp/error.hpp"

using namespace ivpp;
using namespace ivpp::augment;

namespace {

FloatImage random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  FloatImage img(h, w);
  for (auto& v : img.pixels) v = u(rng);
  return img;
}

AugmentPolicy inert_policy() {
  AugmentPolicy p;
  p.crop_area = {1.0, 1.0};
  p.crop_aspect = {1.0, 1.0};
  p.p_flip = p.p_brightness = p.p_contrast = p.p_blur = 0.0;
  return p;
}

}  // namespace

TEST(Policy, TaskDefaults) {
  EXPECT_EQ(default_policy(Task::ab).crop_area.lo, 0.4);
  EXPECT_EQ(default_policy(Task::ab).crop_area.hi, 1.0);
  EXPECT_EQ(default_policy(Task::ls).crop_area.lo, 0.95);
  const auto covid = default_policy(Task::covid);
  const auto ab = default_policy(Task::ab);
  EXPECT_EQ(covid.crop_area.lo, ab.crop_area.lo);
  EXPECT_EQ(covid.crop_aspect.hi, ab.crop_aspect.hi);
  EXPECT_EQ(covid.p_flip, ab.p_flip);
  EXPECT_EQ(covid.p_blur, ab.p_blur);
}

TEST(Augment, InertPolicyIsIdentity) {
  const auto img = random_image(32, 32, 1);
  Rng rng(1);
  EXPECT_EQ(augment::augment(img, inert_policy(), rng), img);
}

TEST(Augment, FlipIsAnInvolution) {
  const auto img = random_image(20, 20, 2);
  auto p = inert_policy();
  p.p_flip = 1.0;
  Rng rng(2);
  const auto once = augment::augment(img, p, rng);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) EXPECT_EQ(once.at(y, x), img.at(y, img.width - 1 - x));
  }
  EXPECT_EQ(augment::augment(once, p, rng), img);
}

TEST(Augment, BrightnessIsAdditive) {
  const auto out = adjust_brightness(FloatImage(8, 8, 0.5f), 0.25);
  for (float v : out.pixels) EXPECT_FLOAT_EQ(v, 0.75f);
}

TEST(Augment, ContrastScalesAroundMean) {
  FloatImage img(1, 2);
  img.pixels = {0.25f, 0.75f};
  const auto out = adjust_contrast(img, 0.2);
  EXPECT_FLOAT_EQ(out.pixels[0], 0.5f - 0.25f * 1.2f);
  EXPECT_FLOAT_EQ(out.pixels[1], 0.5f + 0.25f * 1.2f);
}

TEST(Augment, BlurKeepsConstants) {
  const auto out = gaussian_blur(FloatImage(9, 11, 0.3f), 5, 1.3);
  for (float v : out.pixels) EXPECT_NEAR(v, 0.3f, 1e-6);
}

TEST(Augment, ShapePreservedAndDeterministic) {
  const auto img = random_image(40, 20, 3);
  for (Task t : {Task::ab, Task::ls, Task::covid}) {
    Rng a(7), b(7);
    for (int k = 0; k < 50; ++k) {
      const auto x = augment::augment(img, default_policy(t), a);
      const auto y = augment::augment(img, default_policy(t), b);
      ASSERT_EQ(x.height, img.height);
      ASSERT_EQ(x.width, img.width);
      ASSERT_EQ(x, y);
    }
  }
}

TEST(Crop, AreaWithinPolicyRange) {
  for (Task t : {Task::ab, Task::ls}) {
    const auto p = default_policy(t);
    const int h = 224, w = t == Task::ls ? 112 : 224;
    Rng rng(4);
    int fallbacks = 0;
    for (int k = 0; k < 10000; ++k) {
      const auto c = sample_crop(h, w, p, rng);
      ASSERT_GE(c.y, 0);
      ASSERT_GE(c.x, 0);
      ASSERT_LE(c.y + c.height, h);
      ASSERT_LE(c.x + c.width, w);
      if (c.fallback) {
        ++fallbacks;
        continue;
      }
      const double frac = double(c.height) * c.width / (double(h) * w);
      // Integer rounding of the window sides moves the area slightly.
      EXPECT_GE(frac, p.crop_area.lo - 0.02);
      EXPECT_LE(frac, p.crop_area.hi + 1e-9);
    }
    EXPECT_LT(fallbacks, 10000);
  }
}

TEST(Preprocess, TaskShapes) {
  const auto img = random_image(50, 70, 5);
  EXPECT_EQ(preprocess(img, default_preprocess(Task::ab)).size(), 3u * 224 * 224);
  const auto ls = default_preprocess(Task::ls);
  EXPECT_EQ(ls.height, 224);
  EXPECT_EQ(ls.width, 112);
  EXPECT_EQ(preprocess(img, ls).size(), 3u * 224 * 112);
}

TEST(Preprocess, MeanInputCentresToZero) {
  PreprocessSpec spec;
  spec.height = 6;
  spec.width = 5;
  spec.mean = {0.5f, 0.5f, 0.5f};
  for (float v : preprocess(FloatImage(3, 3, 0.5f), spec)) EXPECT_EQ(v, 0.0f);
}

TEST(Preprocess, ChannelStandardization) {
  const PreprocessSpec spec = default_preprocess(Task::ab);
  const auto out = preprocess(FloatImage(224, 224, 0.6f), spec);
  const std::size_t plane = 224 * 224;
  for (int c = 0; c < 3; ++c) {
    EXPECT_NEAR(out[c * plane], (0.6f - spec.mean[c]) / spec.std[c], 1e-6);
  }
}
