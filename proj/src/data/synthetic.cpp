#include "ivpp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "ivpp/error.hpp"

namespace ivpp::data {

void validate(const SyntheticConfig& c) {
  require(c.n_patients >= 1 && c.videos_per_patient >= 1 && c.frames_per_video >= 1,
          ErrorKind::invalid_argument, "synthetic counts must be >= 1");
  require(c.frame_height >= 8 && c.frame_width >= 8, ErrorKind::invalid_argument,
          "synthetic frames must be at least 8x8");
  require(c.fps > 0.0, ErrorKind::invalid_argument, "invalid frame rate");
  require(c.artifact_dwell >= 1, ErrorKind::invalid_argument, "artifact_dwell must be >= 1");
  require(c.noise_level >= 0.0, ErrorKind::invalid_argument, "noise_level must be >= 0");
  require(c.unlabelled_fraction >= 0.0 && c.unlabelled_fraction < 1.0,
          ErrorKind::invalid_argument, "unlabelled_fraction must lie in [0, 1)");
}

namespace {

constexpr double kPi = std::numbers::pi;

struct VideoLayout {
  double pleura_y;
  double x_lo;
  double x_hi;
  double gain;
  double base;
  double attenuation;
  double tissue_phase[3];
  double tissue_freq[3];
  double stripe_period;
  double slide_rate;  // stripe cycles per frame
  std::vector<double> column_phase;
  bool sliding;
};

double gauss(double d, double sigma) { return std::exp(-0.5 * d * d / (sigma * sigma)); }

// Class sequence for one video: runs of `dwell` frames, each run after the
// first switching class with probability 1/2.
std::vector<int> frame_classes(int frames, int dwell, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  int cls = coin(rng) ? 1 : 0;
  int run = dwell;
  if (dwell < frames) run = std::uniform_int_distribution<int>(1, dwell)(rng);
  std::vector<int> out(frames);
  for (int t = 0; t < frames; ++t) {
    if (run == 0) {
      if (coin(rng)) cls = 1 - cls;
      run = dwell;
    }
    out[t] = cls;
    --run;
  }
  return out;
}

GrayImage render_frame(const SyntheticConfig& c, const VideoLayout& v, int cls,
                       const std::vector<double>& bline_x, int t, std::mt19937_64& rng) {
  const int h = c.frame_height;
  const int w = c.frame_width;
  std::normal_distribution<double> speckle(0.0, c.noise_level);
  const double band_sigma = std::max(0.8, h / 80.0);
  const double slide_depth = 0.18 * h;
  GrayImage out(h, w);
  for (int y = 0; y < h; ++y) {
    const double below = y - v.pleura_y;
    const double atten = below > 0 ? std::exp(-v.attenuation * below / h) : 1.0;
    for (int x = 0; x < w; ++x) {
      const bool in_pleura = x >= v.x_lo && x <= v.x_hi;
      double s = 0.0;
      if (below < -2.0) {
        // soft tissue above the pleural line
        for (int k = 0; k < 3; ++k) {
          s += 0.05 * (1.0 + std::sin(v.tissue_freq[k] * (x + 0.7 * y) + v.tissue_phase[k]));
        }
      }
      if (in_pleura) {
        s += 0.7 * gauss(below, band_sigma);
        if (below > 2.0 && below < slide_depth) {
          const double drift = v.sliding ? v.slide_rate * t : 0.0;
          s += 0.15 * (0.5 + 0.5 * std::sin(2.0 * kPi * (below / v.stripe_period + drift) +
                                             v.column_phase[x]));
        }
        if (cls == 0) {
          for (int k = 2; k * v.pleura_y < h + 3 * band_sigma; ++k) {
            s += 0.55 * std::pow(0.8, k - 2) * gauss(y - k * v.pleura_y, band_sigma);
          }
        } else if (below > 0.0) {
          for (double bx : bline_x) s += 0.6 * gauss(x - bx, 1.5 * band_sigma);
        }
      }
      const double value = 255.0 * (v.base + v.gain * atten * s) + speckle(rng);
      out.at(y, x) = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
    }
  }
  return out;
}

}  // namespace

SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& c) {
  validate(c);
  SyntheticDataset out;
  auto& m = out.manifest;
  m.tasks[kTaskAB] = {"a_lines", "b_lines"};
  m.tasks[kTaskLS] = {"sliding", "absent"};
  char buf[160];
  std::snprintf(buf, sizeof(buf), "synthetic seed=%llu patients=%d videos=%d frames=%d",
                static_cast<unsigned long long>(c.seed), c.n_patients, c.videos_per_patient,
                c.frames_per_video);
  m.provenance = buf;

  const int n_unlabelled = static_cast<int>(std::floor(c.unlabelled_fraction * c.n_patients));
  const double to_std = double(mmode::kStandardSize) / c.frame_width;

  for (int p = 0; p < c.n_patients; ++p) {
    char pid[32];
    std::snprintf(pid, sizeof(pid), "P%04d", p);
    const bool labelled = p >= n_unlabelled;
    for (int vi = 0; vi < c.videos_per_patient; ++vi) {
      std::seed_seq seq{static_cast<std::uint64_t>(c.seed), std::uint64_t(p), std::uint64_t(vi)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

      VideoLayout v;
      v.pleura_y = uniform(0.18, 0.30) * c.frame_height;
      v.x_lo = uniform(0.05, 0.25) * c.frame_width;
      v.x_hi = uniform(0.75, 0.95) * c.frame_width;
      v.gain = uniform(0.55, 1.0);
      v.base = uniform(0.05, 0.20);
      v.attenuation = uniform(0.5, 1.5);
      for (int k = 0; k < 3; ++k) {
        v.tissue_phase[k] = uniform(0.0, 2.0 * kPi);
        v.tissue_freq[k] = uniform(0.15, 0.6);
      }
      v.stripe_period = uniform(3.0, 6.0) * c.frame_height / 96.0;
      v.slide_rate = uniform(0.15, 0.35);
      v.column_phase.resize(c.frame_width);
      for (auto& ph : v.column_phase) ph = uniform(0.0, 0.6);
      v.sliding = u01(rng) < 0.75;

      const auto classes = frame_classes(c.frames_per_video, c.artifact_dwell, rng);
      std::vector<GrayImage> frames;
      frames.reserve(c.frames_per_video);
      std::vector<double> blines;
      for (int t = 0; t < c.frames_per_video; ++t) {
        const bool new_run = t == 0 || classes[t] != classes[t - 1] || blines.empty();
        if (classes[t] == 1 && new_run) {
          const int count = std::uniform_int_distribution<int>(1, 3)(rng);
          blines.clear();
          for (int b = 0; b < count; ++b) blines.push_back(uniform(v.x_lo + 2, v.x_hi - 2));
        }
        frames.push_back(render_frame(c, v, classes[t], blines, t, rng));
      }

      VideoRecord r;
      char vid[48];
      std::snprintf(vid, sizeof(vid), "%s_V%02d", pid, vi);
      r.video_id = vid;
      r.patient_id = pid;
      r.fps = c.fps;
      r.frames_dir = std::string("frames/") + vid;
      r.frames = std::make_shared<InMemoryFrames>(std::move(frames));
      if (labelled) {
        const auto positives = std::count(classes.begin(), classes.end(), 1);
        const auto negatives = static_cast<long>(classes.size()) - positives;
        int majority = positives > negatives ? 1 : (positives < negatives ? 0 : classes[0]);
        r.labels[kTaskAB] = majority;
        r.labels[kTaskLS] = v.sliding ? 0 : 1;
        r.frame_labels[kTaskAB] = classes;
      }

      mmode::PleuralRoi roi;
      roi.x_lo = std::clamp(static_cast<int>(std::ceil(v.x_lo * to_std)), 0,
                            mmode::kStandardSize - 1);
      roi.x_hi = std::clamp(static_cast<int>(std::floor(v.x_hi * to_std)), roi.x_lo,
                            mmode::kStandardSize - 1);
      out.rois[r.video_id] = roi;
      m.records.push_back(std::move(r));
    }
  }
  validate(m);
  return out;
}

}  // namespace ivpp::data
