#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ivpp/datamodel.hpp"
#include "ivpp/image.hpp"
#include "ivpp/mmode.hpp"

namespace ivpp::sampler {

using Rng = std::mt19937_64;

enum class PairMode { bmode, mmode };

struct IvppConfig {
  PairMode mode = PairMode::bmode;
  double delta_t = 0.0;  // seconds, B-mode
  int delta_x = 0;       // pixels, M-mode
  bool use_sample_weights = false;
  // M-mode: both images of a pair come from one segment, or from
  // independently drawn segments.
  bool shared_segment = true;
  double segment_seconds = mmode::kDefaultSegmentSeconds;
};

void validate(const IvppConfig& config);

struct PositivePair {
  GrayImage view_a;
  GrayImage view_b;
  int separation = 0;  // frames (B-mode) or pixels (M-mode)
  double weight = 1.0;
  std::string source_video_id;
  int position_a = 0;  // frame index or column
  int position_b = 0;
};

// Distance weight in discrete units: (delta - separation) / (delta + 1),
// and exactly 1 when delta == 0.
double pair_weight(int separation, int delta);

// Temporal bound converted to frames: round(delta_t * fps).
int delta_frames(double delta_t, double fps);

// Draws a partner uniformly from the window [anchor - delta, anchor + delta]
// clipped to [0, count - 1]. The anchor itself is eligible.
int draw_in_window(int anchor, int delta, int count, Rng& rng);

PositivePair sample_bmode_pair(const data::VideoRecord& video, const IvppConfig& config, Rng& rng);

// `video` must already be standardized. `columns` is the candidate list.
PositivePair sample_mmode_pair(const data::VideoRecord& video, std::span<const int> columns,
                               const IvppConfig& config, Rng& rng);

struct PairBatch {
  std::vector<GrayImage> views_a;
  std::vector<GrayImage> views_b;
  std::vector<double> weights;
  std::vector<int> separations;
  std::vector<std::string> video_ids;

  std::size_t size() const { return weights.size(); }
};

// Draws one positive pair per video, walking a per-epoch shuffled video order.
class PairBatcher {
 public:
  PairBatcher(std::vector<data::VideoRecord> videos, IvppConfig config,
              std::optional<mmode::RoiTable> rois = std::nullopt);

  PairBatch make_batch(std::size_t batch_size, Rng& rng);

  std::size_t video_count() const { return videos_.size(); }
  std::size_t steps_per_epoch(std::size_t batch_size) const;
  const IvppConfig& config() const { return config_; }

 private:
  struct MModeCache {
    data::VideoRecord standardized;
    std::vector<int> columns;
  };

  const MModeCache& mmode_entry(std::size_t index);
  std::size_t next_index(Rng& rng);

  std::vector<data::VideoRecord> videos_;
  IvppConfig config_;
  std::optional<mmode::RoiTable> rois_;
  std::vector<std::optional<MModeCache>> mmode_cache_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace ivpp::sampler
