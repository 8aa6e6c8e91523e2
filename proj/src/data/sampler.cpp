#include "ivpp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ivpp/error.hpp"

namespace ivpp::sampler {

void validate(const IvppConfig& c) {
  require(c.delta_t >= 0.0, ErrorKind::invalid_argument, "delta_t must be >= 0");
  require(c.delta_x >= 0, ErrorKind::invalid_argument, "delta_x must be >= 0");
  require(c.segment_seconds > 0.0, ErrorKind::invalid_argument, "segment length must be positive");
}

double pair_weight(int separation, int delta) {
  require(delta >= 0 && separation >= 0, ErrorKind::invalid_argument,
          "separation and delta must be non-negative");
  require(separation <= delta, ErrorKind::invalid_argument,
          "separation " + std::to_string(separation) + " exceeds delta " + std::to_string(delta));
  if (delta == 0) return 1.0;
  return double(delta - separation) / double(delta + 1);
}

int delta_frames(double delta_t, double fps) {
  require(delta_t >= 0.0 && fps > 0.0, ErrorKind::invalid_argument, "invalid temporal bound");
  return static_cast<int>(std::lround(delta_t * fps));
}

int draw_in_window(int anchor, int delta, int count, Rng& rng) {
  const int lo = std::max(0, anchor - delta);
  const int hi = std::min(count - 1, anchor + delta);
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

PositivePair sample_bmode_pair(const data::VideoRecord& video, const IvppConfig& config, Rng& rng) {
  require(config.mode == PairMode::bmode, ErrorKind::invalid_argument, "config is not B-mode");
  const int count = video.frames ? static_cast<int>(video.frame_count()) : 0;
  require(count > 0, ErrorKind::precondition, "cannot sample from an empty video");
  const int delta = delta_frames(config.delta_t, video.fps);
  const int i = std::uniform_int_distribution<int>(0, count - 1)(rng);
  const int j = draw_in_window(i, delta, count, rng);

  PositivePair pair;
  pair.view_a = video.frame(i);
  pair.view_b = video.frame(j);
  pair.separation = std::abs(j - i);
  pair.weight = config.use_sample_weights ? pair_weight(pair.separation, delta) : 1.0;
  pair.source_video_id = video.video_id;
  pair.position_a = i;
  pair.position_b = j;
  return pair;
}

PositivePair sample_mmode_pair(const data::VideoRecord& video, std::span<const int> columns,
                               const IvppConfig& config, Rng& rng) {
  require(config.mode == PairMode::mmode, ErrorKind::invalid_argument, "config is not M-mode");
  require(!columns.empty(), ErrorKind::precondition, "empty candidate column list");
  const int count = static_cast<int>(video.frame_count());
  // Videos shorter than one segment contribute their whole length.
  const int length = std::min(mmode::segment_frames(video, config.segment_seconds), count);
  const double seconds = length / video.fps;

  const std::size_t ia = std::uniform_int_distribution<std::size_t>(0, columns.size() - 1)(rng);
  const int xa = columns[ia];
  std::vector<int> eligible;
  for (int x : columns) {
    if (std::abs(x - xa) <= config.delta_x) eligible.push_back(x);
  }
  const int xb = eligible[std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng)];

  std::uniform_int_distribution<int> start(0, count - length);
  const int ta = start(rng);
  const int tb = config.shared_segment ? ta : start(rng);

  PositivePair pair;
  pair.view_a = mmode::extract_mmode(video, xa, ta, seconds).pixels;
  pair.view_b = mmode::extract_mmode(video, xb, tb, seconds).pixels;
  pair.separation = std::abs(xb - xa);
  pair.weight = config.use_sample_weights ? pair_weight(pair.separation, config.delta_x) : 1.0;
  pair.source_video_id = video.video_id;
  pair.position_a = xa;
  pair.position_b = xb;
  return pair;
}

PairBatcher::PairBatcher(std::vector<data::VideoRecord> videos, IvppConfig config,
                         std::optional<mmode::RoiTable> rois)
    : videos_(std::move(videos)), config_(config), rois_(std::move(rois)) {
  validate(config_);
  require(!videos_.empty(), ErrorKind::precondition, "pretraining dataset is empty");
  mmode_cache_.resize(videos_.size());
}

std::size_t PairBatcher::steps_per_epoch(std::size_t batch_size) const {
  return std::max<std::size_t>(1, (videos_.size() + batch_size - 1) / batch_size);
}

const PairBatcher::MModeCache& PairBatcher::mmode_entry(std::size_t index) {
  auto& slot = mmode_cache_[index];
  if (!slot) {
    MModeCache entry;
    entry.standardized = mmode::standardize_video(videos_[index]);
    mmode::PleuralRoi roi{0, mmode::kStandardSize - 1};
    if (rois_) {
      auto it = rois_->find(videos_[index].video_id);
      if (it != rois_->end()) roi = it->second;
    }
    entry.columns = mmode::candidate_columns(entry.standardized, roi, 0, config_.segment_seconds);
    slot = std::move(entry);
  }
  return *slot;
}

std::size_t PairBatcher::next_index(Rng& rng) {
  if (cursor_ >= order_.size()) {
    order_.resize(videos_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng);
    cursor_ = 0;
  }
  return order_[cursor_++];
}

PairBatch PairBatcher::make_batch(std::size_t batch_size, Rng& rng) {
  require(batch_size >= 2, ErrorKind::invalid_argument, "batch size must be >= 2");
  PairBatch batch;
  batch.views_a.reserve(batch_size);
  batch.views_b.reserve(batch_size);
  for (std::size_t n = 0; n < batch_size; ++n) {
    const std::size_t idx = next_index(rng);
    PositivePair pair;
    if (config_.mode == PairMode::bmode) {
      pair = sample_bmode_pair(videos_[idx], config_, rng);
    } else {
      const auto& entry = mmode_entry(idx);
      pair = sample_mmode_pair(entry.standardized, entry.columns, config_, rng);
    }
    batch.views_a.push_back(std::move(pair.view_a));
    batch.views_b.push_back(std::move(pair.view_b));
    batch.weights.push_back(pair.weight);
    batch.separations.push_back(pair.separation);
    batch.video_ids.push_back(std::move(pair.source_video_id));
  }
  return batch;
}

}  // namespace ivpp::sampler
