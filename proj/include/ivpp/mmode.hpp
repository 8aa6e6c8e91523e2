#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ivpp/datamodel.hpp"
#include "ivpp/image.hpp"

namespace ivpp::mmode {

// B-mode videos are resized to this square size before any column indexing.
inline constexpr int kStandardSize = 224;
inline constexpr double kDefaultSegmentSeconds = 3.0;

// Inclusive horizontal bounds of the pleural line, standardized coordinates.
struct PleuralRoi {
  int x_lo = 0;
  int x_hi = 0;

  friend bool operator==(const PleuralRoi&, const PleuralRoi&) = default;
};

using RoiTable = std::map<std::string, PleuralRoi>;

// CSV with header `video_id,x_lo,x_hi`.
RoiTable load_roi_csv(const std::filesystem::path& path);
void save_roi_csv(const RoiTable& rois, const std::filesystem::path& path);

void validate_roi(const PleuralRoi& roi, int standardized_width);

// Horizontal axis is time, vertical axis is the B-mode depth axis.
struct MModeImage {
  GrayImage pixels;
  std::string source_video_id;
  int x_coord = 0;
  int t_start = 0;
};

data::VideoRecord standardize_video(const data::VideoRecord& video,
                                    int height = kStandardSize, int width = kStandardSize);

// Number of frames covered by a segment of `duration_s` seconds (at least 1).
int segment_frames(const data::VideoRecord& video, double duration_s);

MModeImage extract_mmode(const data::VideoRecord& video, int x, int t_start,
                         double duration_s = kDefaultSegmentSeconds);

// Columns of the ROI ranked by total intensity over the segment starting at
// t_start (clipped to the video), highest first with ties by ascending x.
// The top ceil(n/2) are returned.
std::vector<int> candidate_columns(const data::VideoRecord& video, const PleuralRoi& roi,
                                   int t_start = 0, double duration_s = kDefaultSegmentSeconds);

}  // namespace ivpp::mmode
