#include "ivpp/mmode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ivpp/error.hpp"

namespace ivpp::mmode {

namespace fs = std::filesystem;

RoiTable load_roi_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open ROI file " + path.string());
  RoiTable rois;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("video_id", 0) == 0) continue;
    std::stringstream ss(line);
    std::string id, lo, hi;
    if (!std::getline(ss, id, ',') || !std::getline(ss, lo, ',') || !std::getline(ss, hi)) {
      fail(ErrorKind::format, "malformed ROI row " + std::to_string(lineno) + " in " + path.string());
    }
    try {
      rois[id] = PleuralRoi{std::stoi(lo), std::stoi(hi)};
    } catch (const std::exception&) {
      fail(ErrorKind::format, "non-integer ROI bound on row " + std::to_string(lineno));
    }
  }
  return rois;
}

void save_roi_csv(const RoiTable& rois, const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write ROI file " + path.string());
  out << "video_id,x_lo,x_hi\n";
  for (const auto& [id, roi] : rois) out << id << ',' << roi.x_lo << ',' << roi.x_hi << '\n';
}

void validate_roi(const PleuralRoi& roi, int standardized_width) {
  require(0 <= roi.x_lo && roi.x_lo <= roi.x_hi && roi.x_hi < standardized_width,
          ErrorKind::invalid_argument,
          "invalid pleural ROI [" + std::to_string(roi.x_lo) + ", " + std::to_string(roi.x_hi) + "]");
}

data::VideoRecord standardize_video(const data::VideoRecord& video, int height, int width) {
  require(height > 0 && width > 0, ErrorKind::invalid_argument, "standard size must be positive");
  require(video.frames != nullptr && video.frame_count() > 0, ErrorKind::precondition,
          "cannot standardize an empty video");
  std::vector<GrayImage> frames;
  frames.reserve(video.frame_count());
  for (std::size_t i = 0; i < video.frame_count(); ++i) {
    frames.push_back(resize_bilinear(video.frame(i), height, width));
  }
  data::VideoRecord out = video;
  out.frames = std::make_shared<data::InMemoryFrames>(std::move(frames));
  return out;
}

int segment_frames(const data::VideoRecord& video, double duration_s) {
  require(duration_s > 0.0, ErrorKind::invalid_argument, "segment duration must be positive");
  return std::max(1, static_cast<int>(std::lround(duration_s * video.fps)));
}

MModeImage extract_mmode(const data::VideoRecord& video, int x, int t_start, double duration_s) {
  const int length = segment_frames(video, duration_s);
  const int total = static_cast<int>(video.frame_count());
  require(t_start >= 0 && t_start + length <= total, ErrorKind::precondition,
          "M-mode segment [" + std::to_string(t_start) + ", " + std::to_string(t_start + length) +
              ") outside video of " + std::to_string(total) + " frames");
  const GrayImage& first = video.frame(t_start);
  require(x >= 0 && x < first.width, ErrorKind::precondition,
          "M-mode column " + std::to_string(x) + " outside frame width " +
              std::to_string(first.width));

  MModeImage out;
  out.pixels = GrayImage(first.height, length);
  out.source_video_id = video.video_id;
  out.x_coord = x;
  out.t_start = t_start;
  for (int t = 0; t < length; ++t) {
    const GrayImage& frame = video.frame(t_start + t);
    for (int y = 0; y < frame.height; ++y) out.pixels.at(y, t) = frame.at(y, x);
  }
  return out;
}

std::vector<int> candidate_columns(const data::VideoRecord& video, const PleuralRoi& roi,
                                   int t_start, double duration_s) {
  const GrayImage& first = video.frame(0);
  validate_roi(roi, first.width);
  const int total = static_cast<int>(video.frame_count());
  const int begin = std::clamp(t_start, 0, total - 1);
  const int end = std::min(total, begin + segment_frames(video, duration_s));

  const int n = roi.x_hi - roi.x_lo + 1;
  std::vector<std::uint64_t> sums(n, 0);
  for (int t = begin; t < end; ++t) {
    const GrayImage& frame = video.frame(t);
    for (int y = 0; y < frame.height; ++y) {
      const std::uint8_t* row = &frame.pixels[std::size_t(y) * frame.width];
      for (int i = 0; i < n; ++i) sums[i] += row[roi.x_lo + i];
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sums[a] > sums[b]; });
  const int keep = (n + 1) / 2;
  std::vector<int> columns(keep);
  for (int i = 0; i < keep; ++i) columns[i] = roi.x_lo + order[i];
  return columns;
}

}  // namespace ivpp::mmode
