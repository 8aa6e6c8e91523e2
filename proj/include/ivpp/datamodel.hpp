#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ivpp/image.hpp"

namespace ivpp::data {

// Supplies the frames of one video. Implementations must be safe for
// concurrent readers.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t frame_count() const = 0;
  virtual const GrayImage& frame(std::size_t index) const = 0;
};

class InMemoryFrames final : public FrameSource {
 public:
  explicit InMemoryFrames(std::vector<GrayImage> frames);

  std::size_t frame_count() const override { return frames_.size(); }
  const GrayImage& frame(std::size_t index) const override;

 private:
  std::vector<GrayImage> frames_;
};

// Directory of zero-padded numbered PNG files. Nothing is touched on disk
// until the first frame or count query; the decoded frames are then cached.
class PngDirectoryFrames final : public FrameSource {
 public:
  explicit PngDirectoryFrames(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::size_t frame_count() const override;
  const GrayImage& frame(std::size_t index) const override;
  const std::filesystem::path& directory() const { return dir_; }

 private:
  void load() const;

  std::filesystem::path dir_;
  mutable std::once_flag loaded_;
  mutable std::vector<GrayImage> frames_;
};

struct VideoRecord {
  std::string video_id;
  std::string patient_id;
  double fps = 0.0;
  std::shared_ptr<const FrameSource> frames;
  // task name -> class index into the manifest's vocabulary for that task
  std::map<std::string, int> labels;
  // Optional per-frame labels (synthetic data); same vocabulary as labels.
  std::map<std::string, std::vector<int>> frame_labels;
  // Where the frames live, relative paths preserved as written in the manifest.
  std::string frames_dir;

  std::size_t frame_count() const { return frames->frame_count(); }
  const GrayImage& frame(std::size_t index) const { return frames->frame(index); }
  std::optional<int> label(const std::string& task) const;
  // Per-frame label when available, otherwise the video label.
  std::optional<int> frame_label(const std::string& task, std::size_t index) const;
};

struct DatasetManifest {
  std::vector<VideoRecord> records;
  std::map<std::string, std::vector<std::string>> tasks;
  std::string provenance;

  // Sorted unique patient ids.
  std::vector<std::string> patients() const;
  const VideoRecord& find(const std::string& video_id) const;
};

// Throws if any manifest invariant is violated.
void validate(const DatasetManifest& manifest);

DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes the JSON manifest. Each record's frames_dir is written verbatim.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Writes every frame of `video` as <dir>/NNNNNN.png.
void write_frames(const VideoRecord& video, const std::filesystem::path& dir);

enum class Split { train, validation, test, unlabelled };

const char* split_name(Split split);

struct SplitFractions {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct SplitAssignment {
  std::map<std::string, Split> by_patient;

  Split of(const std::string& patient_id) const;
  std::vector<const VideoRecord*> videos(const DatasetManifest& manifest, Split split) const;
  std::vector<std::string> patients(Split split) const;
};

// Patients with no labelled video are assigned to `unlabelled`; the labelled
// patients are sorted, shuffled by `seed` and cut at the cumulative fractions.
SplitAssignment split_by_patient(const DatasetManifest& manifest, SplitFractions fractions,
                                 std::uint64_t seed);

}  // namespace ivpp::data
