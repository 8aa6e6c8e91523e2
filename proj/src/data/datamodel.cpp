#include "ivpp/datamodel.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "ivpp/error.hpp"
#include "ivpp/png_io.hpp"

namespace ivpp::data {

using nlohmann::json;
namespace fs = std::filesystem;

InMemoryFrames::InMemoryFrames(std::vector<GrayImage> frames) : frames_(std::move(frames)) {
  require(!frames_.empty(), ErrorKind::precondition, "video has no frames");
  for (const auto& f : frames_) {
    require(f.height == frames_[0].height && f.width == frames_[0].width,
            ErrorKind::format, "frames of a video must share one size");
  }
}

const GrayImage& InMemoryFrames::frame(std::size_t index) const {
  require(index < frames_.size(), ErrorKind::precondition, "frame index out of range");
  return frames_[index];
}

void PngDirectoryFrames::load() const {
  std::call_once(loaded_, [this] {
    if (!fs::is_directory(dir_)) fail(ErrorKind::io, "missing frame directory " + dir_.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir_)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(ErrorKind::format, "no PNG frames in " + dir_.string());
    std::vector<GrayImage> frames;
    frames.reserve(files.size());
    for (const auto& f : files) {
      frames.push_back(read_png_gray(f));
      if (frames.back().height != frames.front().height ||
          frames.back().width != frames.front().width) {
        fail(ErrorKind::format, "frame size mismatch in " + dir_.string());
      }
    }
    frames_ = std::move(frames);
  });
}

std::size_t PngDirectoryFrames::frame_count() const {
  load();
  return frames_.size();
}

const GrayImage& PngDirectoryFrames::frame(std::size_t index) const {
  load();
  require(index < frames_.size(), ErrorKind::precondition, "frame index out of range");
  return frames_[index];
}

std::optional<int> VideoRecord::label(const std::string& task) const {
  auto it = labels.find(task);
  if (it == labels.end()) return std::nullopt;
  return it->second;
}

std::optional<int> VideoRecord::frame_label(const std::string& task, std::size_t index) const {
  auto it = frame_labels.find(task);
  if (it != frame_labels.end() && index < it->second.size()) return it->second[index];
  return label(task);
}

std::vector<std::string> DatasetManifest::patients() const {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.patient_id);
  return {ids.begin(), ids.end()};
}

const VideoRecord& DatasetManifest::find(const std::string& video_id) const {
  for (const auto& r : records) {
    if (r.video_id == video_id) return r;
  }
  fail(ErrorKind::invalid_argument, "unknown video id " + video_id);
}

void validate(const DatasetManifest& manifest) {
  std::set<std::string> ids;
  for (const auto& r : manifest.records) {
    require(!r.video_id.empty(), ErrorKind::format, "record without video_id");
    require(ids.insert(r.video_id).second, ErrorKind::format,
            "duplicate video_id " + r.video_id);
    require(!r.patient_id.empty(), ErrorKind::format, "video " + r.video_id + " has no patient_id");
    require(r.fps > 0.0, ErrorKind::format, "invalid frame rate for video " + r.video_id);
    require(r.frames != nullptr, ErrorKind::format, "video " + r.video_id + " has no frames");
    auto check_class = [&](const std::string& task, int cls) {
      auto t = manifest.tasks.find(task);
      require(t != manifest.tasks.end(), ErrorKind::format,
              "video " + r.video_id + " labelled for unknown task " + task);
      require(cls >= 0 && cls < static_cast<int>(t->second.size()), ErrorKind::format,
              "label outside vocabulary for task " + task + " in video " + r.video_id);
    };
    for (const auto& [task, cls] : r.labels) check_class(task, cls);
    for (const auto& [task, classes] : r.frame_labels) {
      for (int cls : classes) check_class(task, cls);
    }
  }
}

namespace {

int class_index(const DatasetManifest& m, const std::string& task, const json& value,
                const std::string& video_id) {
  auto t = m.tasks.find(task);
  if (t == m.tasks.end()) {
    fail(ErrorKind::format, "video " + video_id + " labelled for unknown task " + task);
  }
  if (value.is_number_integer()) return value.get<int>();
  if (!value.is_string()) fail(ErrorKind::format, "malformed label in video " + video_id);
  const auto name = value.get<std::string>();
  auto pos = std::find(t->second.begin(), t->second.end(), name);
  if (pos == t->second.end()) {
    fail(ErrorKind::format,
         "label outside vocabulary: '" + name + "' for task " + task + " in video " + video_id);
  }
  return static_cast<int>(pos - t->second.begin());
}

fs::path resolve_frames_dir(const std::string& frames_dir, const fs::path& manifest_path) {
  fs::path p(frames_dir);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("DATA_ROOT"); root != nullptr && *root != '\0') {
    return fs::path(root) / p;
  }
  return manifest_path.parent_path() / p;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open manifest " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::format, "malformed manifest " + path.string() + ": " + e.what());
  }

  DatasetManifest m;
  try {
    if (doc.contains("provenance")) m.provenance = doc.at("provenance").get<std::string>();
    if (doc.contains("tasks")) {
      for (const auto& [task, classes] : doc.at("tasks").items()) {
        m.tasks[task] = classes.get<std::vector<std::string>>();
      }
    }
    for (const auto& v : doc.at("videos")) {
      VideoRecord r;
      r.video_id = v.at("video_id").get<std::string>();
      r.patient_id = v.at("patient_id").get<std::string>();
      r.fps = v.at("fps").get<double>();
      if (!(r.fps > 0.0)) fail(ErrorKind::format, "invalid frame rate for video " + r.video_id);
      r.frames_dir = v.at("frames_dir").get<std::string>();
      r.frames = std::make_shared<PngDirectoryFrames>(resolve_frames_dir(r.frames_dir, path));
      if (v.contains("labels")) {
        for (const auto& [task, cls] : v.at("labels").items()) {
          r.labels[task] = class_index(m, task, cls, r.video_id);
        }
      }
      if (v.contains("frame_labels")) {
        for (const auto& [task, seq] : v.at("frame_labels").items()) {
          auto& out = r.frame_labels[task];
          for (const auto& cls : seq) out.push_back(class_index(m, task, cls, r.video_id));
        }
      }
      m.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::format, "malformed record in " + path.string() + ": " + e.what());
  }
  validate(m);
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  validate(manifest);
  json doc;
  doc["provenance"] = manifest.provenance;
  doc["tasks"] = json::object();
  for (const auto& [task, classes] : manifest.tasks) doc["tasks"][task] = classes;
  doc["videos"] = json::array();
  for (const auto& r : manifest.records) {
    json v;
    v["video_id"] = r.video_id;
    v["patient_id"] = r.patient_id;
    v["fps"] = r.fps;
    v["frames_dir"] = r.frames_dir;
    v["labels"] = json::object();
    for (const auto& [task, cls] : r.labels) v["labels"][task] = manifest.tasks.at(task).at(cls);
    if (!r.frame_labels.empty()) {
      v["frame_labels"] = json::object();
      for (const auto& [task, seq] : r.frame_labels) {
        json names = json::array();
        for (int cls : seq) names.push_back(manifest.tasks.at(task).at(cls));
        v["frame_labels"][task] = names;
      }
    }
    doc["videos"].push_back(std::move(v));
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

void write_frames(const VideoRecord& video, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < video.frame_count(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.png", i);
    write_png_gray(dir / name, video.frame(i));
  }
}

const char* split_name(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
    case Split::unlabelled:
      return "unlabelled";
  }
  return "unknown";
}

Split SplitAssignment::of(const std::string& patient_id) const {
  auto it = by_patient.find(patient_id);
  require(it != by_patient.end(), ErrorKind::invalid_argument,
          "patient " + patient_id + " has no split");
  return it->second;
}

std::vector<const VideoRecord*> SplitAssignment::videos(const DatasetManifest& manifest,
                                                        Split split) const {
  std::vector<const VideoRecord*> out;
  for (const auto& r : manifest.records) {
    if (of(r.patient_id) == split) out.push_back(&r);
  }
  return out;
}

std::vector<std::string> SplitAssignment::patients(Split split) const {
  std::vector<std::string> out;
  for (const auto& [p, s] : by_patient) {
    if (s == split) out.push_back(p);
  }
  return out;
}

SplitAssignment split_by_patient(const DatasetManifest& manifest, SplitFractions fractions,
                                 std::uint64_t seed) {
  for (double f : {fractions.train, fractions.validation, fractions.test}) {
    require(f > 0.0 && f < 1.0, ErrorKind::invalid_argument, "split fractions must lie in (0, 1)");
  }
  require(std::abs(fractions.train + fractions.validation + fractions.test - 1.0) < 1e-6,
          ErrorKind::invalid_argument, "split fractions must sum to 1");

  std::set<std::string> labelled;
  std::set<std::string> all;
  for (const auto& r : manifest.records) {
    all.insert(r.patient_id);
    if (!r.labels.empty()) labelled.insert(r.patient_id);
  }
  std::vector<std::string> ids(labelled.begin(), labelled.end());
  require(ids.size() >= 3, ErrorKind::precondition,
          "fewer labelled patients (" + std::to_string(ids.size()) + ") than splits (3)");

  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  const auto n = static_cast<long>(ids.size());
  long cut1 = std::lround(fractions.train * n);
  long cut2 = std::lround((fractions.train + fractions.validation) * n);
  cut1 = std::clamp(cut1, 1L, n - 2);
  cut2 = std::clamp(cut2, cut1 + 1, n - 1);

  SplitAssignment out;
  for (const auto& p : all) out.by_patient[p] = Split::unlabelled;
  for (long i = 0; i < n; ++i) {
    out.by_patient[ids[i]] = i < cut1 ? Split::train : (i < cut2 ? Split::validation : Split::test);
  }
  return out;
}

}  // namespace ivpp::data
