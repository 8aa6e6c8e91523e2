#pragma once

#include <cstdint>

#include "ivpp/datamodel.hpp"
#include "ivpp/mmode.hpp"

namespace ivpp::data {

// Ultrasound-like videos with planted artifacts:
//  - AB task: each frame shows horizontal reverberation bands (class a_lines)
//    or vertical comet-tail bands (class b_lines). The class persists for runs
//    of artifact_dwell frames and may switch at run boundaries; the video
//    label is the majority frame class.
//  - LS task: the band under the pleural line either moves over time
//    (sliding, sinusoidal texture in M-mode) or is static (absent,
//    horizontal stripes in M-mode).
struct SyntheticConfig {
  int n_patients = 80;
  int videos_per_patient = 4;
  int frames_per_video = 30;
  double fps = 10.0;
  int frame_height = 96;
  int frame_width = 96;
  int artifact_dwell = 20;
  double noise_level = 12.0;  // additive speckle std, 8-bit pixel units
  // Share of patients whose videos carry no labels.
  double unlabelled_fraction = 0.5;
  std::uint64_t seed = 0;
};

void validate(const SyntheticConfig& config);

struct SyntheticDataset {
  DatasetManifest manifest;
  mmode::RoiTable rois;  // pleural-line bounds in standardized coordinates
};

SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& config);

inline constexpr const char* kTaskAB = "AB";
inline constexpr const char* kTaskLS = "LS";
inline constexpr const char* kTaskCOVID = "COVID";

}  // namespace ivpp::data
