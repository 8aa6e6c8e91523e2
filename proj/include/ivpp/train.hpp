#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivpp/augment.hpp"
#include "ivpp/datamodel.hpp"
#include "ivpp/mmode.hpp"
#include "ivpp/nn/models.hpp"
#include "ivpp/objectives.hpp"
#include "ivpp/sampler.hpp"
#include "ivpp/task.hpp"

namespace ivpp::train {

using nlohmann::json;

struct ModelSpec {
  nn::EncoderKind encoder = nn::EncoderKind::tiny_cnn;
  int representation_dim = 32;  // honoured for tiny_cnn only
  std::vector<int> projector_widths{768, 768, 768};
  std::string init_weights;  // checkpoint path; empty means random init
  std::uint64_t seed = 0;
};

void validate(const ModelSpec& spec);

struct Model {
  ModelSpec spec;
  std::unique_ptr<nn::Encoder> encoder;
  std::unique_ptr<nn::Sequential> projector;

  int representation_dim() const { return encoder->output_dim(); }
  int embedding_dim() const { return spec.projector_widths.back(); }
  std::vector<nn::Parameter*> parameters();
  // Every parameter and buffer, keyed "encoder.*" / "projector.*".
  std::map<std::string, nn::Tensor*> state();
};

Model build_model(const ModelSpec& spec);

// Representations (projector=false) or embeddings, computed in inference mode.
nn::Tensor embed(Model& model, const nn::Tensor& images, bool project = false);

// ------------------------------------------------------------ optimizers

// Linear warmup from 0 to base_lr, then cosine decay reaching 0 at the
// final step (total_steps - 1).
double lr_at(std::int64_t step, std::int64_t total_steps, std::int64_t warmup_steps,
             double base_lr);

struct LarsConfig {
  double weight_decay = 1e-6;
  double momentum = 0.9;
  double trust_coefficient = 0.001;  // eta
};

// Layer-wise adaptive rate scaling. Bias and normalization parameters get
// neither weight decay nor the trust ratio. Frozen parameters are skipped.
class Lars {
 public:
  Lars(std::vector<nn::Parameter*> params, LarsConfig config);
  void step(double lr);

 private:
  std::vector<nn::Parameter*> params_;
  LarsConfig config_;
  std::vector<std::vector<float>> velocity_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

class Adam {
 public:
  Adam(std::vector<nn::Parameter*> params, AdamConfig config = {});
  void step(double lr);
  void step(const std::vector<double>& lr_per_param);

 private:
  std::vector<nn::Parameter*> params_;
  AdamConfig config_;
  std::vector<std::vector<float>> m_, v_;
  std::int64_t t_ = 0;
};

// ----------------------------------------------------------- checkpoints

struct Checkpoint {
  json config;  // snapshot of everything needed to rebuild and re-run
  std::int64_t step = 0;
  std::map<std::string, nn::Tensor> tensors;
};

Checkpoint capture(Model& model, json config, std::int64_t step, bool include_projector = true);
// Copies matching tensors into the model. Projector tensors are optional
// unless `require_projector`. Shape or name mismatches raise format errors.
void restore(Model& model, const Checkpoint& checkpoint, bool require_projector = false);

// Binary container: magic, JSON header with a tensor table, raw float32
// payload. Written to a temporary file and renamed into place.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------- pretraining

struct TrainConfig {
  int epochs = 500;
  int batch_size = 384;
  double base_lr = 0.0;  // <= 0 selects 0.2 * batch_size / 256
  LarsConfig lars;
  int warmup_epochs = 10;
  std::uint64_t seed = 0;

  double effective_lr() const { return base_lr > 0.0 ? base_lr : 0.2 * batch_size / 256.0; }
};

void validate(const TrainConfig& config);

// Full-scale protocol defaults and the reduced single-CPU profile.
TrainConfig protocol_train_config();
TrainConfig desk_train_config();

// True when pair weights can differ from 1.
bool sample_weights_active(const sampler::IvppConfig& ivpp);

// Objective configuration the trainer actually uses: weighting switched on
// only when active, and the VICReg invariance coefficient doubled with it.
objectives::ObjectiveConfig effective_objective(objectives::ObjectiveConfig objective,
                                                const sampler::IvppConfig& ivpp);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double invariance = 0.0;
  double variance = 0.0;
  double covariance = 0.0;
  double redundancy = 0.0;
  double invariance_coef = 0.0;
  double lr = 0.0;  // at the epoch's last step
  int steps = 0;
};

struct PretrainData {
  const data::DatasetManifest* manifest = nullptr;
  const data::SplitAssignment* splits = nullptr;
  Task task = Task::ab;
  std::optional<mmode::RoiTable> rois;  // required for M-mode tasks
};

struct PretrainOutputs {
  std::filesystem::path loss_log;    // CSV, appended per epoch; empty to skip
  std::filesystem::path checkpoint;  // empty to skip
  json config_snapshot = json::object();
  std::function<void(const EpochLog&)> on_epoch;
};

struct PretrainResult {
  std::vector<EpochLog> epochs;
  std::vector<double> step_losses;
  std::int64_t steps = 0;
};

// Self-supervised pretraining on the unlabelled and training-split videos.
PretrainResult pretrain(Model& model, const PretrainData& data, const sampler::IvppConfig& ivpp,
                        const objectives::ObjectiveConfig& objective, const TrainConfig& train,
                        const augment::AugmentPolicy& policy, const PretrainOutputs& outputs = {});

// One augmented, preprocessed pair batch as a (2N, 3, H, W) tensor: first the
// N anchor views, then the N partner views.
nn::Tensor prepare_pair_batch(const sampler::PairBatch& batch, const augment::PreprocessSpec& spec,
                              const augment::AugmentPolicy& policy, augment::Rng& rng);

// ------------------------------------------------------------ evaluation

struct LabeledSplit {
  std::vector<const data::VideoRecord*> train;
  std::vector<const data::VideoRecord*> validation;
  std::vector<const data::VideoRecord*> test;
};

// Labelled videos of each split for one task.
LabeledSplit labeled_split(const data::DatasetManifest& manifest,
                           const data::SplitAssignment& splits, Task task);

// Manifest task key for a task ("AB", "LS", "COVID").
std::string task_key(Task task);

struct ExampleOptions {
  // Frames (B-mode) or columns (M-mode) taken per video, evenly spaced;
  // 0 takes all frames, and for M-mode all candidate columns.
  int per_video = 0;
  const mmode::RoiTable* rois = nullptr;
};

struct Metrics {
  double accuracy = 0.0;
  double auc = 0.0;  // binary AUC; one-vs-rest mean for 3 classes
  std::size_t examples = 0;
  std::vector<double> scores;  // positive-class probability (binary)
  std::vector<int> labels;
  std::vector<int> predictions;
};

struct ProbeConfig {
  int epochs = 100;
  int batch_size = 64;
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  // Keep the last epoch's head instead of the best validation epoch.
  bool keep_final = false;
  ExampleOptions examples;
};

// Frozen encoder, trainable linear head (1 logit with sigmoid for binary
// tasks, 3 logits with softmax for COVID). Metrics are on split.test.
Metrics linear_eval(Model& model, const LabeledSplit& split, Task task, const ProbeConfig& config);

struct Unfreeze {
  bool all = true;
  int last_k = 3;  // used when !all

  static Unfreeze everything() { return {true, 0}; }
  static Unfreeze last(int k) { return {false, k}; }
};

struct FineTuneConfig {
  int epochs = 10;
  int batch_size = 32;
  double lr = 1e-3;          // head
  double encoder_lr = 1e-4;  // unfrozen encoder blocks
  Unfreeze unfreeze;
  std::uint64_t seed = 0;
  // Retain final weights rather than the best validation epoch; forced when
  // there is no validation split.
  bool keep_final = false;
  ExampleOptions examples;
};

// Trains the head and the unfrozen part of the encoder. The model's
// encoder is modified in place.
Metrics fine_tune(Model& model, const LabeledSplit& split, Task task, const FineTuneConfig& config);

// Writes the head's contract dimension: 1 for binary tasks, 3 for COVID.
int head_outputs(Task task);

}  // namespace ivpp::train
