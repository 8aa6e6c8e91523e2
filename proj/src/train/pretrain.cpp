#include <cmath>
#include <fstream>
#include <iomanip>

#include "ivpp/error.hpp"
#include "ivpp/train.hpp"

namespace ivpp::train {

namespace fs = std::filesystem;

void validate(const TrainConfig& c) {
  require(c.epochs >= 1, ErrorKind::invalid_argument, "epochs must be >= 1");
  require(c.batch_size >= 2, ErrorKind::invalid_argument, "batch_size must be >= 2");
  require(c.warmup_epochs >= 0, ErrorKind::invalid_argument, "warmup_epochs must be >= 0");
  require(c.lars.momentum >= 0.0 && c.lars.momentum < 1.0, ErrorKind::invalid_argument,
          "momentum must lie in [0, 1)");
  require(c.lars.weight_decay >= 0.0 && c.lars.trust_coefficient > 0.0,
          ErrorKind::invalid_argument, "invalid LARS coefficients");
}

TrainConfig protocol_train_config() { return TrainConfig{}; }

TrainConfig desk_train_config() {
  TrainConfig c;
  c.epochs = 10;
  c.batch_size = 32;
  c.warmup_epochs = 1;
  c.lars.trust_coefficient = 0.05;
  return c;
}

bool sample_weights_active(const sampler::IvppConfig& ivpp) {
  if (!ivpp.use_sample_weights) return false;
  return ivpp.mode == sampler::PairMode::bmode ? ivpp.delta_t > 0.0 : ivpp.delta_x > 0;
}

objectives::ObjectiveConfig effective_objective(objectives::ObjectiveConfig objective,
                                                const sampler::IvppConfig& ivpp) {
  objective.use_sample_weights = sample_weights_active(ivpp);
  if (objective.use_sample_weights && objective.method == objectives::Method::vicreg) {
    objective.vicreg_lambda *= 2.0;
  }
  return objective;
}

nn::Tensor prepare_pair_batch(const sampler::PairBatch& batch, const augment::PreprocessSpec& spec,
                              const augment::AugmentPolicy& policy, augment::Rng& rng) {
  const int n = static_cast<int>(batch.size());
  nn::Tensor x({2 * n, 3, spec.height, spec.width});
  const std::size_t stride = 3 * std::size_t(spec.height) * spec.width;
  auto one = [&](const GrayImage& view, int slot) {
    FloatImage img = resize_bilinear(to_unit_float(view), spec.height, spec.width);
    img = augment::augment(img, policy, rng);
    augment::preprocess_into(img, spec, x.ptr() + std::size_t(slot) * stride);
  };
  for (int i = 0; i < n; ++i) {
    one(batch.views_a[i], i);
    one(batch.views_b[i], n + i);
  }
  return x;
}

namespace {

objectives::EmbeddingBatch rows_to_batch(const nn::Tensor& z, int first, int count) {
  const int d = z.dim(1);
  objectives::EmbeddingBatch out(count, d);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = z.data[std::size_t(first) * d + i];
  }
  return out;
}

json model_section(const ModelSpec& spec) {
  return {{"encoder", nn::encoder_name(spec.encoder)},
          {"representation_dim", spec.representation_dim},
          {"projector_widths", spec.projector_widths},
          {"seed", spec.seed}};
}

}  // namespace

PretrainResult pretrain(Model& model, const PretrainData& data, const sampler::IvppConfig& ivpp,
                        const objectives::ObjectiveConfig& objective, const TrainConfig& train,
                        const augment::AugmentPolicy& policy, const PretrainOutputs& outputs) {
  require(data.manifest != nullptr && data.splits != nullptr, ErrorKind::precondition,
          "pretraining needs a manifest and a split assignment");
  validate(train);
  sampler::validate(ivpp);
  objectives::validate(objective);
  augment::validate(policy);
  const bool mmode_task = uses_mmode(data.task);
  require(mmode_task == (ivpp.mode == sampler::PairMode::mmode), ErrorKind::invalid_argument,
          std::string("pair mode does not match task ") + task_name(data.task));
  require(!mmode_task || data.rois.has_value(), ErrorKind::precondition,
          "M-mode pretraining needs pleural-line ROIs");

  std::vector<data::VideoRecord> videos;
  for (auto split : {data::Split::unlabelled, data::Split::train}) {
    for (const auto* r : data.splits->videos(*data.manifest, split)) videos.push_back(*r);
  }
  require(!videos.empty(), ErrorKind::precondition, "no videos available for pretraining");

  const auto cfg = effective_objective(objective, ivpp);
  const auto spec = augment::default_preprocess(data.task);
  sampler::PairBatcher batcher(std::move(videos), ivpp, data.rois);
  const std::int64_t per_epoch = std::int64_t(batcher.steps_per_epoch(train.batch_size));
  const std::int64_t total = per_epoch * train.epochs;
  const std::int64_t warmup = per_epoch * train.warmup_epochs;
  require(warmup < total, ErrorKind::invalid_argument,
          "warmup must be shorter than training (" + std::to_string(warmup) + " >= " +
              std::to_string(total) + " steps)");
  const double base_lr = train.effective_lr();

  sampler::Rng sample_rng(train.seed);
  augment::Rng augment_rng(train.seed ^ 0x9e3779b97f4a7c15ULL);
  auto params = model.parameters();
  Lars optimizer(params, train.lars);

  std::ofstream log;
  if (!outputs.loss_log.empty()) {
    if (outputs.loss_log.has_parent_path()) fs::create_directories(outputs.loss_log.parent_path());
    log.open(outputs.loss_log, std::ios::trunc);
    if (!log) fail(ErrorKind::io, "cannot write " + outputs.loss_log.string());
    log << std::setprecision(10);
    log << "epoch,loss,invariance,variance,covariance,redundancy,invariance_coef,lr,steps\n";
  }

  PretrainResult result;
  std::int64_t step = 0;
  const int n = train.batch_size;
  for (int epoch = 1; epoch <= train.epochs; ++epoch) {
    EpochLog e;
    e.epoch = epoch;
    for (std::int64_t s = 0; s < per_epoch; ++s, ++step) {
      const auto batch = batcher.make_batch(std::size_t(n), sample_rng);
      const nn::Tensor x = prepare_pair_batch(batch, spec, policy, augment_rng);
      for (auto* p : params) p->zero_grad();

      const nn::Tensor h = model.encoder->forward(x, true);
      const nn::Tensor z = model.projector->forward(h, true);
      const auto z1 = rows_to_batch(z, 0, n);
      const auto z2 = rows_to_batch(z, n, n);
      const std::vector<double> w =
          cfg.use_sample_weights ? batch.weights : std::vector<double>(std::size_t(n), 1.0);
      const auto lg = objectives::evaluate_with_grad(z1, z2, w, cfg);
      if (!std::isfinite(lg.report.total)) {
        fail(ErrorKind::numeric, std::string("non-finite ") + objectives::method_name(cfg.method) +
                                     " loss at epoch " + std::to_string(epoch) + ", step " +
                                     std::to_string(step));
      }

      nn::Tensor dz(z.shape);
      const std::size_t half = lg.grad_a.values.size();
      for (std::size_t i = 0; i < half; ++i) {
        dz.data[i] = float(lg.grad_a.values[i]);
        dz.data[half + i] = float(lg.grad_b.values[i]);
      }
      model.encoder->backward(model.projector->backward(dz));

      const double lr = lr_at(step, total, warmup, base_lr);
      optimizer.step(lr);

      const auto& r = lg.report;
      result.step_losses.push_back(r.total);
      e.loss += r.total;
      e.invariance += r.invariance;
      e.variance += r.variance;
      e.covariance += r.covariance;
      e.redundancy += r.redundancy;
      e.invariance_coef = r.invariance_coef;
      e.lr = lr;
      ++e.steps;
    }
    for (double* v : {&e.loss, &e.invariance, &e.variance, &e.covariance, &e.redundancy}) {
      *v /= double(e.steps);
    }
    result.epochs.push_back(e);
    if (log) {
      log << e.epoch << ',' << e.loss << ',' << e.invariance << ',' << e.variance << ','
          << e.covariance << ',' << e.redundancy << ',' << e.invariance_coef << ',' << e.lr << ','
          << e.steps << '\n';
      log.flush();
    }
    if (outputs.on_epoch) outputs.on_epoch(e);
  }
  result.steps = step;

  if (!outputs.checkpoint.empty()) {
    json snapshot = outputs.config_snapshot;
    if (!snapshot.contains("model")) snapshot["model"] = model_section(model.spec);
    save_checkpoint(capture(model, snapshot, step), outputs.checkpoint);
  }
  return result;
}

}  // namespace ivpp::train
