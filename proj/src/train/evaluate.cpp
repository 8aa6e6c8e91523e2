#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ivpp/error.hpp"
#include "ivpp/metrics.hpp"
#include "ivpp/train.hpp"

namespace ivpp::train {

std::string task_key(Task task) { return task_name(task); }

int head_outputs(Task task) { return class_count(task) == 2 ? 1 : class_count(task); }

LabeledSplit labeled_split(const data::DatasetManifest& manifest,
                           const data::SplitAssignment& splits, Task task) {
  const std::string key = task_key(task);
  LabeledSplit out;
  for (const auto& r : manifest.records) {
    if (!r.label(key)) continue;
    switch (splits.of(r.patient_id)) {
      case data::Split::train:
        out.train.push_back(&r);
        break;
      case data::Split::validation:
        out.validation.push_back(&r);
        break;
      case data::Split::test:
        out.test.push_back(&r);
        break;
      case data::Split::unlabelled:
        break;
    }
  }
  return out;
}

namespace {

struct Example {
  std::size_t video;  // index into ExampleSet::videos
  int position;       // frame index (B-mode) or column (M-mode)
  int label;
};

struct ExampleSet {
  std::vector<data::VideoRecord> videos;  // standardized for M-mode
  std::vector<Example> items;
  bool mmode = false;
};

std::vector<int> evenly_spaced(const std::vector<int>& pool, int k) {
  if (k <= 0 || std::size_t(k) >= pool.size()) return pool;
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(pool[std::size_t(i) * pool.size() / std::size_t(k)]);
  return out;
}

ExampleSet make_examples(const std::vector<const data::VideoRecord*>& videos, Task task,
                         const ExampleOptions& opts) {
  const std::string key = task_key(task);
  ExampleSet set;
  set.mmode = uses_mmode(task);
  for (const auto* v : videos) {
    const auto video_label = v->label(key);
    require(video_label.has_value(), ErrorKind::precondition,
            "video " + v->video_id + " has no " + key + " label");
    const std::size_t slot = set.videos.size();
    if (set.mmode) {
      require(opts.rois != nullptr, ErrorKind::precondition, "M-mode evaluation needs ROIs");
      auto roi = opts.rois->find(v->video_id);
      require(roi != opts.rois->end(), ErrorKind::precondition,
              "no pleural ROI for video " + v->video_id);
      set.videos.push_back(mmode::standardize_video(*v));
      const auto columns = mmode::candidate_columns(set.videos.back(), roi->second);
      for (int x : evenly_spaced(columns, opts.per_video)) {
        set.items.push_back({slot, x, *video_label});
      }
    } else {
      set.videos.push_back(*v);
      std::vector<int> frames(v->frame_count());
      std::iota(frames.begin(), frames.end(), 0);
      for (int f : evenly_spaced(frames, opts.per_video)) {
        set.items.push_back({slot, f, *v->frame_label(key, std::size_t(f))});
      }
    }
  }
  return set;
}

void render(const ExampleSet& set, const Example& e, const augment::PreprocessSpec& spec,
            float* out) {
  const auto& video = set.videos[e.video];
  if (set.mmode) {
    const auto m = mmode::extract_mmode(video, e.position, 0);
    augment::preprocess_into(to_unit_float(m.pixels), spec, out);
  } else {
    augment::preprocess_into(to_unit_float(video.frame(std::size_t(e.position))), spec, out);
  }
}

nn::Tensor render_batch(const ExampleSet& set, std::span<const std::size_t> idx,
                        const augment::PreprocessSpec& spec) {
  nn::Tensor x({int(idx.size()), 3, spec.height, spec.width});
  const std::size_t stride = 3 * std::size_t(spec.height) * spec.width;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    render(set, set.items[idx[i]], spec, x.ptr() + i * stride);
  }
  return x;
}

constexpr std::size_t kChunk = 64;

nn::Tensor features(Model& model, const ExampleSet& set, const augment::PreprocessSpec& spec) {
  const int d = model.representation_dim();
  nn::Tensor out({int(set.items.size()), d});
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < set.items.size(); start += kChunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(set.items.size(), start + kChunk); ++i) {
      idx.push_back(i);
    }
    const nn::Tensor h = model.encoder->forward(render_batch(set, idx, spec), false);
    std::copy(h.data.begin(), h.data.end(), out.ptr() + start * d);
  }
  return out;
}

std::vector<int> labels_of(const ExampleSet& set) {
  std::vector<int> y;
  for (const auto& e : set.items) y.push_back(e.label);
  return y;
}

// Loss gradient w.r.t. logits, averaged over the batch. Returns the mean loss.
double head_loss(const nn::Tensor& logits, std::span<const int> y, nn::Tensor& grad) {
  const int n = logits.dim(0);
  const int k = logits.dim(1);
  grad = nn::Tensor(logits.shape);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const float* z = logits.ptr() + std::size_t(i) * k;
    float* g = grad.ptr() + std::size_t(i) * k;
    if (k == 1) {
      const double p = 1.0 / (1.0 + std::exp(-double(z[0])));
      const double t = y[i];
      loss += std::max(double(z[0]), 0.0) - z[0] * t + std::log1p(std::exp(-std::abs(double(z[0]))));
      g[0] = float((p - t) / n);
    } else {
      const double mx = *std::max_element(z, z + k);
      double denom = 0.0;
      for (int c = 0; c < k; ++c) denom += std::exp(z[c] - mx);
      for (int c = 0; c < k; ++c) {
        const double p = std::exp(z[c] - mx) / denom;
        g[c] = float((p - (c == y[i] ? 1.0 : 0.0)) / n);
      }
      loss += -(z[y[i]] - mx - std::log(denom));
    }
  }
  return loss / n;
}

Metrics score(const nn::Tensor& logits, std::vector<int> labels) {
  Metrics m;
  const int n = logits.dim(0);
  const int k = logits.dim(1);
  m.examples = std::size_t(n);
  m.labels = std::move(labels);
  std::vector<std::vector<double>> probs(std::size_t(std::max(k, 2)));
  for (int i = 0; i < n; ++i) {
    const float* z = logits.ptr() + std::size_t(i) * k;
    if (k == 1) {
      const double p = 1.0 / (1.0 + std::exp(-double(z[0])));
      m.scores.push_back(p);
      m.predictions.push_back(p >= 0.5 ? 1 : 0);
    } else {
      const double mx = *std::max_element(z, z + k);
      double denom = 0.0;
      for (int c = 0; c < k; ++c) denom += std::exp(z[c] - mx);
      for (int c = 0; c < k; ++c) probs[c].push_back(std::exp(z[c] - mx) / denom);
      m.predictions.push_back(int(std::max_element(z, z + k) - z));
    }
  }
  if (n == 0) {
    m.accuracy = m.auc = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  m.accuracy = metrics::accuracy(m.predictions, m.labels);
  auto both_classes = [](const std::vector<int>& y) {
    return std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
  };
  if (k == 1) {
    m.auc = both_classes(m.labels) ? metrics::auc(m.scores, m.labels)
                                   : std::numeric_limits<double>::quiet_NaN();
  } else {
    double total = 0.0;
    int used = 0;
    for (int c = 0; c < k; ++c) {
      std::vector<int> y;
      for (int l : m.labels) y.push_back(l == c ? 1 : 0);
      if (!both_classes(y)) continue;
      total += metrics::auc(probs[c], y);
      ++used;
    }
    m.auc = used > 0 ? total / used : std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

// Selection metric: AUC for binary tasks, accuracy otherwise.
double selection_value(const Metrics& m, Task task) {
  const double v = class_count(task) == 2 ? m.auc : m.accuracy;
  return std::isnan(v) ? m.accuracy : v;
}

struct Standardizer {
  std::vector<float> mean, inv_std;

  explicit Standardizer(const nn::Tensor& f) {
    const int n = f.dim(0), d = f.dim(1);
    mean.assign(d, 0.0f);
    inv_std.assign(d, 1.0f);
    for (int j = 0; j < d; ++j) {
      double s = 0.0, ss = 0.0;
      for (int i = 0; i < n; ++i) s += f.data[std::size_t(i) * d + j];
      const double mu = s / n;
      for (int i = 0; i < n; ++i) {
        const double c = f.data[std::size_t(i) * d + j] - mu;
        ss += c * c;
      }
      mean[j] = float(mu);
      inv_std[j] = float(1.0 / std::max(std::sqrt(ss / n), 1e-6));
    }
  }

  nn::Tensor apply(nn::Tensor f) const {
    const int d = f.dim(1);
    for (std::size_t i = 0; i < f.size(); ++i) {
      f.data[i] = (f.data[i] - mean[i % d]) * inv_std[i % d];
    }
    return f;
  }
};

nn::Tensor gather_rows(const nn::Tensor& f, std::span<const std::size_t> idx) {
  const int d = f.dim(1);
  nn::Tensor out({int(idx.size()), d});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(f.ptr() + idx[i] * d, d, out.ptr() + i * d);
  }
  return out;
}

}  // namespace

Metrics linear_eval(Model& model, const LabeledSplit& split, Task task, const ProbeConfig& cfg) {
  require(!split.train.empty() && !split.test.empty(), ErrorKind::precondition,
          "linear evaluation needs labelled training and test videos");
  require(cfg.batch_size >= 1 && cfg.epochs >= 0, ErrorKind::invalid_argument,
          "invalid probe configuration");
  const auto spec = augment::default_preprocess(task);
  const auto train_set = make_examples(split.train, task, cfg.examples);
  const auto val_set = make_examples(split.validation, task, cfg.examples);
  const auto test_set = make_examples(split.test, task, cfg.examples);

  const nn::Tensor raw_train = features(model, train_set, spec);
  const Standardizer standardize(raw_train);
  const nn::Tensor f_train = standardize.apply(raw_train);
  const nn::Tensor f_val = val_set.items.empty() ? nn::Tensor()
                                                 : standardize.apply(features(model, val_set, spec));
  const nn::Tensor f_test = standardize.apply(features(model, test_set, spec));
  const auto y_train = labels_of(train_set);
  const auto y_val = labels_of(val_set);
  const auto y_test = labels_of(test_set);

  nn::Rng rng(cfg.seed);
  nn::Linear head("head", model.representation_dim(), head_outputs(task), true, rng);
  Adam opt(head.parameters(), AdamConfig{.weight_decay = cfg.weight_decay});

  const bool select = !cfg.keep_final && !val_set.items.empty();
  double best = -std::numeric_limits<double>::infinity();
  nn::Tensor best_w = head.weight().value, best_b = head.bias().value;

  std::vector<std::size_t> order(train_set.items.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
      std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<int> y;
      for (auto i : idx) y.push_back(y_train[i]);
      for (auto* p : head.parameters()) p->zero_grad();
      nn::Tensor grad;
      head_loss(head.forward(gather_rows(f_train, idx), true), y, grad);
      head.backward(grad);
      opt.step(cfg.lr);
    }
    if (select) {
      const double v = selection_value(score(head.forward(f_val, false), y_val), task);
      if (v > best) {
        best = v;
        best_w = head.weight().value;
        best_b = head.bias().value;
      }
    }
  }
  if (select && cfg.epochs > 0) {
    head.weight().value = best_w;
    head.bias().value = best_b;
  }
  return score(head.forward(f_test, false), y_test);
}

Metrics fine_tune(Model& model, const LabeledSplit& split, Task task, const FineTuneConfig& cfg) {
  require(!split.train.empty() && !split.test.empty(), ErrorKind::precondition,
          "fine-tuning needs labelled training and test videos");
  require(cfg.batch_size >= 2 && cfg.epochs >= 0, ErrorKind::invalid_argument,
          "invalid fine-tuning configuration");
  const auto spec = augment::default_preprocess(task);
  const auto train_set = make_examples(split.train, task, cfg.examples);
  const auto val_set = make_examples(split.validation, task, cfg.examples);
  const auto test_set = make_examples(split.test, task, cfg.examples);
  const auto y_train = labels_of(train_set);

  nn::Encoder& enc = *model.encoder;
  if (cfg.unfreeze.all) {
    enc.set_trainable(true);
  } else {
    enc.unfreeze_last(std::size_t(cfg.unfreeze.last_k));
  }
  nn::Rng rng(cfg.seed);
  nn::Linear head("head", model.representation_dim(), head_outputs(task), true, rng);

  auto params = enc.parameters();
  std::vector<double> lrs(params.size(), cfg.encoder_lr);
  for (auto* p : head.parameters()) {
    params.push_back(p);
    lrs.push_back(cfg.lr);
  }
  Adam opt(params);

  auto evaluate = [&](const ExampleSet& set) {
    return score(head.forward(features(model, set, spec), false), labels_of(set));
  };
  auto snapshot = [&] {
    std::vector<nn::Tensor> s;
    for (auto* p : params) s.push_back(p->value);
    for (auto& b : enc.buffers()) s.push_back(*b.value);
    return s;
  };
  auto restore_snapshot = [&](const std::vector<nn::Tensor>& s) {
    std::size_t i = 0;
    for (auto* p : params) p->value = s[i++];
    for (auto& b : enc.buffers()) *b.value = s[i++];
  };

  const bool select = !cfg.keep_final && !val_set.items.empty();
  double best = -std::numeric_limits<double>::infinity();
  std::vector<nn::Tensor> best_state;

  std::vector<std::size_t> order(train_set.items.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start + 2 <= order.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
      std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<int> y;
      for (auto i : idx) y.push_back(y_train[i]);
      for (auto* p : params) p->zero_grad();
      const nn::Tensor h = enc.forward(render_batch(train_set, idx, spec), true);
      nn::Tensor grad;
      head_loss(head.forward(h, true), y, grad);
      enc.backward(head.backward(grad));
      opt.step(lrs);
    }
    if (select) {
      const double v = selection_value(evaluate(val_set), task);
      if (v > best) {
        best = v;
        best_state = snapshot();
      }
    }
  }
  if (select && !best_state.empty()) restore_snapshot(best_state);
  return evaluate(test_set);
}

}  // namespace ivpp::train
