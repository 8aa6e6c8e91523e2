#include "ivpp/cli.hpp"

#include <fstream>
#include <iostream>
#include <set>

#include "ivpp/augment.hpp"
#include "ivpp/error.hpp"
#include "ivpp/task.hpp"

namespace ivpp::cli {

namespace fs = std::filesystem;

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::desk;
  if (name == "protocol") return Profile::protocol;
  fail(ErrorKind::invalid_argument, "unknown profile '" + name + "' (expected desk or protocol)");
}

const char* profile_name(Profile profile) {
  return profile == Profile::desk ? "desk" : "protocol";
}

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "linear") return EvalMode::linear;
  if (name == "finetune") return EvalMode::finetune;
  if (name == "kfold") return EvalMode::kfold;
  if (name == "label_efficiency") return EvalMode::label_efficiency;
  fail(ErrorKind::invalid_argument, "unknown eval mode '" + name + "'");
}

const char* eval_mode_name(EvalMode mode) {
  switch (mode) {
    case EvalMode::linear: return "linear";
    case EvalMode::finetune: return "finetune";
    case EvalMode::kfold: return "kfold";
    case EvalMode::label_efficiency: return "label_efficiency";
  }
  return "linear";
}

namespace {

const char* grid_unit(Task task) { return uses_mmode(task) ? "pixels" : "seconds"; }

json examples_json(const train::ExampleOptions& e) { return {{"per_video", e.per_video}}; }

json synthetic_json(const data::SyntheticConfig& s) {
  return {{"n_patients", s.n_patients},
          {"videos_per_patient", s.videos_per_patient},
          {"frames_per_video", s.frames_per_video},
          {"fps", s.fps},
          {"frame_height", s.frame_height},
          {"frame_width", s.frame_width},
          {"artifact_dwell", s.artifact_dwell},
          {"noise_level", s.noise_level},
          {"unlabelled_fraction", s.unlabelled_fraction},
          {"seed", s.seed}};
}

json config_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(objectives::method_name(m));
  json flags = json::array();
  for (bool f : c.weight_flags) flags.push_back(f);
  json widths = c.model.projector_widths;
  return {
      {"profile", profile_name(c.profile)},
      {"seed", c.seed},
      {"out", c.out.string()},
      {"task", task_name(c.task)},
      {"data",
       {{"manifest", c.data.manifest},
        {"rois", c.data.rois},
        {"synthetic", synthetic_json(c.data.synthetic)},
        {"splits",
         {{"train", c.data.fractions.train},
          {"validation", c.data.fractions.validation},
          {"test", c.data.fractions.test}}}}},
      {"ivpp",
       {{"delta_t", c.ivpp.delta_t},
        {"delta_x", c.ivpp.delta_x},
        {"use_sample_weights", c.ivpp.use_sample_weights},
        {"shared_segment", c.ivpp.shared_segment},
        {"segment_seconds", c.ivpp.segment_seconds},
        {"grid_unit", grid_unit(c.task)},
        {"delta_grid", c.delta_grid},
        {"sample_weight_flags", flags}}},
      {"objective",
       {{"method", objectives::method_name(c.objective.method)},
        {"methods", methods},
        {"temperature", c.objective.temperature},
        {"vicreg_lambda", c.objective.vicreg_lambda},
        {"vicreg_mu", c.objective.vicreg_mu},
        {"vicreg_nu", c.objective.vicreg_nu},
        {"vicreg_invariance_per_dim", c.objective.vicreg_invariance_per_dim},
        {"variance_target", c.objective.variance_target},
        {"eps", c.objective.eps},
        {"barlow_lambda", c.objective.barlow_lambda}}},
      {"model",
       {{"encoder", nn::encoder_name(c.model.encoder)},
        {"representation_dim", c.model.representation_dim},
        {"projector_widths", widths},
        {"init_weights", c.model.init_weights}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"base_lr", c.train.base_lr},
        {"effective_lr", c.train.effective_lr()},
        {"warmup_epochs", c.train.warmup_epochs},
        {"lars",
         {{"weight_decay", c.train.lars.weight_decay},
          {"momentum", c.train.lars.momentum},
          {"trust_coefficient", c.train.lars.trust_coefficient}}}}},
      {"eval",
       {{"mode", eval_mode_name(c.eval_mode)},
        {"checkpoint", c.checkpoint},
        {"folds", c.folds},
        {"n_subsets", c.n_subsets},
        {"probe",
         {{"epochs", c.probe.epochs},
          {"batch_size", c.probe.batch_size},
          {"lr", c.probe.lr},
          {"weight_decay", c.probe.weight_decay},
          {"keep_final", c.probe.keep_final},
          {"examples", examples_json(c.probe.examples)}}},
        {"finetune",
         {{"epochs", c.finetune.epochs},
          {"batch_size", c.finetune.batch_size},
          {"lr", c.finetune.lr},
          {"encoder_lr", c.finetune.encoder_lr},
          {"unfreeze", c.finetune.unfreeze.all
                           ? json("all")
                           : json("last_" + std::to_string(c.finetune.unfreeze.last_k))},
          {"keep_final", c.finetune.keep_final},
          {"examples", examples_json(c.finetune.examples)}}}}},
      {"stats", {{"results", c.results}, {"metric", c.metric}, {"alpha", c.alpha}}},
  };
}

ExperimentConfig profile_defaults(Profile profile, Task task) {
  ExperimentConfig c;
  c.profile = profile;
  c.task = task;
  c.ivpp.mode = uses_mmode(task) ? sampler::PairMode::mmode : sampler::PairMode::bmode;
  c.delta_grid = uses_mmode(task) ? std::vector<double>{0, 5, 10, 15}
                                  : std::vector<double>{0, 0.5, 1, 1.5};
  c.methods = {objectives::Method::simclr, objectives::Method::barlow_twins,
               objectives::Method::vicreg};
  if (profile == Profile::desk) {
    c.train = train::desk_train_config();
    c.model.encoder = nn::EncoderKind::tiny_cnn;
    c.n_subsets = 4;
  } else {
    c.train = train::protocol_train_config();
    c.model.encoder =
        task == Task::covid ? nn::EncoderKind::resnet18 : nn::EncoderKind::mobilenetv3_small;
    c.n_subsets = 20;
    c.eval_mode = task == Task::covid ? EvalMode::kfold : EvalMode::label_efficiency;
  }
  if (task == Task::covid) c.metric = "accuracy";
  return c;
}

// Rejects keys of `user` absent from `schema`, with a dotted path.
void check_keys(const json& user, const json& schema, const std::string& where) {
  if (!user.is_object()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    require(schema.contains(it.key()), ErrorKind::invalid_argument,
            "unknown config key '" + path + "'");
    if (schema[it.key()].is_object()) {
      require(it.value().is_object(), ErrorKind::invalid_argument,
              "config key '" + path + "' must be an object");
      check_keys(it.value(), schema[it.key()], path);
    }
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::invalid_argument, "config key '" + where + "." + key + "' has the wrong type");
  }
}

train::ExampleOptions parse_examples(const json& j, const std::string& where) {
  train::ExampleOptions e;
  e.per_video = get<int>(j, "per_video", where);
  require(e.per_video >= 0, ErrorKind::invalid_argument, where + ".per_video must be >= 0");
  return e;
}

train::Unfreeze parse_unfreeze(const std::string& s) {
  if (s == "all") return train::Unfreeze::everything();
  if (s.rfind("last_", 0) == 0) {
    try {
      const int k = std::stoi(s.substr(5));
      require(k >= 1, ErrorKind::invalid_argument, "unfreeze last_k needs k >= 1");
      return train::Unfreeze::last(k);
    } catch (const std::logic_error&) {
    }
  }
  fail(ErrorKind::invalid_argument, "unfreeze must be 'all' or 'last_<k>', got '" + s + "'");
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c = profile_defaults(parse_profile(get<std::string>(j, "profile", "")),
                                        parse_task(get<std::string>(j, "task", "")));
  c.seed = get<std::uint64_t>(j, "seed", "");
  c.out = get<std::string>(j, "out", "");

  const json& d = j["data"];
  c.data.manifest = get<std::string>(d, "manifest", "data");
  c.data.rois = get<std::string>(d, "rois", "data");
  const json& s = d["synthetic"];
  auto& sc = c.data.synthetic;
  sc.n_patients = get<int>(s, "n_patients", "data.synthetic");
  sc.videos_per_patient = get<int>(s, "videos_per_patient", "data.synthetic");
  sc.frames_per_video = get<int>(s, "frames_per_video", "data.synthetic");
  sc.fps = get<double>(s, "fps", "data.synthetic");
  sc.frame_height = get<int>(s, "frame_height", "data.synthetic");
  sc.frame_width = get<int>(s, "frame_width", "data.synthetic");
  sc.artifact_dwell = get<int>(s, "artifact_dwell", "data.synthetic");
  sc.noise_level = get<double>(s, "noise_level", "data.synthetic");
  sc.unlabelled_fraction = get<double>(s, "unlabelled_fraction", "data.synthetic");
  sc.seed = get<std::uint64_t>(s, "seed", "data.synthetic");
  data::validate(sc);
  const json& sp = d["splits"];
  c.data.fractions = {get<double>(sp, "train", "data.splits"),
                      get<double>(sp, "validation", "data.splits"),
                      get<double>(sp, "test", "data.splits")};

  const json& iv = j["ivpp"];
  const std::string unit = get<std::string>(iv, "grid_unit", "ivpp");
  require(unit == "seconds" || unit == "pixels", ErrorKind::invalid_argument,
          "ivpp.grid_unit must be 'seconds' or 'pixels'");
  require(unit == grid_unit(c.task), ErrorKind::invalid_argument,
          std::string("grid/task mismatch: a ") + (unit == "seconds" ? "delta_t" : "delta_x") +
              " grid cannot drive the " + (uses_mmode(c.task) ? "M-mode" : "B-mode") + " task " +
              task_name(c.task));
  c.ivpp.delta_t = get<double>(iv, "delta_t", "ivpp");
  c.ivpp.delta_x = get<int>(iv, "delta_x", "ivpp");
  require(uses_mmode(c.task) ? c.ivpp.delta_t == 0.0 : c.ivpp.delta_x == 0,
          ErrorKind::invalid_argument,
          std::string("grid/task mismatch: ") + (uses_mmode(c.task) ? "delta_t" : "delta_x") +
              " is set for the " + (uses_mmode(c.task) ? "M-mode" : "B-mode") + " task " +
              task_name(c.task));
  c.ivpp.use_sample_weights = get<bool>(iv, "use_sample_weights", "ivpp");
  c.ivpp.shared_segment = get<bool>(iv, "shared_segment", "ivpp");
  c.ivpp.segment_seconds = get<double>(iv, "segment_seconds", "ivpp");
  sampler::validate(c.ivpp);
  c.delta_grid = get<std::vector<double>>(iv, "delta_grid", "ivpp");
  require(!c.delta_grid.empty(), ErrorKind::invalid_argument, "ivpp.delta_grid is empty");
  for (double v : c.delta_grid) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::invalid_argument,
            "ivpp.delta_grid values must be nonnegative");
    if (uses_mmode(c.task)) {
      require(v == std::floor(v), ErrorKind::invalid_argument,
              "ivpp.delta_grid values are whole pixels for M-mode tasks");
    }
  }
  require(std::set<double>(c.delta_grid.begin(), c.delta_grid.end()).size() == c.delta_grid.size(),
          ErrorKind::invalid_argument, "ivpp.delta_grid has duplicates");
  c.weight_flags = get<std::vector<bool>>(iv, "sample_weight_flags", "ivpp");
  require(!c.weight_flags.empty(), ErrorKind::invalid_argument,
          "ivpp.sample_weight_flags is empty");

  const json& o = j["objective"];
  c.objective.method = objectives::parse_method(get<std::string>(o, "method", "objective"));
  c.methods.clear();
  for (const auto& m : get<std::vector<std::string>>(o, "methods", "objective")) {
    c.methods.push_back(objectives::parse_method(m));
  }
  require(!c.methods.empty(), ErrorKind::invalid_argument, "objective.methods is empty");
  c.objective.temperature = get<double>(o, "temperature", "objective");
  c.objective.vicreg_lambda = get<double>(o, "vicreg_lambda", "objective");
  c.objective.vicreg_mu = get<double>(o, "vicreg_mu", "objective");
  c.objective.vicreg_nu = get<double>(o, "vicreg_nu", "objective");
  c.objective.vicreg_invariance_per_dim = get<bool>(o, "vicreg_invariance_per_dim", "objective");
  c.objective.variance_target = get<double>(o, "variance_target", "objective");
  c.objective.eps = get<double>(o, "eps", "objective");
  c.objective.barlow_lambda = get<double>(o, "barlow_lambda", "objective");
  objectives::validate(c.objective);

  const json& m = j["model"];
  c.model.encoder = nn::parse_encoder(get<std::string>(m, "encoder", "model"));
  c.model.representation_dim = get<int>(m, "representation_dim", "model");
  c.model.projector_widths = get<std::vector<int>>(m, "projector_widths", "model");
  c.model.init_weights = get<std::string>(m, "init_weights", "model");
  c.model.seed = c.seed;
  train::validate(c.model);

  const json& t = j["train"];
  c.train.epochs = get<int>(t, "epochs", "train");
  c.train.batch_size = get<int>(t, "batch_size", "train");
  c.train.base_lr = get<double>(t, "base_lr", "train");
  c.train.warmup_epochs = get<int>(t, "warmup_epochs", "train");
  c.train.lars.weight_decay = get<double>(t["lars"], "weight_decay", "train.lars");
  c.train.lars.momentum = get<double>(t["lars"], "momentum", "train.lars");
  c.train.lars.trust_coefficient = get<double>(t["lars"], "trust_coefficient", "train.lars");
  c.train.seed = c.seed;
  train::validate(c.train);

  const json& e = j["eval"];
  c.eval_mode = parse_eval_mode(get<std::string>(e, "mode", "eval"));
  c.checkpoint = get<std::string>(e, "checkpoint", "eval");
  c.folds = get<int>(e, "folds", "eval");
  c.n_subsets = get<int>(e, "n_subsets", "eval");
  require(c.folds >= 2, ErrorKind::invalid_argument, "eval.folds must be >= 2");
  require(c.n_subsets >= 1, ErrorKind::invalid_argument, "eval.n_subsets must be >= 1");
  const json& p = e["probe"];
  c.probe.epochs = get<int>(p, "epochs", "eval.probe");
  c.probe.batch_size = get<int>(p, "batch_size", "eval.probe");
  c.probe.lr = get<double>(p, "lr", "eval.probe");
  c.probe.weight_decay = get<double>(p, "weight_decay", "eval.probe");
  c.probe.keep_final = get<bool>(p, "keep_final", "eval.probe");
  c.probe.examples = parse_examples(p["examples"], "eval.probe.examples");
  c.probe.seed = c.seed;
  const json& f = e["finetune"];
  c.finetune.epochs = get<int>(f, "epochs", "eval.finetune");
  c.finetune.batch_size = get<int>(f, "batch_size", "eval.finetune");
  c.finetune.lr = get<double>(f, "lr", "eval.finetune");
  c.finetune.encoder_lr = get<double>(f, "encoder_lr", "eval.finetune");
  c.finetune.unfreeze = parse_unfreeze(get<std::string>(f, "unfreeze", "eval.finetune"));
  c.finetune.keep_final = get<bool>(f, "keep_final", "eval.finetune");
  c.finetune.examples = parse_examples(f["examples"], "eval.finetune.examples");
  c.finetune.seed = c.seed;
  for (int v : {c.probe.epochs, c.probe.batch_size, c.finetune.epochs, c.finetune.batch_size}) {
    require(v >= 1, ErrorKind::invalid_argument, "evaluation epochs and batch sizes must be >= 1");
  }

  const json& st = j["stats"];
  c.results = get<std::string>(st, "results", "stats");
  c.metric = get<std::string>(st, "metric", "stats");
  c.alpha = get<double>(st, "alpha", "stats");
  require(c.alpha > 0.0 && c.alpha < 1.0, ErrorKind::invalid_argument,
          "stats.alpha must lie in (0, 1)");
  return c;
}

std::string condition_slug(const evalstats::Condition& c) {
  return c.method + "_delta" + evalstats::format_delta(c.delta) + (c.sample_weights ? "_sw" : "");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
}

void require_file(const std::string& path, const std::string& what) {
  require(!path.empty(), ErrorKind::precondition, what + " is not set");
  require(fs::exists(path), ErrorKind::io, "missing " + what + ": " + path);
}

}  // namespace

json default_config_json(Profile profile, Task task) {
  return config_json(profile_defaults(profile, task));
}

ExperimentConfig resolve_config(const json& user, std::optional<Profile> profile,
                                std::optional<std::uint64_t> seed,
                                std::optional<fs::path> out) {
  require(user.is_object(), ErrorKind::invalid_argument, "config must be a JSON object");
  Profile p = Profile::desk;
  if (profile) {
    p = *profile;
  } else if (user.contains("profile")) {
    require(user["profile"].is_string(), ErrorKind::invalid_argument, "profile must be a string");
    p = parse_profile(user["profile"].get<std::string>());
  }
  Task task = Task::ab;
  if (user.contains("task")) {
    require(user["task"].is_string(), ErrorKind::invalid_argument, "task must be a string");
    task = parse_task(user["task"].get<std::string>());
  }
  // Snapshot metadata is informational, so a snapshot resolves as a config.
  json clean = user;
  clean.erase("command");
  clean.erase("condition");
  if (clean.contains("train") && clean["train"].is_object()) clean["train"].erase("effective_lr");
  json merged = default_config_json(p, task);
  check_keys(clean, merged, "");
  merged.merge_patch(clean);
  merged["profile"] = profile_name(p);
  if (seed) merged["seed"] = *seed;
  if (out) merged["out"] = out->string();
  return parse_config(merged);
}

json to_json(const ExperimentConfig& config) { return config_json(config); }

void write_snapshot(const ExperimentConfig& config, const fs::path& dir,
                    const std::string& command) {
  json j = to_json(config);
  j["command"] = command;
  write_text(dir / "config_snapshot.json", j.dump(2) + "\n");
}

std::vector<evalstats::Condition> enumerate_conditions(const ExperimentConfig& config) {
  std::vector<evalstats::Condition> out;
  for (auto m : config.methods) {
    for (double d : config.delta_grid) {
      for (bool sw : config.weight_flags) {
        evalstats::Condition c{objectives::method_name(m), d, sw};
        if (d == 0.0 && sw) {
          // Weights are all 1 at delta 0; keep the cell only when the
          // weights-off twin is not in the grid.
          if (std::find(config.weight_flags.begin(), config.weight_flags.end(), false) !=
              config.weight_flags.end()) {
            continue;
          }
          c.sample_weights = false;
        }
        out.push_back(c);
      }
    }
  }
  return out;
}

sampler::IvppConfig condition_ivpp(const ExperimentConfig& config,
                                   const evalstats::Condition& condition) {
  sampler::IvppConfig iv = config.ivpp;
  iv.use_sample_weights = condition.sample_weights;
  if (uses_mmode(config.task)) {
    iv.delta_t = 0.0;
    iv.delta_x = int(condition.delta);
  } else {
    iv.delta_t = condition.delta;
    iv.delta_x = 0;
  }
  return iv;
}

LoadedData load_data(const ExperimentConfig& config) {
  LoadedData d;
  if (!config.data.manifest.empty()) {
    require_file(config.data.manifest, "manifest");
    d.manifest = data::load_manifest(config.data.manifest);
    if (!config.data.rois.empty()) {
      require_file(config.data.rois, "ROI table");
      d.rois = mmode::load_roi_csv(config.data.rois);
    }
  } else {
    auto ds = data::generate_synthetic_dataset(config.data.synthetic);
    d.manifest = std::move(ds.manifest);
    d.rois = std::move(ds.rois);
  }
  require(!uses_mmode(config.task) || d.rois.has_value(), ErrorKind::precondition,
          std::string("task ") + task_name(config.task) + " needs a pleural-line ROI table");
  d.splits = data::split_by_patient(d.manifest, config.data.fractions, config.seed);
  return d;
}

void cmd_synth(const ExperimentConfig& config) {
  const auto ds = data::generate_synthetic_dataset(config.data.synthetic);
  fs::create_directories(config.out);
  data::DatasetManifest manifest = ds.manifest;
  for (auto& r : manifest.records) {
    r.frames_dir = "frames/" + r.video_id;
    data::write_frames(r, config.out / r.frames_dir);
  }
  data::save_manifest(manifest, config.out / "manifest.json");
  mmode::save_roi_csv(ds.rois, config.out / "rois.csv");
  write_snapshot(config, config.out, "synth");

  const auto splits = data::split_by_patient(manifest, config.data.fractions, config.seed);
  std::cout << "videos " << manifest.records.size() << ", patients "
            << manifest.patients().size();
  for (auto s : {data::Split::train, data::Split::validation, data::Split::test,
                 data::Split::unlabelled}) {
    std::cout << ", " << data::split_name(s) << ' ' << splits.patients(s).size();
  }
  std::cout << "\nwrote " << (config.out / "manifest.json").string() << '\n';
}

namespace {

train::PretrainResult run_pretrain(const ExperimentConfig& config, const LoadedData& d,
                                   const evalstats::Condition& condition, const fs::path& dir) {
  auto model = train::build_model(config.model);
  auto objective = config.objective;
  objective.method = objectives::parse_method(condition.method);
  const auto iv = condition_ivpp(config, condition);
  // The run's snapshot carries the condition in the single-run fields, so
  // `pretrain --config <dir>/config_snapshot.json` repeats this cell.
  auto single = config;
  single.out = dir;
  single.objective.method = objective.method;
  single.ivpp = iv;
  json snapshot = to_json(single);
  snapshot["condition"] = {{"method", condition.method},
                           {"delta", condition.delta},
                           {"sample_weights", condition.sample_weights}};
  fs::create_directories(dir);
  json file = snapshot;
  file["command"] = "pretrain";
  write_text(dir / "config_snapshot.json", file.dump(2) + "\n");
  fs::remove(dir / "loss_log.csv");
  train::PretrainOutputs outputs;
  outputs.loss_log = dir / "loss_log.csv";
  outputs.checkpoint = dir / "checkpoint.ivpp";
  outputs.config_snapshot = snapshot;
  outputs.on_epoch = [&](const train::EpochLog& e) {
    std::cout << evalstats::condition_label(condition) << " epoch " << e.epoch << "/"
              << config.train.epochs << " loss " << e.loss << std::endl;
  };
  train::PretrainData pd{&d.manifest, &d.splits, config.task, d.rois};
  return train::pretrain(model, pd, iv, objective, config.train,
                         augment::default_policy(config.task), outputs);
}

train::ProbeConfig probe_config(const ExperimentConfig& config, const LoadedData& d) {
  auto p = config.probe;
  if (d.rois) p.examples.rois = &*d.rois;
  return p;
}

train::FineTuneConfig finetune_config(const ExperimentConfig& config, const LoadedData& d) {
  auto f = config.finetune;
  if (d.rois) f.examples.rois = &*d.rois;
  return f;
}

double metric_of(const train::Metrics& m, const std::string& metric) {
  if (metric == "auc") return m.auc;
  if (metric == "accuracy") return m.accuracy;
  fail(ErrorKind::invalid_argument, "unknown metric '" + metric + "' (expected auc or accuracy)");
}

// Evaluates the weights in `weights` under the configured mode. Rows carry
// the given condition; subset 0 unless the mode is label_efficiency.
evalstats::ExperimentResult evaluate(const ExperimentConfig& config, const LoadedData& d,
                                     const std::string& weights,
                                     const evalstats::Condition& condition,
                                     train::Metrics* summary) {
  metric_of({}, config.metric);
  auto spec = config.model;
  spec.init_weights = weights;
  evalstats::ExperimentResult result;
  auto add = [&](int subset, const std::string& metric, double value) {
    result.add({condition.method, condition.delta, condition.sample_weights, subset, metric, value});
  };
  switch (config.eval_mode) {
    case EvalMode::linear:
    case EvalMode::finetune: {
      auto model = train::build_model(spec);
      const auto split = train::labeled_split(d.manifest, d.splits, config.task);
      const auto m = config.eval_mode == EvalMode::linear
                         ? train::linear_eval(model, split, config.task, probe_config(config, d))
                         : train::fine_tune(model, split, config.task, finetune_config(config, d));
      add(0, "auc", m.auc);
      add(0, "accuracy", m.accuracy);
      if (summary) *summary = m;
      break;
    }
    case EvalMode::kfold: {
      auto ft = finetune_config(config, d);
      const auto s =
          evalstats::kfold_cv_pocus(d.manifest, config.task, spec, ft, config.folds, config.seed);
      add(0, "accuracy", s.mean);
      add(0, "accuracy_std", s.std);
      if (summary) summary->accuracy = s.mean;
      break;
    }
    case EvalMode::label_efficiency: {
      auto ft = finetune_config(config, d);
      ft.keep_final = true;
      auto runner = [&](const evalstats::Condition&, const train::LabeledSplit& split, int) {
        auto model = train::build_model(spec);
        return metric_of(train::fine_tune(model, split, config.task, ft), config.metric);
      };
      result = evalstats::label_efficiency(d.manifest, d.splits, config.task, {condition},
                                           config.n_subsets, config.seed, runner, config.metric);
      break;
    }
  }
  return result;
}

}  // namespace

void cmd_pretrain(const ExperimentConfig& config) {
  const auto d = load_data(config);
  const double delta = uses_mmode(config.task) ? double(config.ivpp.delta_x) : config.ivpp.delta_t;
  const evalstats::Condition c{objectives::method_name(config.objective.method), delta,
                               config.ivpp.use_sample_weights};
  const auto r = run_pretrain(config, d, c, config.out);
  std::cout << "final loss " << r.epochs.back().loss << ", checkpoint "
            << (config.out / "checkpoint.ivpp").string() << '\n';
}

train::Metrics cmd_eval(const ExperimentConfig& config) {
  require_file(config.checkpoint, "checkpoint (eval.checkpoint)");
  const auto d = load_data(config);
  write_snapshot(config, config.out, "eval");
  const evalstats::Condition c{"eval", 0.0, false};
  train::Metrics m;
  const auto result = evaluate(config, d, config.checkpoint, c, &m);
  json j = json::object();
  for (const auto& r : result.rows()) {
    j[r.metric + (result.rows().size() > 2 ? "_subset" + std::to_string(r.subset) : "")] = r.value;
  }
  write_text(config.out / "metrics.json", j.dump(2) + "\n");
  std::cout << j.dump() << '\n';
  return m;
}

evalstats::ExperimentResult cmd_sweep(const ExperimentConfig& config, bool dry_run) {
  const auto conditions = enumerate_conditions(config);
  fs::create_directories(config.out);
  write_snapshot(config, config.out, dry_run ? "sweep --dry-run" : "sweep");
  json plan = json::array();
  for (const auto& c : conditions) {
    plan.push_back({{"method", c.method}, {"delta", c.delta}, {"sample_weights", c.sample_weights},
                    {"dir", "runs/" + condition_slug(c)}});
  }
  write_text(config.out / "conditions.json", plan.dump(2) + "\n");
  std::cout << conditions.size() << " runs\n";
  evalstats::ExperimentResult all;
  if (dry_run) return all;

  const auto d = load_data(config);
  for (const auto& c : conditions) {
    const fs::path dir = config.out / "runs" / condition_slug(c);
    write_snapshot(config, dir, "sweep " + evalstats::condition_label(c));
    run_pretrain(config, d, c, dir);
    const auto rows = evaluate(config, d, (dir / "checkpoint.ivpp").string(), c, nullptr);
    for (const auto& r : rows.rows()) all.add(r);
    save_result_csv(all, config.out / "results.csv");
  }
  return all;
}

std::vector<evalstats::StatReport> cmd_stats(const ExperimentConfig& config) {
  require_file(config.results, "results CSV (stats.results)");
  const auto result = evalstats::load_result_csv(config.results);
  require(!result.empty(), ErrorKind::precondition, "no rows in " + config.results);
  std::vector<evalstats::StatReport> reports;
  json j = json::array();
  std::string text;
  for (const auto& m : result.methods()) {
    reports.push_back(evalstats::analyze(result, m, config.metric, config.alpha));
    j.push_back(evalstats::to_json(reports.back()));
    text += evalstats::to_text(reports.back()) + "\n";
  }
  fs::create_directories(config.out);
  write_snapshot(config, config.out, "stats");
  write_text(config.out / "stats.json", j.dump(2) + "\n");
  write_text(config.out / "stats.txt", text);
  std::cout << text;
  return reports;
}

std::string cmd_report(const ExperimentConfig& config) {
  require_file(config.results, "results CSV (stats.results)");
  const auto result = evalstats::load_result_csv(config.results);
  require(!result.empty(), ErrorKind::precondition, "no rows in " + config.results);
  const std::string table = evalstats::render_table(result, config.metric);
  fs::create_directories(config.out);
  write_snapshot(config, config.out, "report");
  write_text(config.out / "report.md", table);
  std::cout << table;
  return table;
}

}  // namespace ivpp::cli
