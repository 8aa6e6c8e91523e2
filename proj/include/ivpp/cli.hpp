#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivpp/evalstats.hpp"
#include "ivpp/objectives.hpp"
#include "ivpp/sampler.hpp"
#include "ivpp/synthetic.hpp"
#include "ivpp/train.hpp"

namespace ivpp::cli {

using nlohmann::json;

enum class Profile { desk, protocol };
enum class EvalMode { linear, finetune, kfold, label_efficiency };

Profile parse_profile(const std::string& name);
const char* profile_name(Profile profile);
EvalMode parse_eval_mode(const std::string& name);
const char* eval_mode_name(EvalMode mode);

struct DataSource {
  // A manifest path takes precedence; otherwise the synthetic generator runs
  // in memory with `synthetic`.
  std::string manifest;
  std::string rois;  // pleural-line CSV, needed for M-mode tasks on disk data
  data::SyntheticConfig synthetic;
  data::SplitFractions fractions;
};

struct ExperimentConfig {
  Profile profile = Profile::desk;
  std::uint64_t seed = 0;
  std::filesystem::path out = "runs";
  DataSource data;
  Task task = Task::ab;

  // Single-run pair settings (pretrain) and the sweep grid. Grid values are
  // seconds for B-mode tasks and pixels for M-mode tasks.
  sampler::IvppConfig ivpp;
  std::vector<double> delta_grid;
  std::vector<bool> weight_flags{false, true};

  objectives::ObjectiveConfig objective;
  std::vector<objectives::Method> methods;
  train::ModelSpec model;
  train::TrainConfig train;

  EvalMode eval_mode = EvalMode::linear;
  std::string checkpoint;  // eval input
  train::ProbeConfig probe;
  train::FineTuneConfig finetune;
  int folds = 5;
  int n_subsets = 20;

  std::string results;  // stats/report input CSV
  std::string metric = "auc";
  double alpha = 0.05;
};

// Every field with its profile default, as the snapshot schema.
json default_config_json(Profile profile, Task task);

// Merges `user` over the profile defaults and parses the result. Unknown
// keys, a grid whose unit does not match the task and out-of-range values
// are errors. Overrides win over both.
ExperimentConfig resolve_config(const json& user, std::optional<Profile> profile = std::nullopt,
                                std::optional<std::uint64_t> seed = std::nullopt,
                                std::optional<std::filesystem::path> out = std::nullopt);

json to_json(const ExperimentConfig& config);

// Writes config_snapshot.json into `dir`.
void write_snapshot(const ExperimentConfig& config, const std::filesystem::path& dir,
                    const std::string& command);

// The (method, delta, weights) grid; the weights-on cell at delta 0 is
// omitted because it aliases the weights-off cell.
std::vector<evalstats::Condition> enumerate_conditions(const ExperimentConfig& config);

// Pair config for one condition, with delta converted to the task's unit.
sampler::IvppConfig condition_ivpp(const ExperimentConfig& config,
                                   const evalstats::Condition& condition);

struct LoadedData {
  data::DatasetManifest manifest;
  std::optional<mmode::RoiTable> rois;
  data::SplitAssignment splits;
};

LoadedData load_data(const ExperimentConfig& config);

// Commands. Each writes its outputs and a config snapshot under config.out.
void cmd_synth(const ExperimentConfig& config);
void cmd_pretrain(const ExperimentConfig& config);
train::Metrics cmd_eval(const ExperimentConfig& config);
evalstats::ExperimentResult cmd_sweep(const ExperimentConfig& config, bool dry_run = false);
std::vector<evalstats::StatReport> cmd_stats(const ExperimentConfig& config);
std::string cmd_report(const ExperimentConfig& config);

}  // namespace ivpp::cli
