#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivpp/datamodel.hpp"
#include "ivpp/metrics.hpp"
#include "ivpp/train.hpp"

namespace ivpp::evalstats {

// ------------------------------------------------------------- results

struct Condition {
  std::string method;
  double delta = 0.0;
  bool sample_weights = false;

  friend bool operator==(const Condition&, const Condition&) = default;
};

std::string condition_label(const Condition& c);
// Shortest round-trip text for a delta value ("0", "0.5", "15").
std::string format_delta(double delta);

struct ResultRow {
  std::string method;
  double delta = 0.0;
  bool sample_weights = false;
  int subset = 0;
  std::string metric;
  double value = 0.0;
};

// Rows keyed by (method, delta, sample_weights, subset, metric), values finite.
class ExperimentResult {
 public:
  void add(ResultRow row);
  const std::vector<ResultRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  std::optional<double> find(const Condition& c, int subset, const std::string& metric) const;
  // Same lookup, but the (delta = 0, weights on) cell falls back to
  // (delta = 0, weights off): sample weights are all 1 when delta is 0.
  std::optional<double> find_aliased(const Condition& c, int subset,
                                     const std::string& metric) const;

  std::vector<std::string> methods() const;
  std::vector<double> deltas(const std::string& method) const;
  std::vector<int> subsets(const std::string& method) const;

 private:
  std::vector<ResultRow> rows_;
};

// CSV with header `method,delta,sw,subset,metric,value`.
void save_result_csv(const ExperimentResult& result, const std::filesystem::path& path);
ExperimentResult load_result_csv(const std::filesystem::path& path);

// ------------------------------------------------------ cross-validation

struct FoldSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across folds
  std::vector<double> folds;
};

// Across-fold averaging of per-fold accuracies (not pooled predictions).
FoldSummary summarize_folds(std::span<const double> fold_accuracies);

// Patient-grouped folds, stratified by each patient's majority label.
// Raises when a class has fewer patients than folds.
std::vector<std::vector<std::string>> patient_folds(const data::DatasetManifest& manifest,
                                                    Task task, int k, std::uint64_t seed);

using FoldRunner = std::function<train::Metrics(const train::LabeledSplit& split, int fold)>;

// Runs `runner` once per fold with that fold as the test set and the rest as
// training data (no validation split), and summarizes fold accuracy.
FoldSummary kfold_cv(const data::DatasetManifest& manifest, Task task, int k, std::uint64_t seed,
                     const FoldRunner& runner);

// The POCUS protocol: for each fold a fresh model from `model` (pretrained
// weights included), fine-tuned with the last three encoder blocks
// unfrozen and final weights kept.
FoldSummary kfold_cv_pocus(const data::DatasetManifest& manifest, Task task,
                           const train::ModelSpec& model, train::FineTuneConfig finetune,
                           int k = 5, std::uint64_t seed = 0);

// --------------------------------------------------------- label efficiency

// Disjoint groups covering all patients, round-robin over a seeded shuffle
// of the sorted ids.
std::vector<std::vector<std::string>> partition_patients(std::vector<std::string> patients,
                                                         int n_subsets, std::uint64_t seed);

using SubsetRunner = std::function<double(const Condition& condition,
                                          const train::LabeledSplit& split, int subset)>;

// For every condition and subset, calls `runner` with the subset's training
// videos (validation and test splits unchanged) and records the returned
// value under `metric`. Subsets are identical across conditions.
ExperimentResult label_efficiency(const data::DatasetManifest& manifest,
                                  const data::SplitAssignment& splits, Task task,
                                  const std::vector<Condition>& conditions, int n_subsets,
                                  std::uint64_t seed, const SubsetRunner& runner,
                                  const std::string& metric = "auc");

// ------------------------------------------------------------ statistics

struct Effect {
  std::string name;
  double ss = 0.0;
  double df = 0.0;
  double ss_error = 0.0;
  double df_error = 0.0;
  double f = 0.0;
  double p = 1.0;
};

struct AnovaTable {
  Effect delta;
  Effect weights;
  Effect interaction;
  std::size_t subjects = 0;
  std::vector<double> delta_levels;
};

// Two-way within-subjects ANOVA by direct sums of squares, without
// sphericity correction. y[s][i][j]: subject s, level i of the first
// factor, level j of the second. Every cell must be present.
AnovaTable rm_anova_two_way(const std::vector<std::vector<std::vector<double>>>& y);

// Factors delta and sample weights for one method and metric; the
// (delta = 0, weights on) cell is aliased as in find_aliased.
AnovaTable rm_anova_two_way(const ExperimentResult& result, const std::string& method,
                            const std::string& metric);

struct PairedTest {
  std::string label;
  std::size_t n = 0;
  double mean_difference = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool zero_variance = false;  // constant nonzero differences: p reported as 0
  double threshold = 0.05;     // alpha / family size
  bool significant_raw = false;
  bool significant = false;  // Bonferroni decision
};

// Two-sided paired t-test of a - b.
PairedTest paired_t_test(std::span<const double> a, std::span<const double> b);

// Bonferroni over a family: significant iff p < alpha / m.
void apply_bonferroni(std::vector<PairedTest>& family, double alpha);

struct Comparison {
  Condition a;
  Condition b;
};

struct Family {
  std::string name;
  std::vector<Comparison> comparisons;
};

// Nonzero delta against delta = 0 (at matching weight flag), and weights on
// against off at each nonzero delta.
std::vector<Family> standard_families(const std::string& method, const std::vector<double>& deltas);

std::vector<PairedTest> posthoc_paired_tests(const ExperimentResult& result, const Family& family,
                                             const std::string& metric, double alpha = 0.05);

struct FamilyReport {
  std::string name;
  std::vector<PairedTest> tests;
};

struct StatReport {
  std::string method;
  std::string metric;
  double alpha = 0.05;
  AnovaTable anova;
  bool anova_gate = false;  // any ANOVA effect with p < alpha
  std::vector<FamilyReport> families;
};

StatReport analyze(const ExperimentResult& result, const std::string& method,
                   const std::string& metric, double alpha = 0.05);

nlohmann::json to_json(const StatReport& report);
std::string to_text(const StatReport& report);

// Mean (std) per method and condition, columns ordered by delta then flag.
std::string render_table(const ExperimentResult& result, const std::string& metric);

}  // namespace ivpp::evalstats
