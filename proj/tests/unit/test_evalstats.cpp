#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "ivpp/error.hpp"
#include "ivpp/evalstats.hpp"
#include "ivpp/metrics.hpp"
#include "ivpp/synthetic.hpp"
#include "oracles.hpp"

using namespace ivpp;
using namespace ivpp::evalstats;
namespace fs = std::filesystem;

namespace {

using Cube = std::vector<std::vector<std::vector<double>>>;

// Reference values from an independent repeated-measures ANOVA and paired
// t-test implementation, computed once and pinned here.
const Cube kSmall = {{{0.81, 0.83}, {0.78, 0.84}},
                     {{0.75, 0.79}, {0.74, 0.80}},
                     {{0.88, 0.86}, {0.85, 0.90}}};

const Cube kSixByFour = {
    {{0.902, 0.6722}, {0.8209, 0.7716}, {0.7774, 0.7892}, {0.699, 0.7884}},
    {{0.7567, 0.9661}, {0.8113, 0.7824}, {0.7859, 0.7666}, {0.7472, 0.7805}},
    {{0.8241, 0.7881}, {0.8479, 0.79}, {0.8012, 0.8773}, {0.8273, 0.7747}},
    {{0.7909, 0.827}, {0.8968, 0.7865}, {0.7878, 0.8501}, {0.7557, 0.7854}},
    {{0.8441, 0.829}, {0.8046, 0.8335}, {0.6586, 0.8511}, {0.752, 0.7166}},
    {{0.8138, 0.835}, {0.7778, 0.7462}, {0.8013, 0.7974}, {0.8703, 0.8374}}};

data::VideoRecord video(const std::string& id, const std::string& patient,
                        std::map<std::string, int> labels) {
  data::VideoRecord r;
  r.video_id = id;
  r.patient_id = patient;
  r.fps = 10.0;
  r.frames = std::make_shared<data::InMemoryFrames>(std::vector<GrayImage>{GrayImage(4, 4, 7)});
  r.labels = std::move(labels);
  return r;
}

// Ten, five and five single-video patients of the three COVID classes.
data::DatasetManifest three_class_manifest() {
  data::DatasetManifest m;
  m.tasks["COVID"] = {"covid", "pneumonia", "regular"};
  int p = 0;
  for (auto [cls, count] : {std::pair{0, 10}, {1, 5}, {2, 5}}) {
    for (int i = 0; i < count; ++i, ++p) {
      const auto id = "P" + std::to_string(p);
      m.records.push_back(video(id + "_V0", id, {{"COVID", cls}}));
    }
  }
  return m;
}

ExperimentResult cube_result(const Cube& y, const std::vector<double>& deltas,
                             const std::string& method = "m", const std::string& metric = "auc") {
  ExperimentResult r;
  for (std::size_t s = 0; s < y.size(); ++s) {
    for (std::size_t i = 0; i < y[s].size(); ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        r.add({method, deltas[i], j == 1, int(s), metric, y[s][i][j]});
      }
    }
  }
  return r;
}

Cube random_cube(std::size_t n, std::size_t a, std::size_t b, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.8, 0.05);
  Cube y(n, std::vector<std::vector<double>>(a, std::vector<double>(b)));
  for (auto& s : y) {
    for (auto& row : s) {
      for (auto& v : row) v = g(rng);
    }
  }
  return y;
}

void expect_effect(const Effect& e, double f, double p, double df, double df_error) {
  EXPECT_NEAR(e.f, f, 1e-8 * std::max(1.0, f)) << e.name;
  EXPECT_NEAR(e.p, p, 1e-8) << e.name;
  EXPECT_EQ(e.df, df) << e.name;
  EXPECT_EQ(e.df_error, df_error) << e.name;
}

// t statistic of paired differences by the textbook formula.
double t_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += (a[i] - b[i]) / double(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += std::pow(a[i] - b[i] - mean, 2);
  return mean / std::sqrt(ss / double(n - 1) / double(n));
}

}  // namespace

// ---------------------------------------------------------------- AUC

TEST(Auc, Examples) {
  const std::vector<double> s = {0.9, 0.8, 0.3};
  const std::vector<int> y = {1, 0, 1};
  EXPECT_DOUBLE_EQ(metrics::auc(s, y), 0.5);
  const std::vector<double> sep = {0.1, 0.2, 0.7, 0.9};
  const std::vector<int> ys = {0, 0, 1, 1};
  EXPECT_EQ(metrics::auc(sep, ys), 1.0);
  const std::vector<double> same(4, 0.3);
  EXPECT_EQ(metrics::auc(same, ys), 0.5);
}

TEST(Auc, SingleClassIsAnError) {
  const std::vector<double> s = {0.1, 0.2};
  const std::vector<int> y = {1, 1};
  EXPECT_THROW(metrics::auc(s, y), Error);
}

TEST(Auc, MatchesAllPairsOracleExactly) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<double> s(n);
    std::vector<int> y(n);
    // Coarse scores so ties are common.
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = double(rng() % 20) / 20.0;
      y[i] = int(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_EQ(metrics::auc(s, y), oracle::auc_all_pairs(s, y)) << "n " << n;
  }
}

TEST(Accuracy, Fraction) {
  const std::vector<int> p = {0, 1, 2, 1};
  const std::vector<int> y = {0, 1, 1, 1};
  EXPECT_DOUBLE_EQ(metrics::accuracy(p, y), 0.75);
}

// ------------------------------------------------------ cross-validation

TEST(Folds, SummaryIsAcrossFoldMeanAndPopulationStd) {
  const std::vector<double> flat(5, 0.9);
  const auto a = summarize_folds(flat);
  EXPECT_DOUBLE_EQ(a.mean, 0.9);
  EXPECT_EQ(a.std, 0.0);
  const std::vector<double> acc = {1.0, 0.8, 0.9, 0.95, 0.85};
  const auto b = summarize_folds(acc);
  EXPECT_NEAR(b.mean, 0.90, 1e-12);
  EXPECT_NEAR(b.std, std::sqrt(0.025 / 5.0), 1e-12);
  EXPECT_NEAR(b.std, 0.0707, 1e-4);
}

TEST(Folds, PatientGroupedAndStratified) {
  const auto m = three_class_manifest();
  const auto folds = patient_folds(m, Task::covid, 5, 7);
  ASSERT_EQ(folds.size(), 5u);
  std::set<std::string> seen;
  for (const auto& f : folds) {
    int counts[3] = {0, 0, 0};
    for (const auto& p : f) {
      EXPECT_TRUE(seen.insert(p).second) << p;
      for (const auto& r : m.records) {
        if (r.patient_id == p) ++counts[*r.label("COVID")];
      }
    }
    EXPECT_EQ(counts[0], 2);
    EXPECT_EQ(counts[1], 1);
    EXPECT_EQ(counts[2], 1);
  }
  EXPECT_EQ(seen.size(), 20u);
  EXPECT_THROW(patient_folds(m, Task::covid, 6, 7), Error);
}

TEST(Folds, ConstantClassifierScoresTheMajorityShare) {
  const auto m = three_class_manifest();
  int calls = 0;
  const auto summary = kfold_cv(m, Task::covid, 5, 3, [&](const train::LabeledSplit& split, int) {
    ++calls;
    EXPECT_TRUE(split.validation.empty());
    EXPECT_EQ(split.train.size() + split.test.size(), 20u);
    std::set<std::string> train_patients;
    for (const auto* r : split.train) train_patients.insert(r->patient_id);
    for (const auto* r : split.test) EXPECT_FALSE(train_patients.count(r->patient_id));
    train::Metrics out;
    std::vector<int> pred, truth;
    for (const auto* r : split.test) {
      pred.push_back(0);
      truth.push_back(*r->label("COVID"));
    }
    out.accuracy = metrics::accuracy(pred, truth);
    return out;
  });
  EXPECT_EQ(calls, 5);
  EXPECT_DOUBLE_EQ(summary.mean, 0.5);
  EXPECT_EQ(summary.std, 0.0);
}

TEST(Folds, PocusProtocolRunsPerFold) {
  data::SyntheticConfig c;
  c.n_patients = 12;
  c.videos_per_patient = 1;
  c.frames_per_video = 6;
  c.frame_height = 32;
  c.frame_width = 32;
  c.unlabelled_fraction = 0.0;
  c.artifact_dwell = 6;
  const auto ds = data::generate_synthetic_dataset(c);
  train::ModelSpec spec;
  spec.representation_dim = 8;
  spec.projector_widths = {16};
  train::FineTuneConfig ft;
  ft.epochs = 1;
  ft.examples.per_video = 2;
  const auto s = kfold_cv_pocus(ds.manifest, Task::ab, spec, ft, 2, 1);
  ASSERT_EQ(s.folds.size(), 2u);
  for (double a : s.folds) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

// ------------------------------------------------------ label efficiency

TEST(Subsets, TwentyPatientsTwentySubsets) {
  std::vector<std::string> patients;
  for (int i = 0; i < 20; ++i) patients.push_back("P" + std::to_string(i));
  const auto groups = partition_patients(patients, 20, 4);
  std::set<std::string> all;
  for (const auto& g : groups) {
    ASSERT_EQ(g.size(), 1u);
    all.insert(g[0]);
  }
  EXPECT_EQ(all.size(), 20u);
  EXPECT_THROW(partition_patients(patients, 21, 4), Error);
}

TEST(Subsets, DisjointCoveringAndOrderIndependent) {
  std::vector<std::string> patients;
  for (int i = 0; i < 23; ++i) patients.push_back("P" + std::to_string(i));
  auto reversed = patients;
  std::reverse(reversed.begin(), reversed.end());
  const auto a = partition_patients(patients, 4, 9);
  EXPECT_EQ(a, partition_patients(reversed, 4, 9));
  std::multiset<std::string> all;
  for (const auto& g : a) {
    EXPECT_GE(g.size(), 5u);
    EXPECT_LE(g.size(), 6u);
    all.insert(g.begin(), g.end());
  }
  EXPECT_EQ(all.size(), 23u);
  EXPECT_EQ(std::set<std::string>(all.begin(), all.end()).size(), 23u);
}

TEST(Subsets, EveryCellFilledOnceAndPaired) {
  data::SyntheticConfig c;
  c.n_patients = 20;
  c.videos_per_patient = 1;
  c.frames_per_video = 4;
  c.frame_height = 16;
  c.frame_width = 16;
  c.artifact_dwell = 4;
  c.unlabelled_fraction = 0.0;
  const auto ds = data::generate_synthetic_dataset(c);
  const auto splits = data::split_by_patient(ds.manifest, {}, 2);
  const std::vector<Condition> conditions = {{"simclr", 0.0, false}, {"simclr", 1.0, true}};
  std::map<std::pair<std::string, int>, std::set<std::string>> seen;
  const auto result = label_efficiency(
      ds.manifest, splits, Task::ab, conditions, 4, 5,
      [&](const Condition& cond, const train::LabeledSplit& split, int subset) {
        std::set<std::string> patients;
        for (const auto* r : split.train) patients.insert(r->patient_id);
        seen[std::make_pair(condition_label(cond), subset)] = patients;
        EXPECT_FALSE(split.test.empty());
        return 0.5 + 0.01 * subset;
      });
  EXPECT_EQ(result.rows().size(), 8u);
  for (const auto& cond : conditions) {
    for (int s = 0; s < 4; ++s) {
      ASSERT_TRUE(result.find(cond, s, "auc").has_value());
      EXPECT_EQ(*result.find(cond, s, "auc"), 0.5 + 0.01 * s);
    }
  }
  for (int s = 0; s < 4; ++s) {
    const auto a = seen[std::make_pair(condition_label(conditions[0]), s)];
    const auto b = seen[std::make_pair(condition_label(conditions[1]), s)];
    EXPECT_EQ(a, b);
  }
}

// --------------------------------------------------------------- results

TEST(Results, UniqueFiniteRows) {
  ExperimentResult r;
  r.add({"simclr", 0.5, true, 0, "auc", 0.9});
  EXPECT_THROW(r.add({"simclr", 0.5, true, 0, "auc", 0.8}), Error);
  EXPECT_THROW(r.add({"simclr", 0.5, true, 1, "auc", std::nan("")}), Error);
  EXPECT_THROW(r.add({"simclr", 0.5, true, 1, "auc", INFINITY}), Error);
  EXPECT_NO_THROW(r.add({"simclr", 0.5, false, 0, "auc", 0.8}));
}

TEST(Results, AliasingOfTheZeroDeltaCell) {
  ExperimentResult r;
  r.add({"vicreg", 0.0, false, 0, "auc", 0.7});
  EXPECT_FALSE(r.find({"vicreg", 0.0, true}, 0, "auc"));
  EXPECT_EQ(*r.find_aliased({"vicreg", 0.0, true}, 0, "auc"), 0.7);
  EXPECT_FALSE(r.find_aliased({"vicreg", 1.0, true}, 0, "auc"));
}

TEST(Results, CsvRoundTrip) {
  const auto dir = fs::temp_directory_path() / "ivpp_results_csv";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::mt19937_64 rng(2);
  auto r = cube_result(random_cube(3, 4, 2, rng), {0.0, 0.5, 1.0, 1.5}, "barlow_twins");
  r.add({"simclr", 15.0, false, 2, "accuracy", 1.0 / 3.0});
  save_result_csv(r, dir / "results.csv");
  std::ifstream in(dir / "results.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "method,delta,sw,subset,metric,value");
  const auto back = load_result_csv(dir / "results.csv");
  ASSERT_EQ(back.rows().size(), r.rows().size());
  for (std::size_t i = 0; i < r.rows().size(); ++i) {
    const auto& a = r.rows()[i];
    const auto& b = back.rows()[i];
    EXPECT_EQ(a.method, b.method);
    EXPECT_EQ(a.delta, b.delta);
    EXPECT_EQ(a.sample_weights, b.sample_weights);
    EXPECT_EQ(a.subset, b.subset);
    EXPECT_EQ(a.metric, b.metric);
    EXPECT_EQ(a.value, b.value);
  }
  EXPECT_EQ(back.methods(), (std::vector<std::string>{"barlow_twins", "simclr"}));
  EXPECT_THROW(load_result_csv(dir / "missing.csv"), Error);
}

// ----------------------------------------------------------------- ANOVA

TEST(Anova, SmallFixtureMatchesReference) {
  const auto t = rm_anova_two_way(kSmall);
  EXPECT_EQ(t.subjects, 3u);
  expect_effect(t.delta, 0.1428571428571363, 0.74180111025284401, 1, 2);
  expect_effect(t.weights, 11.307692307692278, 0.07820230925709129, 1, 2);
  expect_effect(t.interaction, 8.8947368421052886, 0.096437539086009133, 1, 2);
}

TEST(Anova, FourLevelFixtureMatchesReference) {
  const auto t = rm_anova_two_way(kSixByFour);
  expect_effect(t.delta, 1.7453826088410282, 0.20070650676022489, 3, 15);
  expect_effect(t.weights, 0.061097595546349887, 0.81459817902555076, 1, 5);
  expect_effect(t.interaction, 1.0546526131668232, 0.39745288906293019, 3, 15);
}

TEST(Anova, SumsOfSquaresMatchTotalsFormulas) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = random_cube(3 + trial % 5, 2 + trial % 3, 2, rng);
    const auto t = rm_anova_two_way(y);
    const auto o = oracle::anova_ss_from_totals(y);
    EXPECT_NEAR(t.delta.ss, o.a, 1e-12);
    EXPECT_NEAR(t.weights.ss, o.b, 1e-12);
    EXPECT_NEAR(t.interaction.ss, o.ab, 1e-12);
    EXPECT_NEAR(t.delta.ss_error, o.as, 1e-12);
    EXPECT_NEAR(t.weights.ss_error, o.bs, 1e-12);
    EXPECT_NEAR(t.interaction.ss_error, o.abs, 1e-12);
  }
}

TEST(Anova, IdenticalCellsGiveZeroF) {
  const Cube y(4, std::vector<std::vector<double>>(3, std::vector<double>(2, 0.8)));
  const auto t = rm_anova_two_way(y);
  for (const auto* e : {&t.delta, &t.weights, &t.interaction}) {
    EXPECT_EQ(e->f, 0.0) << e->name;
    EXPECT_EQ(e->p, 1.0) << e->name;
  }
}

TEST(Anova, LocationAndRelabelInvariance) {
  std::mt19937_64 rng(4);
  const auto y = random_cube(6, 4, 2, rng);
  const auto base = rm_anova_two_way(y);
  auto shifted = y;
  for (auto& s : shifted) {
    for (auto& row : s) {
      for (auto& v : row) v += 3.25;
    }
  }
  auto relabeled = y;
  std::shuffle(relabeled.begin(), relabeled.end(), rng);
  for (const auto& other : {rm_anova_two_way(shifted), rm_anova_two_way(relabeled)}) {
    EXPECT_NEAR(other.delta.f, base.delta.f, 1e-6 * base.delta.f);
    EXPECT_NEAR(other.weights.f, base.weights.f, 1e-6 * base.weights.f);
    EXPECT_NEAR(other.interaction.f, base.interaction.f, 1e-6 * base.interaction.f);
    EXPECT_NEAR(other.delta.p, base.delta.p, 1e-8);
  }
}

TEST(Anova, UnbalancedDesignIsAnError) {
  Cube y = kSmall;
  y[1][0].pop_back();
  EXPECT_THROW(rm_anova_two_way(y), Error);
  EXPECT_THROW(rm_anova_two_way(Cube{{{0.1, 0.2}, {0.3, 0.4}}}), Error);
}

TEST(Anova, FromResultsUsesAliasedZeroDeltaCell) {
  auto full = cube_result(kSmall, {0.0, 1.0});
  const auto expected = rm_anova_two_way(kSmall);
  // The zero-delta weights-on cell duplicates weights-off in a real sweep.
  Cube aliased = kSmall;
  for (auto& s : aliased) s[0][1] = s[0][0];
  ExperimentResult sparse;
  const auto aliased_rows = cube_result(aliased, {0.0, 1.0});
  for (const auto& row : aliased_rows.rows()) {
    if (row.delta == 0.0 && row.sample_weights) continue;
    sparse.add(row);
  }
  EXPECT_NEAR(rm_anova_two_way(full, "m", "auc").interaction.f, expected.interaction.f, 1e-9);
  const auto t = rm_anova_two_way(sparse, "m", "auc");
  EXPECT_NEAR(t.delta.f, rm_anova_two_way(aliased).delta.f, 1e-9);
  EXPECT_EQ(t.delta_levels, (std::vector<double>{0.0, 1.0}));
  sparse.add({"m", 1.0, true, 3, "auc", 0.5});
  EXPECT_THROW(rm_anova_two_way(sparse, "m", "auc"), Error);
}

// ------------------------------------------------------------- t-tests

TEST(PairedT, FixtureMatchesReference) {
  const std::vector<double> a = {0.80, 0.82, 0.78, 0.81};
  const std::vector<double> b = {0.75, 0.77, 0.74, 0.76};
  const auto t = paired_t_test(a, b);
  EXPECT_NEAR(t.t, t_oracle(a, b), 1e-10);
  EXPECT_NEAR(t.t, 19.000000000000057, 1e-10);
  EXPECT_NEAR(t.p, 0.0003183434400711545, 1e-10);
  EXPECT_EQ(t.df, 3.0);
  EXPECT_EQ(t.n, 4u);
  EXPECT_NEAR(t.mean_difference, 0.0475, 1e-12);

  const std::vector<double> a2 = {0.91, 0.88, 0.93, 0.87, 0.9, 0.89};
  const std::vector<double> b2 = {0.9, 0.89, 0.9, 0.86, 0.88, 0.9};
  const auto t2 = paired_t_test(a2, b2);
  EXPECT_NEAR(t2.t, 1.2741179785940639, 1e-10);
  EXPECT_NEAR(t2.p, 0.25862863951997073, 1e-10);
}

TEST(PairedT, DegenerateCases) {
  const std::vector<double> a = {0.7, 0.8, 0.9};
  const auto same = paired_t_test(a, a);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p, 1.0);
  EXPECT_FALSE(same.zero_variance);

  const std::vector<double> b = {1.7, 1.8, 1.9, 2.0};
  const std::vector<double> c = {0.7, 0.8, 0.9, 1.0};
  auto ones = paired_t_test(b, c);
  EXPECT_TRUE(ones.zero_variance);
  EXPECT_EQ(ones.p, 0.0);
  EXPECT_TRUE(std::isinf(ones.t) && ones.t > 0);
  std::vector<PairedTest> family{ones};
  apply_bonferroni(family, 0.05);
  EXPECT_TRUE(family[0].significant);

  const std::vector<double> one = {0.5};
  EXPECT_THROW(paired_t_test(one, one), Error);
  EXPECT_THROW(paired_t_test(a, c), Error);
}

TEST(PairedT, LocationAndRelabelInvariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.8, 0.05);
  std::vector<double> a(12), b(12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = g(rng);
    b[i] = a[i] - 0.01 + 0.02 * g(rng);
  }
  const auto base = paired_t_test(a, b);
  auto as = a, bs = b;
  for (auto& v : as) v += 5.0;
  for (auto& v : bs) v += 5.0;
  EXPECT_NEAR(paired_t_test(as, bs).t, base.t, 1e-8);
  std::vector<std::size_t> idx(a.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<double> ap, bp;
  for (auto i : idx) {
    ap.push_back(a[i]);
    bp.push_back(b[i]);
  }
  EXPECT_NEAR(paired_t_test(ap, bp).t, base.t, 1e-10);
  // Breaking the alignment of one side must change the statistic.
  std::vector<double> bshift(b.begin() + 1, b.end());
  bshift.push_back(b.front());
  EXPECT_GT(std::abs(paired_t_test(a, bshift).t - base.t), 1e-6);
}

TEST(Bonferroni, ThresholdAndDecisions) {
  std::vector<PairedTest> family(6);
  const double ps[6] = {0.001, 0.008, 0.0084, 0.02, 0.04, 0.2};
  for (int i = 0; i < 6; ++i) family[i].p = ps[i];
  apply_bonferroni(family, 0.05);
  for (int i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(family[i].threshold, 0.05 / 6.0);
    EXPECT_EQ(family[i].significant, ps[i] < 0.05 / 6.0) << i;
    EXPECT_EQ(family[i].significant_raw, ps[i] < 0.05) << i;
  }
}

TEST(Bonferroni, LoweringAlphaNeverAddsSignificance) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PairedTest> family(1 + rng() % 8);
    for (auto& t : family) t.p = u(rng);
    auto strict = family;
    apply_bonferroni(family, 0.05);
    apply_bonferroni(strict, 0.01);
    for (std::size_t i = 0; i < family.size(); ++i) {
      EXPECT_LE(strict[i].significant, family[i].significant);
      EXPECT_LE(strict[i].significant_raw, family[i].significant_raw);
    }
  }
}

TEST(Families, StandardComparisons) {
  const auto families = standard_families("simclr", {0.0, 0.5, 1.0, 1.5});
  ASSERT_EQ(families.size(), 2u);
  EXPECT_EQ(families[0].comparisons.size(), 6u);
  EXPECT_EQ(families[1].comparisons.size(), 3u);
  for (const auto& c : families[0].comparisons) {
    EXPECT_GT(c.a.delta, 0.0);
    EXPECT_EQ(c.b.delta, 0.0);
    EXPECT_EQ(c.a.sample_weights, c.b.sample_weights);
  }
  for (const auto& c : families[1].comparisons) {
    EXPECT_EQ(c.a.delta, c.b.delta);
    EXPECT_TRUE(c.a.sample_weights);
    EXPECT_FALSE(c.b.sample_weights);
  }
}

TEST(Families, PosthocUsesSubsetPairing) {
  const auto r = cube_result(kSixByFour, {0.0, 0.5, 1.0, 1.5});
  const auto families = standard_families("m", {0.0, 0.5, 1.0, 1.5});
  const auto tests = posthoc_paired_tests(r, families[1], "auc");
  ASSERT_EQ(tests.size(), 3u);
  std::vector<double> on, off;
  for (const auto& s : kSixByFour) {
    on.push_back(s[1][1]);
    off.push_back(s[1][0]);
  }
  EXPECT_NEAR(tests[0].t, paired_t_test(on, off).t, 1e-12);
  EXPECT_DOUBLE_EQ(tests[0].threshold, 0.05 / 3.0);
}

TEST(Report, GateJsonTextAndTable) {
  const auto r = cube_result(kSixByFour, {0.0, 0.5, 1.0, 1.5});
  const auto report = analyze(r, "m", "auc");
  EXPECT_FALSE(report.anova_gate);
  EXPECT_EQ(report.families.size(), 2u);
  const auto j = to_json(report);
  EXPECT_EQ(j["anova"]["effects"][0]["effect"], report.anova.delta.name);
  EXPECT_NEAR(j["anova"]["effects"][0]["F"].get<double>(), 1.7453826088410282, 1e-8);
  EXPECT_EQ(j["posthoc"][0]["size"], 6);
  EXPECT_NE(to_text(report).find("sphericity"), std::string::npos);
  const auto table = render_table(r, "auc");
  EXPECT_NE(table.find("| m |"), std::string::npos);
  EXPECT_THROW(render_table(ExperimentResult{}, "auc"), Error);
}
