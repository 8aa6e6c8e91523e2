#include "ivpp/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "ivpp/error.hpp"

namespace ivpp::evalstats {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_delta(double d) {
  std::ostringstream os;
  os << d;
  return os.str();
}

std::string condition_label(const Condition& c) {
  return c.method + " delta=" + format_delta(c.delta) + " sw=" + (c.sample_weights ? "on" : "off");
}

// ------------------------------------------------------------- results

namespace {
bool same_key(const ResultRow& a, const ResultRow& b) {
  return a.method == b.method && a.delta == b.delta && a.sample_weights == b.sample_weights &&
         a.subset == b.subset && a.metric == b.metric;
}
}  // namespace

void ExperimentResult::add(ResultRow row) {
  require(std::isfinite(row.value), ErrorKind::numeric,
          "non-finite " + row.metric + " for " +
              condition_label({row.method, row.delta, row.sample_weights}));
  for (const auto& r : rows_) {
    require(!same_key(r, row), ErrorKind::format,
            "duplicate result row for " +
                condition_label({row.method, row.delta, row.sample_weights}) + " subset " +
                std::to_string(row.subset) + " metric " + row.metric);
  }
  rows_.push_back(std::move(row));
}

std::optional<double> ExperimentResult::find(const Condition& c, int subset,
                                             const std::string& metric) const {
  for (const auto& r : rows_) {
    if (r.method == c.method && r.delta == c.delta && r.sample_weights == c.sample_weights &&
        r.subset == subset && r.metric == metric) {
      return r.value;
    }
  }
  return std::nullopt;
}

std::optional<double> ExperimentResult::find_aliased(const Condition& c, int subset,
                                                     const std::string& metric) const {
  if (auto v = find(c, subset, metric)) return v;
  if (c.delta == 0.0 && c.sample_weights) return find({c.method, 0.0, false}, subset, metric);
  return std::nullopt;
}

std::vector<std::string> ExperimentResult::methods() const {
  std::vector<std::string> out;
  for (const auto& r : rows_) {
    if (std::find(out.begin(), out.end(), r.method) == out.end()) out.push_back(r.method);
  }
  return out;
}

std::vector<double> ExperimentResult::deltas(const std::string& method) const {
  std::set<double> s;
  for (const auto& r : rows_) {
    if (r.method == method) s.insert(r.delta);
  }
  return {s.begin(), s.end()};
}

std::vector<int> ExperimentResult::subsets(const std::string& method) const {
  std::set<int> s;
  for (const auto& r : rows_) {
    if (r.method == method) s.insert(r.subset);
  }
  return {s.begin(), s.end()};
}

void save_result_csv(const ExperimentResult& result, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << "method,delta,sw,subset,metric,value\n" << std::setprecision(17);
  for (const auto& r : result.rows()) {
    out << r.method << ',' << r.delta << ',' << (r.sample_weights ? 1 : 0) << ',' << r.subset
        << ',' << r.metric << ',' << r.value << '\n';
  }
}

ExperimentResult load_result_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  ExperimentResult result;
  if (!std::getline(in, line)) return result;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "method,delta,sw,subset,metric,value", ErrorKind::format,
          "unexpected result header in " + path.string());
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    require(f.size() == 6, ErrorKind::format,
            path.string() + ":" + std::to_string(lineno) + ": expected 6 fields");
    try {
      ResultRow r;
      r.method = f[0];
      r.delta = std::stod(f[1]);
      require(f[2] == "0" || f[2] == "1", ErrorKind::format, "sw must be 0 or 1");
      r.sample_weights = f[2] == "1";
      r.subset = std::stoi(f[3]);
      r.metric = f[4];
      r.value = std::stod(f[5]);
      result.add(std::move(r));
    } catch (const std::logic_error&) {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return result;
}

// ------------------------------------------------------ cross-validation

FoldSummary summarize_folds(std::span<const double> acc) {
  require(!acc.empty(), ErrorKind::precondition, "no folds to summarize");
  FoldSummary s;
  s.folds.assign(acc.begin(), acc.end());
  s.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / double(acc.size());
  double ss = 0.0;
  for (double a : acc) ss += (a - s.mean) * (a - s.mean);
  s.std = std::sqrt(ss / double(acc.size()));
  return s;
}

std::vector<std::vector<std::string>> patient_folds(const data::DatasetManifest& manifest,
                                                    Task task, int k, std::uint64_t seed) {
  require(k >= 2, ErrorKind::invalid_argument, "k must be >= 2");
  const std::string key = train::task_key(task);
  std::map<std::string, std::vector<int>> votes;
  for (const auto& r : manifest.records) {
    if (auto l = r.label(key)) votes[r.patient_id].push_back(*l);
  }
  std::map<int, std::vector<std::string>> by_class;
  for (auto& [p, v] : votes) {
    std::map<int, int> count;
    for (int l : v) ++count[l];
    int best = count.begin()->first;
    for (auto [l, c] : count) {
      if (c > count[best]) best = l;
    }
    by_class[best].push_back(p);
  }
  require(!by_class.empty(), ErrorKind::precondition, "no labelled videos for task " + key);
  for (const auto& [cls, ps] : by_class) {
    require(int(ps.size()) >= k, ErrorKind::precondition,
            "k = " + std::to_string(k) + " exceeds the " + std::to_string(ps.size()) +
                " patients of class " + std::to_string(cls));
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> folds(static_cast<std::size_t>(k));
  std::size_t next = 0;
  for (auto& [cls, ps] : by_class) {
    std::shuffle(ps.begin(), ps.end(), rng);
    for (const auto& p : ps) folds[next++ % std::size_t(k)].push_back(p);
  }
  return folds;
}

FoldSummary kfold_cv(const data::DatasetManifest& manifest, Task task, int k, std::uint64_t seed,
                     const FoldRunner& runner) {
  const auto folds = patient_folds(manifest, task, k, seed);
  const std::string key = train::task_key(task);
  std::vector<double> acc;
  for (int f = 0; f < k; ++f) {
    const std::set<std::string> held(folds[f].begin(), folds[f].end());
    train::LabeledSplit split;
    for (const auto& r : manifest.records) {
      if (!r.label(key)) continue;
      (held.count(r.patient_id) ? split.test : split.train).push_back(&r);
    }
    acc.push_back(runner(split, f).accuracy);
  }
  return summarize_folds(acc);
}

FoldSummary kfold_cv_pocus(const data::DatasetManifest& manifest, Task task,
                           const train::ModelSpec& model, train::FineTuneConfig finetune, int k,
                           std::uint64_t seed) {
  finetune.unfreeze = train::Unfreeze::last(3);
  finetune.keep_final = true;
  return kfold_cv(manifest, task, k, seed, [&](const train::LabeledSplit& split, int fold) {
    auto m = train::build_model(model);
    auto cfg = finetune;
    cfg.seed = finetune.seed + std::uint64_t(fold);
    return train::fine_tune(m, split, task, cfg);
  });
}

// --------------------------------------------------------- label efficiency

std::vector<std::vector<std::string>> partition_patients(std::vector<std::string> patients,
                                                         int n_subsets, std::uint64_t seed) {
  require(n_subsets >= 1, ErrorKind::invalid_argument, "n_subsets must be >= 1");
  require(int(patients.size()) >= n_subsets, ErrorKind::precondition,
          "insufficient patients: " + std::to_string(patients.size()) + " for " +
              std::to_string(n_subsets) + " subsets");
  std::sort(patients.begin(), patients.end());
  std::mt19937_64 rng(seed);
  std::shuffle(patients.begin(), patients.end(), rng);
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(n_subsets));
  for (std::size_t i = 0; i < patients.size(); ++i) out[i % out.size()].push_back(patients[i]);
  return out;
}

ExperimentResult label_efficiency(const data::DatasetManifest& manifest,
                                  const data::SplitAssignment& splits, Task task,
                                  const std::vector<Condition>& conditions, int n_subsets,
                                  std::uint64_t seed, const SubsetRunner& runner,
                                  const std::string& metric) {
  const auto base = train::labeled_split(manifest, splits, task);
  std::set<std::string> train_patients;
  for (const auto* r : base.train) train_patients.insert(r->patient_id);
  const auto groups = partition_patients({train_patients.begin(), train_patients.end()},
                                         n_subsets, seed);
  ExperimentResult result;
  for (const auto& c : conditions) {
    for (int s = 0; s < n_subsets; ++s) {
      const std::set<std::string> members(groups[s].begin(), groups[s].end());
      train::LabeledSplit split;
      split.validation = base.validation;
      split.test = base.test;
      for (const auto* r : base.train) {
        if (members.count(r->patient_id)) split.train.push_back(r);
      }
      result.add({c.method, c.delta, c.sample_weights, s, metric, runner(c, split, s)});
    }
  }
  return result;
}

// ------------------------------------------------------------ statistics

namespace {

Effect make_effect(std::string name, double ss, double df, double ss_err, double df_err) {
  Effect e;
  e.name = std::move(name);
  e.ss = ss;
  e.df = df;
  e.ss_error = ss_err;
  e.df_error = df_err;
  // Sums of squares that vanish up to rounding are treated as exact zeros.
  const double tiny = 1e-12;
  if (ss <= tiny || df <= 0.0 || df_err <= 0.0) {
    e.f = 0.0;
    e.p = 1.0;
  } else if (ss_err <= tiny) {
    e.f = std::numeric_limits<double>::infinity();
    e.p = 0.0;
  } else {
    e.f = (ss / df) / (ss_err / df_err);
    e.p = boost::math::cdf(boost::math::complement(boost::math::fisher_f(df, df_err), e.f));
  }
  return e;
}

}  // namespace

AnovaTable rm_anova_two_way(const std::vector<std::vector<std::vector<double>>>& y) {
  const std::size_t n = y.size();
  require(n >= 2, ErrorKind::precondition, "ANOVA needs at least 2 subjects");
  const std::size_t a = y[0].size();
  require(a >= 2, ErrorKind::precondition, "first factor needs at least 2 levels");
  const std::size_t b = y[0][0].size();
  require(b >= 2, ErrorKind::precondition, "second factor needs at least 2 levels");
  for (const auto& s : y) {
    require(s.size() == a, ErrorKind::precondition, "unbalanced design");
    for (const auto& row : s) require(row.size() == b, ErrorKind::precondition, "unbalanced design");
  }

  double grand = 0.0;
  std::vector<double> m_s(n, 0.0), m_a(a, 0.0), m_b(b, 0.0);
  std::vector<std::vector<double>> m_ab(a, std::vector<double>(b, 0.0));
  std::vector<std::vector<double>> m_sa(n, std::vector<double>(a, 0.0));
  std::vector<std::vector<double>> m_sb(n, std::vector<double>(b, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const double v = y[s][i][j];
        grand += v;
        m_s[s] += v / double(a * b);
        m_a[i] += v / double(n * b);
        m_b[j] += v / double(n * a);
        m_ab[i][j] += v / double(n);
        m_sa[s][i] += v / double(b);
        m_sb[s][j] += v / double(a);
      }
    }
  }
  grand /= double(n * a * b);

  double ss_a = 0.0, ss_b = 0.0, ss_ab = 0.0, ss_as = 0.0, ss_bs = 0.0, ss_abs = 0.0;
  for (std::size_t i = 0; i < a; ++i) ss_a += double(n * b) * (m_a[i] - grand) * (m_a[i] - grand);
  for (std::size_t j = 0; j < b; ++j) ss_b += double(n * a) * (m_b[j] - grand) * (m_b[j] - grand);
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double d = m_ab[i][j] - m_a[i] - m_b[j] + grand;
      ss_ab += double(n) * d * d;
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < a; ++i) {
      const double d = m_sa[s][i] - m_a[i] - m_s[s] + grand;
      ss_as += double(b) * d * d;
    }
    for (std::size_t j = 0; j < b; ++j) {
      const double d = m_sb[s][j] - m_b[j] - m_s[s] + grand;
      ss_bs += double(a) * d * d;
    }
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const double d = y[s][i][j] - m_sa[s][i] - m_sb[s][j] - m_ab[i][j] + m_s[s] + m_a[i] +
                         m_b[j] - grand;
        ss_abs += d * d;
      }
    }
  }
  const double dn = double(n) - 1.0, da = double(a) - 1.0, db = double(b) - 1.0;
  AnovaTable t;
  t.subjects = n;
  t.delta = make_effect("delta", ss_a, da, ss_as, da * dn);
  t.weights = make_effect("sample_weights", ss_b, db, ss_bs, db * dn);
  t.interaction = make_effect("delta x sample_weights", ss_ab, da * db, ss_abs, da * db * dn);
  return t;
}

namespace {

std::vector<std::vector<std::vector<double>>> design_cube(const ExperimentResult& result,
                                                          const std::string& method,
                                                          const std::string& metric,
                                                          const std::vector<double>& deltas) {
  const auto subjects = result.subsets(method);
  std::vector<std::vector<std::vector<double>>> y;
  for (int s : subjects) {
    std::vector<std::vector<double>> cells;
    for (double d : deltas) {
      std::vector<double> row;
      for (bool sw : {false, true}) {
        const auto v = result.find_aliased({method, d, sw}, s, metric);
        require(v.has_value(), ErrorKind::precondition,
                "unbalanced design: missing " + condition_label({method, d, sw}) + " subset " +
                    std::to_string(s));
        row.push_back(*v);
      }
      cells.push_back(row);
    }
    y.push_back(cells);
  }
  return y;
}

}  // namespace

AnovaTable rm_anova_two_way(const ExperimentResult& result, const std::string& method,
                            const std::string& metric) {
  const auto deltas = result.deltas(method);
  require(!deltas.empty(), ErrorKind::precondition, "no rows for method " + method);
  AnovaTable t = rm_anova_two_way(design_cube(result, method, metric, deltas));
  t.delta_levels = deltas;
  return t;
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::precondition, "paired samples differ in length");
  require(a.size() >= 2, ErrorKind::precondition, "paired test needs at least 2 observations");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / double(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  PairedTest t;
  t.n = n;
  t.df = double(n) - 1.0;
  t.mean_difference = mean;
  const double sd = std::sqrt(ss / t.df);
  const double scale = std::max(1.0, std::abs(mean));
  if (sd <= 1e-15 * scale) {
    if (std::abs(mean) <= 1e-15) {
      t.t = 0.0;
      t.p = 1.0;
    } else {
      t.zero_variance = true;
      t.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
      t.p = 0.0;
    }
    return t;
  }
  t.t = mean / (sd / std::sqrt(double(n)));
  t.p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(t.df),
                                                       std::abs(t.t)));
  return t;
}

void apply_bonferroni(std::vector<PairedTest>& family, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
  const double threshold = family.empty() ? alpha : alpha / double(family.size());
  for (auto& t : family) {
    t.threshold = threshold;
    t.significant_raw = t.p < alpha;
    t.significant = t.p < threshold;
  }
}

std::vector<Family> standard_families(const std::string& method, const std::vector<double>& deltas) {
  Family vs_zero{"nonzero delta vs delta = 0", {}};
  Family weights{"sample weights on vs off", {}};
  for (bool sw : {false, true}) {
    for (double d : deltas) {
      if (d == 0.0) continue;
      vs_zero.comparisons.push_back({{method, d, sw}, {method, 0.0, sw}});
    }
  }
  for (double d : deltas) {
    if (d == 0.0) continue;
    weights.comparisons.push_back({{method, d, true}, {method, d, false}});
  }
  return {vs_zero, weights};
}

std::vector<PairedTest> posthoc_paired_tests(const ExperimentResult& result, const Family& family,
                                             const std::string& metric, double alpha) {
  std::vector<PairedTest> out;
  for (const auto& cmp : family.comparisons) {
    std::vector<double> a, b;
    for (int s : result.subsets(cmp.a.method)) {
      const auto va = result.find_aliased(cmp.a, s, metric);
      const auto vb = result.find_aliased(cmp.b, s, metric);
      require(va && vb, ErrorKind::precondition,
              "unpaired subset " + std::to_string(s) + " in " + condition_label(cmp.a) + " vs " +
                  condition_label(cmp.b));
      a.push_back(*va);
      b.push_back(*vb);
    }
    PairedTest t = paired_t_test(a, b);
    t.label = condition_label(cmp.a) + " vs " + condition_label(cmp.b);
    out.push_back(t);
  }
  apply_bonferroni(out, alpha);
  return out;
}

StatReport analyze(const ExperimentResult& result, const std::string& method,
                   const std::string& metric, double alpha) {
  StatReport r;
  r.method = method;
  r.metric = metric;
  r.alpha = alpha;
  r.anova = rm_anova_two_way(result, method, metric);
  r.anova_gate = r.anova.delta.p < alpha || r.anova.weights.p < alpha ||
                 r.anova.interaction.p < alpha;
  for (const auto& f : standard_families(method, r.anova.delta_levels)) {
    r.families.push_back({f.name, posthoc_paired_tests(result, f, metric, alpha)});
  }
  return r;
}

namespace {
json effect_json(const Effect& e) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf"); };
  return {{"effect", e.name}, {"ss", e.ss},   {"df", e.df}, {"ss_error", e.ss_error},
          {"df_error", e.df_error}, {"F", num(e.f)}, {"p", e.p}};
}
}  // namespace

json to_json(const StatReport& r) {
  json j;
  j["method"] = r.method;
  j["metric"] = r.metric;
  j["alpha"] = r.alpha;
  j["anova"] = {{"subjects", r.anova.subjects},
                {"delta_levels", r.anova.delta_levels},
                {"sphericity_correction", "none"},
                {"effects", {effect_json(r.anova.delta), effect_json(r.anova.weights),
                             effect_json(r.anova.interaction)}}};
  j["anova_significant"] = r.anova_gate;
  j["posthoc"] = json::array();
  for (const auto& f : r.families) {
    json fam{{"family", f.name}, {"size", f.tests.size()}, {"tests", json::array()}};
    for (const auto& t : f.tests) {
      fam["tests"].push_back({{"comparison", t.label},
                              {"n", t.n},
                              {"mean_difference", t.mean_difference},
                              {"t", std::isfinite(t.t) ? json(t.t) : json(t.t > 0 ? "inf" : "-inf")},
                              {"df", t.df},
                              {"p", t.p},
                              {"zero_variance", t.zero_variance},
                              {"threshold", t.threshold},
                              {"significant_raw", t.significant_raw},
                              {"significant_bonferroni", t.significant}});
    }
    j["posthoc"].push_back(fam);
  }
  return j;
}

std::string to_text(const StatReport& r) {
  std::ostringstream os;
  os << std::setprecision(4);
  os << "Method " << r.method << ", metric " << r.metric << ", " << r.anova.subjects
     << " subsets\n\n";
  os << "Two-way repeated-measures ANOVA (no sphericity correction)\n";
  for (const Effect* e : {&r.anova.delta, &r.anova.weights, &r.anova.interaction}) {
    os << "  " << std::left << std::setw(24) << e->name << " F(" << e->df << ", " << e->df_error
       << ") = " << e->f << ", p = " << e->p << '\n';
  }
  os << "  gate (any effect p < " << r.alpha << "): " << (r.anova_gate ? "yes" : "no") << "\n";
  for (const auto& f : r.families) {
    os << "\nPost-hoc paired t-tests: " << f.name << " (m = " << f.tests.size()
       << ", Bonferroni threshold " << (f.tests.empty() ? r.alpha : f.tests[0].threshold)
       << ")\n";
    for (const auto& t : f.tests) {
      os << "  " << t.label << ": mean diff " << t.mean_difference << ", t(" << t.df
         << ") = " << t.t << ", p = " << t.p << (t.zero_variance ? " [zero-variance]" : "")
         << ", raw " << (t.significant_raw ? "sig" : "ns") << ", Bonferroni "
         << (t.significant ? "sig" : "ns") << '\n';
    }
  }
  return os.str();
}

std::string render_table(const ExperimentResult& result, const std::string& metric) {
  require(!result.empty(), ErrorKind::precondition, "no rows");
  std::set<double> all_deltas;
  for (const auto& r : result.rows()) {
    if (r.metric == metric) all_deltas.insert(r.delta);
  }
  require(!all_deltas.empty(), ErrorKind::precondition, "no rows for metric " + metric);
  std::vector<std::pair<double, bool>> cols;
  for (double d : all_deltas) {
    cols.push_back({d, false});
    if (d != 0.0) cols.push_back({d, true});
  }
  std::ostringstream os;
  os << "| Method |";
  for (auto [d, sw] : cols) os << " delta=" << d << (sw ? " SW" : "") << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) os << "---|";
  os << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& m : result.methods()) {
    os << "| " << m << " |";
    for (auto [d, sw] : cols) {
      std::vector<double> v;
      for (int s : result.subsets(m)) {
        if (auto x = result.find_aliased({m, d, sw}, s, metric)) v.push_back(*x);
      }
      if (v.empty()) {
        os << " - |";
        continue;
      }
      const auto sum = summarize_folds(v);
      os << ' ' << sum.mean << " (" << sum.std << ") |";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace ivpp::evalstats
