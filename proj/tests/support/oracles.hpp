#pragma once

// Brute-force reference implementations shared by the unit and acceptance
// tests. Each one is written from the definitions, not from the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "ivpp/objectives.hpp"

namespace oracle {

using ivpp::objectives::EmbeddingBatch;

inline double weight(int separation, int delta) {
  return delta == 0 ? 1.0 : double(delta - separation) / double(delta + 1);
}

// Mean weight over i uniform in [0, count) and j uniform in the clipped window.
inline double expected_weight(int count, int delta) {
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    const int lo = std::max(0, i - delta), hi = std::min(count - 1, i + delta);
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) s += weight(std::abs(j - i), delta);
    total += s / double(hi - lo + 1);
  }
  return total / double(count);
}

// Same over an arbitrary sorted candidate set: anchor uniform over the set,
// partner uniform over the members within delta of it.
inline double expected_weight_columns(const std::vector<int>& columns, int delta) {
  double total = 0.0;
  for (int a : columns) {
    double s = 0.0;
    int n = 0;
    for (int b : columns) {
      if (std::abs(a - b) <= delta) {
        s += weight(std::abs(a - b), delta);
        ++n;
      }
    }
    total += s / n;
  }
  return total / double(columns.size());
}

// Upper-tail p-value of Pearson's statistic against equal expected counts.
inline double chi_square_uniform_p(const std::vector<long>& counts) {
  if (counts.size() < 2) return 1.0;
  double n = 0.0;
  for (long c : counts) n += double(c);
  const double e = n / double(counts.size());
  double stat = 0.0;
  for (long c : counts) stat += (double(c) - e) * (double(c) - e) / e;
  boost::math::chi_squared dist(double(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

inline EmbeddingBatch random_batch(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  EmbeddingBatch z(n, d);
  for (auto& v : z.values) v = g(rng);
  return z;
}

inline std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  for (auto& v : w) v = u(rng);
  return w;
}

// ------------------------------------------------------------ NT-Xent

inline double ntxent_direction(const std::vector<std::vector<double>>& u, std::size_t k,
                               std::size_t pos, double tau) {
  auto cos = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t j = 0; j < u[a].size(); ++j) s += u[a][j] * u[b][j];
    return s / tau;
  };
  double denom = 0.0;
  for (std::size_t l = 0; l < u.size(); ++l) {
    if (l != k) denom += std::exp(cos(k, l));
  }
  return -std::log(std::exp(cos(k, pos)) / denom);
}

inline std::vector<std::vector<double>> unit_rows(const EmbeddingBatch& z1,
                                                  const EmbeddingBatch& z2) {
  std::vector<std::vector<double>> u;
  for (const auto* z : {&z1, &z2}) {
    for (std::size_t i = 0; i < z->rows; ++i) {
      std::vector<double> r(z->row(i), z->row(i) + z->cols);
      double nrm = 0.0;
      for (double v : r) nrm += v * v;
      nrm = std::sqrt(nrm);
      for (double& v : r) v /= nrm;
      u.push_back(r);
    }
  }
  return u;
}

inline double simclr_loop(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                          const std::vector<double>& w, double tau) {
  const auto u = unit_rows(z1, z2);
  const std::size_t n = z1.rows;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += w[i] * 0.5 * (ntxent_direction(u, i, i + n, tau) + ntxent_direction(u, i + n, i, tau));
  }
  return total / double(n);
}

// Standard NT-Xent: mean over all 2N anchors.
inline double simclr_unweighted(const EmbeddingBatch& z1, const EmbeddingBatch& z2, double tau) {
  const auto u = unit_rows(z1, z2);
  const std::size_t n = z1.rows;
  double total = 0.0;
  for (std::size_t k = 0; k < 2 * n; ++k) total += ntxent_direction(u, k, k < n ? k + n : k - n, tau);
  return total / double(2 * n);
}

// ------------------------------------------------------------- VICReg

struct VicTerms {
  double invariance, variance, covariance;
};

inline double column_var_unbiased(const EmbeddingBatch& z, std::size_t j, double& mean) {
  mean = 0.0;
  for (std::size_t i = 0; i < z.rows; ++i) mean += z.at(i, j);
  mean /= double(z.rows);
  double v = 0.0;
  for (std::size_t i = 0; i < z.rows; ++i) v += (z.at(i, j) - mean) * (z.at(i, j) - mean);
  return v / double(z.rows - 1);
}

inline VicTerms vicreg_loop(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                            const std::vector<double>& w, double gamma, double eps) {
  VicTerms t{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < z1.rows; ++i) {
    for (std::size_t j = 0; j < z1.cols; ++j) {
      t.invariance += w[i] * (z1.at(i, j) - z2.at(i, j)) * (z1.at(i, j) - z2.at(i, j));
    }
  }
  t.invariance /= double(z1.rows);
  for (const auto* z : {&z1, &z2}) {
    const std::size_t d = z->cols;
    std::vector<double> mean(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double var = column_var_unbiased(*z, j, mean[j]);
      t.variance += std::max(0.0, gamma - std::sqrt(var + eps)) / double(d);
    }
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        if (a == b) continue;
        double c = 0.0;
        for (std::size_t i = 0; i < z->rows; ++i) {
          c += (z->at(i, a) - mean[a]) * (z->at(i, b) - mean[b]);
        }
        c /= double(z->rows - 1);
        t.covariance += c * c / double(d);
      }
    }
  }
  return t;
}

// Reference VICReg: mean-squared-error invariance over all N x D entries.
inline double vicreg_unweighted(const EmbeddingBatch& z1, const EmbeddingBatch& z2, double lambda,
                                double mu, double nu, double gamma, double eps) {
  const std::vector<double> ones(z1.rows, 1.0);
  const auto t = vicreg_loop(z1, z2, ones, gamma, eps);
  double mse = 0.0;
  for (std::size_t k = 0; k < z1.values.size(); ++k) {
    mse += (z1.values[k] - z2.values[k]) * (z1.values[k] - z2.values[k]);
  }
  mse /= double(z1.values.size());
  return lambda * mse + mu * t.variance + nu * t.covariance;
}

// -------------------------------------------------------- Barlow Twins

inline EmbeddingBatch weighted_zscore(const EmbeddingBatch& z, const std::vector<double>& w,
                                      double eps) {
  double sw = 0.0;
  for (double v : w) sw += v;
  EmbeddingBatch out(z.rows, z.cols);
  for (std::size_t j = 0; j < z.cols; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < z.rows; ++i) m += w[i] * z.at(i, j);
    m /= sw;
    double v = 0.0;
    for (std::size_t i = 0; i < z.rows; ++i) v += w[i] * (z.at(i, j) - m) * (z.at(i, j) - m);
    v /= sw;
    for (std::size_t i = 0; i < z.rows; ++i) out.at(i, j) = (z.at(i, j) - m) / std::sqrt(v + eps);
  }
  return out;
}

inline std::vector<std::vector<double>> cross_corr(const EmbeddingBatch& a, const EmbeddingBatch& b,
                                                   const std::vector<double>& w) {
  double sw = 0.0;
  for (double v : w) sw += v;
  std::vector<std::vector<double>> c(a.cols, std::vector<double>(b.cols, 0.0));
  for (std::size_t p = 0; p < a.cols; ++p) {
    for (std::size_t q = 0; q < b.cols; ++q) {
      for (std::size_t i = 0; i < a.rows; ++i) c[p][q] += w[i] * a.at(i, p) * b.at(i, q);
      c[p][q] /= sw;
    }
  }
  return c;
}

struct BarlowTerms {
  double invariance, redundancy;
};

inline BarlowTerms barlow_loop(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                               const std::vector<double>& w, double eps) {
  const std::vector<double> ones(z1.rows, 1.0);
  const auto cw = cross_corr(weighted_zscore(z1, w, eps), weighted_zscore(z2, w, eps), w);
  const auto cu = cross_corr(weighted_zscore(z1, ones, eps), weighted_zscore(z2, ones, eps), ones);
  BarlowTerms t{0.0, 0.0};
  for (std::size_t p = 0; p < cw.size(); ++p) {
    t.invariance += (1.0 - cw[p][p]) * (1.0 - cw[p][p]);
    for (std::size_t q = 0; q < cw.size(); ++q) {
      if (p != q) t.redundancy += cu[p][q] * cu[p][q];
    }
  }
  return t;
}

// Reference Barlow Twins: batch-standardized embeddings, C = Z1^T Z2 / N.
inline double barlow_unweighted(const EmbeddingBatch& z1, const EmbeddingBatch& z2, double lambda,
                                double eps) {
  const std::size_t n = z1.rows, d = z1.cols;
  auto standardize = [&](const EmbeddingBatch& z) {
    EmbeddingBatch out = z;
    for (std::size_t j = 0; j < d; ++j) {
      double m = 0.0, v = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += z.at(i, j) / double(n);
      for (std::size_t i = 0; i < n; ++i) v += (z.at(i, j) - m) * (z.at(i, j) - m) / double(n);
      for (std::size_t i = 0; i < n; ++i) out.at(i, j) = (z.at(i, j) - m) / std::sqrt(v + eps);
    }
    return out;
  };
  const auto a = standardize(z1), b = standardize(z2);
  double loss = 0.0;
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t q = 0; q < d; ++q) {
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += a.at(i, p) * b.at(i, q);
      c /= double(n);
      loss += p == q ? (1.0 - c) * (1.0 - c) : lambda * c * c;
    }
  }
  return loss;
}

// ------------------------------------------------------------ metrics

// P(score+ > score-) + P(tie) / 2 over all positive/negative pairs.
inline double auc_all_pairs(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      den += 1.0;
    }
  }
  return num / den;
}

// Two-way within-subjects sums of squares from totals: y[s][i][j].
struct AnovaSS {
  double a, b, ab, as, bs, abs;
};

inline AnovaSS anova_ss_from_totals(const std::vector<std::vector<std::vector<double>>>& y) {
  const std::size_t n = y.size(), na = y[0].size(), nb = y[0][0].size();
  double g = 0.0, sq = 0.0;
  std::vector<double> ts(n, 0.0), ta(na, 0.0), tb(nb, 0.0);
  std::vector<std::vector<double>> tab(na, std::vector<double>(nb, 0.0));
  std::vector<std::vector<double>> tas(na, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> tbs(nb, std::vector<double>(n, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < na; ++i) {
      for (std::size_t j = 0; j < nb; ++j) {
        const double v = y[s][i][j];
        g += v;
        sq += v * v;
        ts[s] += v;
        ta[i] += v;
        tb[j] += v;
        tab[i][j] += v;
        tas[i][s] += v;
        tbs[j][s] += v;
      }
    }
  }
  const double N = double(n * na * nb);
  const double cf = g * g / N;
  auto sum_sq = [](const std::vector<double>& t) {
    double s = 0.0;
    for (double v : t) s += v * v;
    return s;
  };
  const double ss_s = sum_sq(ts) / double(na * nb) - cf;
  const double ss_a = sum_sq(ta) / double(n * nb) - cf;
  const double ss_b = sum_sq(tb) / double(n * na) - cf;
  double cell = 0.0, as_cell = 0.0, bs_cell = 0.0;
  for (auto& r : tab) cell += sum_sq(r);
  for (auto& r : tas) as_cell += sum_sq(r);
  for (auto& r : tbs) bs_cell += sum_sq(r);
  AnovaSS out;
  out.a = ss_a;
  out.b = ss_b;
  out.ab = cell / double(n) - cf - ss_a - ss_b;
  out.as = as_cell / double(nb) - cf - ss_a - ss_s;
  out.bs = bs_cell / double(na) - cf - ss_b - ss_s;
  out.abs = sq - cf - ss_s - ss_a - ss_b - out.ab - out.as - out.bs;
  return out;
}

// Central differences of f at every coordinate of z.
inline EmbeddingBatch finite_difference(const std::function<double(const EmbeddingBatch&)>& f,
                                        EmbeddingBatch z, double h) {
  EmbeddingBatch g(z.rows, z.cols);
  for (std::size_t k = 0; k < z.values.size(); ++k) {
    const double x = z.values[k];
    z.values[k] = x + h;
    const double fp = f(z);
    z.values[k] = x - h;
    const double fm = f(z);
    z.values[k] = x;
    g.values[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
