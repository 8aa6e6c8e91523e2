#include "ivpp/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ivpp/error.hpp"
#include "ivpp/simd/kernels.hpp"

namespace ivpp::objectives {

using simd::Trans;

void validate_batch(const EmbeddingBatch& z) {
  require(z.rows >= 2, ErrorKind::precondition, "embedding batch needs at least 2 rows");
  require(z.cols >= 1, ErrorKind::precondition, "embedding batch needs at least 1 column");
  require(z.values.size() == z.rows * z.cols, ErrorKind::precondition, "embedding batch shape");
  for (double v : z.values) require(std::isfinite(v), ErrorKind::numeric, "non-finite embedding");
}

void validate_weights(std::span<const double> w, std::size_t n) {
  require(w.size() == n, ErrorKind::precondition, "weight vector length must equal batch size");
  bool positive = false;
  for (double v : w) {
    require(v >= 0.0 && v <= 1.0, ErrorKind::invalid_argument, "sample weights must lie in [0, 1]");
    positive = positive || v > 0.0;
  }
  require(positive, ErrorKind::invalid_argument, "all sample weights are zero");
}

Method parse_method(const std::string& name) {
  if (name == "simclr") return Method::simclr;
  if (name == "vicreg") return Method::vicreg;
  if (name == "barlow_twins" || name == "barlow") return Method::barlow_twins;
  fail(ErrorKind::invalid_argument, "unknown objective '" + name + "'");
}

const char* method_name(Method method) {
  switch (method) {
    case Method::simclr:
      return "simclr";
    case Method::vicreg:
      return "vicreg";
    case Method::barlow_twins:
      return "barlow_twins";
  }
  return "?";
}

void validate(const ObjectiveConfig& c) {
  require(c.temperature > 0.0, ErrorKind::invalid_argument, "temperature must be positive");
  require(c.eps > 0.0, ErrorKind::invalid_argument, "eps must be positive");
  require(c.vicreg_lambda >= 0.0 && c.vicreg_mu >= 0.0 && c.vicreg_nu >= 0.0,
          ErrorKind::invalid_argument, "VICReg coefficients must be non-negative");
  require(c.barlow_lambda >= 0.0, ErrorKind::invalid_argument,
          "Barlow Twins lambda must be non-negative");
}

namespace {

void check_pair(const EmbeddingBatch& z1, const EmbeddingBatch& z2, std::span<const double> w) {
  validate_batch(z1);
  validate_batch(z2);
  require(z1.rows == z2.rows && z1.cols == z2.cols, ErrorKind::precondition,
          "embedding batches must have matching shapes");
  validate_weights(w, z1.rows);
}

std::vector<double> normalized_weights(std::span<const double> w) {
  double total = 0.0;
  for (double v : w) {
    require(v >= 0.0 && std::isfinite(v), ErrorKind::invalid_argument,
            "weights must be finite and non-negative");
    total += v;
  }
  require(total > 0.0, ErrorKind::invalid_argument, "all sample weights are zero");
  std::vector<double> out(w.begin(), w.end());
  for (auto& v : out) v /= total;
  return out;
}

struct Normalized {
  EmbeddingBatch zhat;
  std::vector<double> std;  // sqrt(var + eps); 0 marks a degenerate column
};

Normalized normalize(const EmbeddingBatch& z, std::span<const double> omega, double eps) {
  const std::size_t n = z.rows;
  const std::size_t d = z.cols;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    simd::axpy<double>(omega[i], {z.row(i), d}, mean);
  }
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = z.at(i, j) - mean[j];
      var[j] += omega[i] * c * c;
    }
  }
  Normalized out{EmbeddingBatch(n, d), std::vector<double>(d)};
  for (std::size_t j = 0; j < d; ++j) out.std[j] = std::sqrt(var[j] + eps);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.zhat.at(i, j) = out.std[j] > 0.0 ? (z.at(i, j) - mean[j]) / out.std[j] : 0.0;
    }
  }
  return out;
}

// Backward through normalize(): given dL/dzhat, returns dL/dz.
EmbeddingBatch normalize_backward(const Normalized& nz, std::span<const double> omega,
                                  const EmbeddingBatch& g) {
  const std::size_t n = g.rows;
  const std::size_t d = g.cols;
  std::vector<double> sum_g(d, 0.0);
  std::vector<double> sum_gz(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      sum_g[j] += g.at(i, j);
      sum_gz[j] += g.at(i, j) * nz.zhat.at(i, j);
    }
  }
  EmbeddingBatch dz(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double s = nz.std[j];
      if (s <= 0.0) continue;
      dz.at(i, j) = (g.at(i, j) - omega[i] * sum_g[j] - omega[i] * nz.zhat.at(i, j) * sum_gz[j]) / s;
    }
  }
  return dz;
}

// c[d x d] = sum_i omega_i a_i^T b_i
Matrix weighted_gram(const EmbeddingBatch& a, const EmbeddingBatch& b, std::span<const double> omega) {
  EmbeddingBatch scaled = a;
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) scaled.at(i, j) *= omega[i];
  }
  Matrix c(a.cols, b.cols);
  simd::gemm<double>(Trans::yes, Trans::no, a.cols, b.cols, a.rows, 1.0, scaled.values.data(),
                     a.cols, b.values.data(), b.cols, 0.0, c.values.data(), c.cols);
  return c;
}

LossWithGrad simclr_impl(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                         std::span<const double> w, const ObjectiveConfig& cfg, bool want_grad) {
  const std::size_t n = z1.rows;
  const std::size_t d = z1.cols;
  const std::size_t m = 2 * n;
  const double inv_tau = 1.0 / cfg.temperature;

  EmbeddingBatch u(m, d);
  std::vector<double> norms(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double* src = k < n ? z1.row(k) : z2.row(k - n);
    const double nrm = std::sqrt(simd::dot<double>({src, d}, {src, d}));
    norms[k] = std::max(nrm, 1e-12);
    for (std::size_t j = 0; j < d; ++j) u.at(k, j) = src[j] / norms[k];
  }
  Matrix sim(m, m);
  simd::gemm<double>(Trans::no, Trans::yes, m, m, d, inv_tau, u.values.data(), d, u.values.data(),
                     d, 0.0, sim.values.data(), m);

  std::vector<double> row_loss(m);
  Matrix prob(m, m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t pos = k < n ? k + n : k - n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < m; ++l) {
      if (l != k) mx = std::max(mx, sim.at(k, l));
    }
    double denom = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      if (l == k) continue;
      prob.at(k, l) = std::exp(sim.at(k, l) - mx);
      denom += prob.at(k, l);
    }
    for (std::size_t l = 0; l < m; ++l) prob.at(k, l) /= denom;
    row_loss[k] = mx + std::log(denom) - sim.at(k, pos);
  }

  LossWithGrad out;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += w[i] * 0.5 * (row_loss[i] + row_loss[i + n]);
  total /= double(n);
  out.report.total = total;
  out.report.invariance = total;
  if (!want_grad) return out;

  // dL/dsim, then through sim = U U^T / tau and the row normalization.
  Matrix dsim(m, m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t pair = k < n ? k : k - n;
    const std::size_t pos = k < n ? k + n : k - n;
    const double ck = w[pair] / (2.0 * double(n));
    for (std::size_t l = 0; l < m; ++l) {
      if (l == k) continue;
      dsim.at(k, l) = ck * (prob.at(k, l) - (l == pos ? 1.0 : 0.0));
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t l = k + 1; l < m; ++l) {
      const double s = dsim.at(k, l) + dsim.at(l, k);
      dsim.at(k, l) = s;
      dsim.at(l, k) = s;
    }
  }
  EmbeddingBatch du(m, d);
  simd::gemm<double>(Trans::no, Trans::no, m, d, m, inv_tau, dsim.values.data(), m,
                     u.values.data(), d, 0.0, du.values.data(), d);
  out.grad_a = EmbeddingBatch(n, d);
  out.grad_b = EmbeddingBatch(n, d);
  for (std::size_t k = 0; k < m; ++k) {
    const double proj = simd::dot<double>({u.row(k), d}, {du.row(k), d});
    double* dst = k < n ? out.grad_a.row(k) : out.grad_b.row(k - n);
    for (std::size_t j = 0; j < d; ++j) dst[j] = (du.at(k, j) - u.at(k, j) * proj) / norms[k];
  }
  return out;
}

struct BranchStats {
  EmbeddingBatch centered;
  std::vector<double> std;  // sqrt(unbiased var + eps)
  Matrix cov;
};

BranchStats branch_stats(const EmbeddingBatch& z, double eps) {
  const std::size_t n = z.rows;
  const std::size_t d = z.cols;
  BranchStats s{z, std::vector<double>(d), Matrix(d, d)};
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) simd::axpy<double>(1.0 / double(n), {z.row(i), d}, mean);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.centered.at(i, j) -= mean[j];
  }
  simd::gemm<double>(Trans::yes, Trans::no, d, d, n, 1.0 / double(n - 1),
                     s.centered.values.data(), d, s.centered.values.data(), d, 0.0,
                     s.cov.values.data(), d);
  for (std::size_t j = 0; j < d; ++j) s.std[j] = std::sqrt(s.cov.at(j, j) + eps);
  return s;
}

LossWithGrad vicreg_impl(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                         std::span<const double> w, const ObjectiveConfig& cfg, bool want_grad) {
  const std::size_t n = z1.rows;
  const std::size_t d = z1.cols;
  LossWithGrad out;
  auto& r = out.report;
  r.invariance_coef = cfg.vicreg_invariance_per_dim ? cfg.vicreg_lambda / double(d)
                                                    : cfg.vicreg_lambda;
  r.variance_coef = cfg.vicreg_mu;
  r.covariance_coef = cfg.vicreg_nu;

  double inv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = z1.at(i, j) - z2.at(i, j);
      sq += diff * diff;
    }
    inv += w[i] * sq;
  }
  r.invariance = inv / double(n);

  const BranchStats s1 = branch_stats(z1, cfg.eps);
  const BranchStats s2 = branch_stats(z2, cfg.eps);
  auto variance_term = [&](const BranchStats& s) {
    double v = 0.0;
    for (double sd : s.std) v += std::max(0.0, cfg.variance_target - sd);
    return v / double(d);
  };
  auto covariance_term = [&](const BranchStats& s) {
    double c = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        if (a != b) c += s.cov.at(a, b) * s.cov.at(a, b);
      }
    }
    return c / double(d);
  };
  r.variance = variance_term(s1) + variance_term(s2);
  r.covariance = covariance_term(s1) + covariance_term(s2);
  r.total = r.invariance_coef * r.invariance + r.variance_coef * r.variance +
            r.covariance_coef * r.covariance;
  if (!want_grad) return out;

  auto branch_grad = [&](const BranchStats& s) {
    EmbeddingBatch g(n, d);
    for (std::size_t j = 0; j < d; ++j) {
      if (cfg.variance_target - s.std[j] <= 0.0) continue;
      const double scale = -cfg.vicreg_mu / (double(d) * double(n - 1) * s.std[j]);
      for (std::size_t i = 0; i < n; ++i) g.at(i, j) += scale * s.centered.at(i, j);
    }
    // d/dZc of nu/D * sum_offdiag C^2 with C = Zc^T Zc / (n - 1).
    Matrix gc(d, d);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        gc.at(a, b) = a == b ? 0.0 : 2.0 * cfg.vicreg_nu * s.cov.at(a, b) / double(d);
      }
    }
    simd::gemm<double>(Trans::no, Trans::no, n, d, d, 2.0 / double(n - 1),
                       s.centered.values.data(), d, gc.values.data(), d, 1.0, g.values.data(), d);
    // Remove the column mean (centering backward).
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += g.at(i, j);
      mean /= double(n);
      for (std::size_t i = 0; i < n; ++i) g.at(i, j) -= mean;
    }
    return g;
  };
  out.grad_a = branch_grad(s1);
  out.grad_b = branch_grad(s2);
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = 2.0 * r.invariance_coef * w[i] / double(n);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = scale * (z1.at(i, j) - z2.at(i, j));
      out.grad_a.at(i, j) += diff;
      out.grad_b.at(i, j) -= diff;
    }
  }
  return out;
}

LossWithGrad barlow_impl(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                         std::span<const double> w, const ObjectiveConfig& cfg, bool want_grad) {
  const std::size_t n = z1.rows;
  const std::size_t d = z1.cols;
  const auto omega = normalized_weights(w);
  const std::vector<double> uniform(n, 1.0 / double(n));

  const Normalized w1 = normalize(z1, omega, cfg.eps);
  const Normalized w2 = normalize(z2, omega, cfg.eps);
  const Normalized u1 = normalize(z1, uniform, cfg.eps);
  const Normalized u2 = normalize(z2, uniform, cfg.eps);
  const Matrix cw = weighted_gram(w1.zhat, w2.zhat, omega);
  const Matrix cu = weighted_gram(u1.zhat, u2.zhat, uniform);

  LossWithGrad out;
  auto& r = out.report;
  r.invariance_coef = 1.0;
  r.redundancy_coef = cfg.barlow_lambda;
  for (std::size_t j = 0; j < d; ++j) r.invariance += (1.0 - cw.at(j, j)) * (1.0 - cw.at(j, j));
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      if (a != b) r.redundancy += cu.at(a, b) * cu.at(a, b);
    }
  }
  r.total = r.invariance + cfg.barlow_lambda * r.redundancy;
  if (!want_grad) return out;

  // Invariance: only the diagonal of C_W carries gradient.
  EmbeddingBatch gw1(n, d), gw2(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    const double g = -2.0 * (1.0 - cw.at(j, j));
    for (std::size_t i = 0; i < n; ++i) {
      gw1.at(i, j) = omega[i] * g * w2.zhat.at(i, j);
      gw2.at(i, j) = omega[i] * g * w1.zhat.at(i, j);
    }
  }
  // Redundancy: dL/dC = 2 lambda C off the diagonal.
  Matrix gc(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      gc.at(a, b) = a == b ? 0.0 : 2.0 * cfg.barlow_lambda * cu.at(a, b);
    }
  }
  const double inv_n = 1.0 / double(n);
  EmbeddingBatch gu1(n, d), gu2(n, d);
  simd::gemm<double>(Trans::no, Trans::yes, n, d, d, inv_n, u2.zhat.values.data(), d,
                     gc.values.data(), d, 0.0, gu1.values.data(), d);
  simd::gemm<double>(Trans::no, Trans::no, n, d, d, inv_n, u1.zhat.values.data(), d,
                     gc.values.data(), d, 0.0, gu2.values.data(), d);

  out.grad_a = normalize_backward(w1, omega, gw1);
  out.grad_b = normalize_backward(w2, omega, gw2);
  const auto ra = normalize_backward(u1, uniform, gu1);
  const auto rb = normalize_backward(u2, uniform, gu2);
  for (std::size_t k = 0; k < n * d; ++k) {
    out.grad_a.values[k] += ra.values[k];
    out.grad_b.values[k] += rb.values[k];
  }
  return out;
}

LossWithGrad dispatch(const EmbeddingBatch& z1, const EmbeddingBatch& z2, std::span<const double> w,
                      const ObjectiveConfig& cfg, bool want_grad) {
  validate(cfg);
  check_pair(z1, z2, w);
  switch (cfg.method) {
    case Method::simclr:
      return simclr_impl(z1, z2, w, cfg, want_grad);
    case Method::vicreg:
      return vicreg_impl(z1, z2, w, cfg, want_grad);
    case Method::barlow_twins:
      return barlow_impl(z1, z2, w, cfg, want_grad);
  }
  fail(ErrorKind::invalid_argument, "unknown objective");
}

}  // namespace

Moments weighted_moments(const EmbeddingBatch& z, std::span<const double> w, double eps) {
  require(w.size() == z.rows, ErrorKind::precondition, "weight vector length must equal batch size");
  require(eps >= 0.0, ErrorKind::invalid_argument, "eps must be non-negative");
  const auto omega = normalized_weights(w);
  Moments m{std::vector<double>(z.cols, 0.0), std::vector<double>(z.cols, 0.0)};
  for (std::size_t i = 0; i < z.rows; ++i) {
    for (std::size_t j = 0; j < z.cols; ++j) m.mean[j] += omega[i] * z.at(i, j);
  }
  for (std::size_t j = 0; j < z.cols; ++j) {
    double var = 0.0;
    for (std::size_t i = 0; i < z.rows; ++i) {
      const double c = z.at(i, j) - m.mean[j];
      var += omega[i] * c * c;
    }
    m.std[j] = std::sqrt(var + eps);
  }
  return m;
}

EmbeddingBatch weighted_normalize(const EmbeddingBatch& z, std::span<const double> w, double eps) {
  require(w.size() == z.rows, ErrorKind::precondition, "weight vector length must equal batch size");
  return normalize(z, normalized_weights(w), eps).zhat;
}

Matrix weighted_cross_correlation(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                                  std::span<const double> w, double eps) {
  require(z1.rows == z2.rows && z1.cols == z2.cols, ErrorKind::precondition,
          "embedding batches must have matching shapes");
  require(w.size() == z1.rows, ErrorKind::precondition, "weight vector length must equal batch size");
  const auto omega = normalized_weights(w);
  return weighted_gram(normalize(z1, omega, eps).zhat, normalize(z2, omega, eps).zhat, omega);
}

LossReport simclr_weighted(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                           std::span<const double> w, const ObjectiveConfig& config) {
  ObjectiveConfig c = config;
  c.method = Method::simclr;
  return dispatch(z1, z2, w, c, false).report;
}

LossReport vicreg_weighted(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                           std::span<const double> w, const ObjectiveConfig& config) {
  ObjectiveConfig c = config;
  c.method = Method::vicreg;
  return dispatch(z1, z2, w, c, false).report;
}

LossReport barlow_weighted(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                           std::span<const double> w, const ObjectiveConfig& config) {
  ObjectiveConfig c = config;
  c.method = Method::barlow_twins;
  return dispatch(z1, z2, w, c, false).report;
}

LossWithGrad evaluate_with_grad(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                                std::span<const double> w, const ObjectiveConfig& config) {
  return dispatch(z1, z2, w, config, true);
}

LossReport evaluate(const EmbeddingBatch& z1, const EmbeddingBatch& z2, std::span<const double> w,
                    const ObjectiveConfig& config) {
  return dispatch(z1, z2, w, config, false).report;
}

}  // namespace ivpp::objectives
