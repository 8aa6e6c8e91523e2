#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ivpp::objectives {

// Row-major N x D matrix of embeddings (one row per positive pair).
struct EmbeddingBatch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  EmbeddingBatch() = default;
  EmbeddingBatch(std::size_t n, std::size_t d, double fill = 0.0)
      : rows(n), cols(d), values(n * d, fill) {}

  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  const double* row(std::size_t i) const { return values.data() + i * cols; }
  double* row(std::size_t i) { return values.data() + i * cols; }
};

using Matrix = EmbeddingBatch;

// Finite entries and at least two rows.
void validate_batch(const EmbeddingBatch& z);
// Length n, each weight in [0, 1], at least one positive.
void validate_weights(std::span<const double> w, std::size_t n);

enum class Method { simclr, vicreg, barlow_twins };

Method parse_method(const std::string& name);
const char* method_name(Method method);

struct ObjectiveConfig {
  Method method = Method::simclr;
  double temperature = 0.1;
  double vicreg_lambda = 25.0;
  double vicreg_mu = 25.0;
  double vicreg_nu = 1.0;
  // Divide lambda by D so the invariance term is a per-dimension mean
  // squared error, the scale at which lambda = 25 was tuned.
  bool vicreg_invariance_per_dim = true;
  double variance_target = 1.0;  // gamma
  double eps = 1e-4;
  double barlow_lambda = 5e-3;
  bool use_sample_weights = false;
};

void validate(const ObjectiveConfig& config);

struct LossReport {
  double total = 0.0;
  double invariance = 0.0;
  double variance = 0.0;    // VICReg, summed over both branches
  double covariance = 0.0;  // VICReg, summed over both branches
  double redundancy = 0.0;  // Barlow Twins, before its coefficient
  // Coefficients the total was assembled with.
  double invariance_coef = 1.0;
  double variance_coef = 0.0;
  double covariance_coef = 0.0;
  double redundancy_coef = 0.0;
};

struct LossWithGrad {
  LossReport report;
  EmbeddingBatch grad_a;
  EmbeddingBatch grad_b;
};

struct Moments {
  std::vector<double> mean;
  std::vector<double> std;
};

// Weighted column moments normalized by the weight sum. Weights must be
// non-negative with a positive sum; `eps` is added under the square root.
Moments weighted_moments(const EmbeddingBatch& z, std::span<const double> w, double eps = 0.0);

// Columns centred and scaled by their weighted moments. Columns with zero
// spread normalize to 0.
EmbeddingBatch weighted_normalize(const EmbeddingBatch& z, std::span<const double> w,
                                  double eps = 0.0);

// D x D matrix sum_i w_i zhat1_i^T zhat2_i / sum_i w_i.
Matrix weighted_cross_correlation(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                                  std::span<const double> w, double eps = 0.0);

// NT-Xent over the 2N views; each pair loss is the mean of its two
// directions, and the total is (1/N) sum_i w_i L_i.
LossReport simclr_weighted(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                           std::span<const double> w, const ObjectiveConfig& config);

// total = lambda' * s + mu * (v(Z1) + v(Z2)) + nu * (c(Z1) + c(Z2)) with the
// weighted invariance term s = (1/N) sum_i w_i |z1_i - z2_i|^2 and
// lambda' = lambda / D when vicreg_invariance_per_dim is set, else lambda.
LossReport vicreg_weighted(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                           std::span<const double> w, const ObjectiveConfig& config);

// Invariance on the weighted cross-correlation diagonal, redundancy on the
// unweighted cross-correlation off-diagonal.
LossReport barlow_weighted(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                           std::span<const double> w, const ObjectiveConfig& config);

// Dispatches on config.method and also returns d(total)/dZ1 and d(total)/dZ2.
LossWithGrad evaluate_with_grad(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                                std::span<const double> w, const ObjectiveConfig& config);

LossReport evaluate(const EmbeddingBatch& z1, const EmbeddingBatch& z2,
                    std::span<const double> w, const ObjectiveConfig& config);

}  // namespace ivpp::objectives
