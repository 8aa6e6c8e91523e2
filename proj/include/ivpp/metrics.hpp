#pragma once

#include <span>

namespace ivpp::metrics {

// Rank-based AUC with average ranks for ties: P(s+ > s-) + P(s+ = s-) / 2.
// Labels are 0/1 and both classes must be present.
double auc(std::span<const double> scores, std::span<const int> labels);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

}  // namespace ivpp::metrics
