#include "ivpp/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "ivpp/error.hpp"

namespace ivpp::metrics {

double auc(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), ErrorKind::precondition,
          "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * double(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      const int y = labels[order[k]];
      require(y == 0 || y == 1, ErrorKind::invalid_argument, "AUC labels must be 0 or 1");
      if (y == 1) {
        positive_rank_sum += rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  require(positives > 0 && negatives > 0, ErrorKind::precondition,
          "AUC needs both classes present");
  const double np = double(positives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * double(negatives));
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  require(predictions.size() == labels.size() && !labels.empty(), ErrorKind::precondition,
          "accuracy needs matching, non-empty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return double(hits) / double(labels.size());
}

}  // namespace ivpp::metrics
