#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace ivpp::nn {

// Dense float tensor, row-major. Images are NCHW, feature batches NC.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, float fill = 0.0f) : shape(std::move(s)) {
    data.assign(count(shape), fill);
  }

  static std::size_t count(const std::vector<int>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * std::size_t(b); });
  }

  std::size_t size() const { return data.size(); }
  int dim(std::size_t i) const { return shape[i]; }
  std::size_t rank() const { return shape.size(); }
  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::string shape_string(const std::vector<int>& shape);

}  // namespace ivpp::nn
