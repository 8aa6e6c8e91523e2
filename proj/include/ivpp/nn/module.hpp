#pragma once

#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ivpp/nn/tensor.hpp"

namespace ivpp::nn {

using Rng = std::mt19937_64;

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  // Biases and normalization parameters: no weight decay, no LARS adaptation.
  bool is_bias_or_norm = false;
  bool trainable = true;

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0f); }
};

struct Buffer {
  std::string name;
  Tensor* value;
};

// A layer with an explicit backward pass. backward() consumes the state
// cached by the most recent forward() and accumulates parameter gradients.
class Module {
 public:
  virtual ~Module() = default;

  virtual Tensor forward(const Tensor& x, bool training) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual void collect_parameters(std::vector<Parameter*>& /*out*/) {}
  virtual void collect_buffers(std::vector<Buffer>& /*out*/) {}

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    collect_parameters(out);
    return out;
  }
  std::vector<Buffer> buffers() {
    std::vector<Buffer> out;
    collect_buffers(out);
    return out;
  }
  bool has_parameters() { return !parameters().empty(); }
};

using ModulePtr = std::unique_ptr<Module>;

}  // namespace ivpp::nn
