#pragma once

#include <string>
#include <vector>

#include "ivpp/nn/module.hpp"

namespace ivpp::nn {

// 2-D convolution over NCHW input, no bias (every conv here feeds a
// normalization layer). Kaiming-normal init, fan-out mode.
class Conv2d final : public Module {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding,
         int groups, Rng& rng);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override { out.push_back(&weight_); }

  Parameter& weight() { return weight_; }

 private:
  void im2col(const float* x, int group, float* col) const;
  void col2im(const float* col, int group, float* dx) const;

  int in_, out_, k_, stride_, pad_, groups_;
  int h_ = 0, w_ = 0, oh_ = 0, ow_ = 0;
  Parameter weight_;  // [out, in/groups, k, k]
  Tensor input_;
};

// Batch normalization over dim 1 of NC or NCHW input.
class BatchNorm final : public Module {
 public:
  BatchNorm(std::string name, int channels, double momentum = 0.1, double eps = 1e-5);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<Buffer>& out) override;

 private:
  int channels_;
  double momentum_, eps_;
  Parameter gamma_, beta_;
  Tensor running_mean_, running_var_;
  std::string name_;
  // cached
  Tensor xhat_;
  std::vector<float> inv_std_;
  bool cached_training_ = false;
};

enum class Activation { relu, hardswish, hardsigmoid };

class Act final : public Module {
 public:
  explicit Act(Activation kind) : kind_(kind) {}
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Activation kind_;
  Tensor input_;
};

class MaxPool2d final : public Module {
 public:
  MaxPool2d(int kernel, int stride, int padding) : k_(kernel), stride_(stride), pad_(padding) {}
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  int k_, stride_, pad_;
  std::vector<int> in_shape_;
  std::vector<std::size_t> argmax_;
};

// NCHW -> NC
class GlobalAvgPool final : public Module {
 public:
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> in_shape_;
};

// y = x W^T + b over NC input. PyTorch-style uniform init.
class Linear final : public Module {
 public:
  Linear(std::string name, int in_features, int out_features, bool bias, Rng& rng);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  int in_, out_;
  bool has_bias_;
  Parameter weight_;  // [out, in]
  Parameter bias_;    // [out]
  Tensor input_;
};

class Sequential : public Module {
 public:
  Sequential() = default;
  Sequential& add(ModulePtr m) {
    layers_.push_back(std::move(m));
    return *this;
  }

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<Buffer>& out) override;

  std::size_t size() const { return layers_.size(); }
  Module& at(std::size_t i) { return *layers_[i]; }

 private:
  std::vector<ModulePtr> layers_;
};

// conv -> bn -> activation
ModulePtr conv_bn_act(const std::string& name, int in, int out, int kernel, int stride,
                      int groups, Activation act, Rng& rng);
ModulePtr conv_bn(const std::string& name, int in, int out, int kernel, int stride, int groups,
                  Rng& rng);

// ResNet basic block with an optional projection shortcut.
class BasicBlock final : public Module {
 public:
  BasicBlock(const std::string& name, int in, int out, int stride, Rng& rng);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;
  void collect_buffers(std::vector<Buffer>& out) override;

 private:
  Sequential main_;
  ModulePtr shortcut_;  // null for identity
  Tensor out_;
};

// Squeeze-and-excitation with a hard-sigmoid gate.
class SqueezeExcite final : public Module {
 public:
  SqueezeExcite(const std::string& name, int channels, int squeeze, Rng& rng);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;

 private:
  GlobalAvgPool pool_;
  Linear fc1_;
  Act relu_{Activation::relu};
  Linear fc2_;
  Act gate_{Activation::hardsigmoid};
  Tensor input_, scale_;
};

// MobileNetV3 bottleneck: expand 1x1, depthwise kxk, optional SE, project 1x1.
class InvertedResidual final : public Module {
 public:
  InvertedResidual(const std::string& name, int in, int kernel, int expanded, int out, bool se,
                   Activation act, int stride, Rng& rng);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override { body_.collect_parameters(out); }
  void collect_buffers(std::vector<Buffer>& out) override { body_.collect_buffers(out); }

 private:
  Sequential body_;
  bool residual_;
};

}  // namespace ivpp::nn
