#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ivpp/nn/layers.hpp"

namespace ivpp::nn {

enum class EncoderKind { resnet18, mobilenetv3_small, tiny_cnn };

EncoderKind parse_encoder(const std::string& name);
const char* encoder_name(EncoderKind kind);

// 512 for resnet18, 576 for mobilenetv3_small, `tiny_dim` for tiny_cnn.
int representation_dim(EncoderKind kind, int tiny_dim);

// Feature extractor mapping (N, 3, H, W) to (N, D_h). The top-level children
// are the units that fine-tuning freezes or unfreezes.
class Encoder final : public Module {
 public:
  Encoder(EncoderKind kind, int tiny_dim, Rng& rng);

  // Blocks without any trainable parameter run in inference mode even when
  // `training` is set, so frozen blocks keep their statistics as well.
  Tensor forward(const Tensor& x, bool training) override;
  // Stops at the first block below which nothing is trainable and returns an
  // empty tensor in that case.
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override { blocks_.collect_parameters(out); }
  void collect_buffers(std::vector<Buffer>& out) override { blocks_.collect_buffers(out); }

  EncoderKind kind() const { return kind_; }
  int output_dim() const { return dim_; }
  std::size_t block_count() const { return blocks_.size(); }
  Module& block(std::size_t i) { return blocks_.at(i); }
  // Indices of top-level blocks that own parameters, in forward order.
  std::vector<std::size_t> parameterized_blocks();

  void set_trainable(bool trainable);
  // Freezes everything except the last k parameterized blocks.
  void unfreeze_last(std::size_t k);

 private:
  bool block_trainable(std::size_t i);

  EncoderKind kind_;
  int dim_;
  Sequential blocks_;
};

// Linear+BN+ReLU for every width but the last, then a bias-free Linear.
std::unique_ptr<Sequential> make_projector(int in_dim, const std::vector<int>& widths, Rng& rng);

}  // namespace ivpp::nn
