#include "ivpp/nn/models.hpp"

#include "ivpp/error.hpp"

namespace ivpp::nn {

EncoderKind parse_encoder(const std::string& name) {
  if (name == "resnet18") return EncoderKind::resnet18;
  if (name == "mobilenetv3_small") return EncoderKind::mobilenetv3_small;
  if (name == "tiny_cnn") return EncoderKind::tiny_cnn;
  fail(ErrorKind::invalid_argument, "unknown encoder '" + name + "'");
}

const char* encoder_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::resnet18:
      return "resnet18";
    case EncoderKind::mobilenetv3_small:
      return "mobilenetv3_small";
    case EncoderKind::tiny_cnn:
      return "tiny_cnn";
  }
  return "?";
}

int representation_dim(EncoderKind kind, int tiny_dim) {
  switch (kind) {
    case EncoderKind::resnet18:
      return 512;
    case EncoderKind::mobilenetv3_small:
      return 576;
    case EncoderKind::tiny_cnn:
      return tiny_dim;
  }
  return 0;
}

namespace {

void build_resnet18(Sequential& s, Rng& rng) {
  s.add(conv_bn_act("stem", 3, 64, 7, 2, 1, Activation::relu, rng));
  s.add(std::make_unique<MaxPool2d>(3, 2, 1));
  const int widths[] = {64, 128, 256, 512};
  int in = 64;
  for (int stage = 0; stage < 4; ++stage) {
    for (int b = 0; b < 2; ++b) {
      const int stride = (stage > 0 && b == 0) ? 2 : 1;
      const std::string name = "layer" + std::to_string(stage + 1) + "." + std::to_string(b);
      s.add(std::make_unique<BasicBlock>(name, in, widths[stage], stride, rng));
      in = widths[stage];
    }
  }
}

void build_mobilenetv3_small(Sequential& s, Rng& rng) {
  struct Row {
    int in, k, exp, out;
    bool se;
    Activation act;
    int stride;
  };
  constexpr auto RE = Activation::relu;
  constexpr auto HS = Activation::hardswish;
  const Row rows[] = {
      {16, 3, 16, 16, true, RE, 2},   {16, 3, 72, 24, false, RE, 2},
      {24, 3, 88, 24, false, RE, 1},  {24, 5, 96, 40, true, HS, 2},
      {40, 5, 240, 40, true, HS, 1},  {40, 5, 240, 40, true, HS, 1},
      {40, 5, 120, 48, true, HS, 1},  {48, 5, 144, 48, true, HS, 1},
      {48, 5, 288, 96, true, HS, 2},  {96, 5, 576, 96, true, HS, 1},
      {96, 5, 576, 96, true, HS, 1},
  };
  s.add(conv_bn_act("stem", 3, 16, 3, 2, 1, HS, rng));
  int i = 0;
  for (const auto& r : rows) {
    s.add(std::make_unique<InvertedResidual>("features." + std::to_string(++i), r.in, r.k, r.exp,
                                             r.out, r.se, r.act, r.stride, rng));
  }
  s.add(conv_bn_act("lastconv", 96, 576, 1, 1, 1, HS, rng));
}

void build_tiny_cnn(Sequential& s, int dim, Rng& rng) {
  s.add(conv_bn_act("block1", 3, 8, 5, 4, 1, Activation::relu, rng));
  s.add(conv_bn_act("block2", 8, 16, 3, 2, 1, Activation::relu, rng));
  s.add(conv_bn_act("block3", 16, 32, 3, 2, 1, Activation::relu, rng));
  s.add(conv_bn_act("block4", 32, dim, 3, 2, 1, Activation::relu, rng));
}

}  // namespace

Encoder::Encoder(EncoderKind kind, int tiny_dim, Rng& rng)
    : kind_(kind), dim_(representation_dim(kind, tiny_dim)) {
  require(dim_ >= 1, ErrorKind::invalid_argument, "representation_dim must be >= 1");
  switch (kind) {
    case EncoderKind::resnet18:
      build_resnet18(blocks_, rng);
      break;
    case EncoderKind::mobilenetv3_small:
      build_mobilenetv3_small(blocks_, rng);
      break;
    case EncoderKind::tiny_cnn:
      build_tiny_cnn(blocks_, dim_, rng);
      break;
  }
  blocks_.add(std::make_unique<GlobalAvgPool>());
}

bool Encoder::block_trainable(std::size_t i) {
  for (Parameter* p : blocks_.at(i).parameters()) {
    if (p->trainable) return true;
  }
  return false;
}

Tensor Encoder::forward(const Tensor& x, bool training) {
  require(x.rank() == 4 && x.dim(1) == 3, ErrorKind::precondition,
          "encoder expects (N, 3, H, W) input, got " + shape_string(x.shape));
  Tensor h = x;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const bool block_training = training && (!blocks_.at(i).has_parameters() || block_trainable(i));
    h = blocks_.at(i).forward(h, block_training);
  }
  return h;
}

Tensor Encoder::backward(const Tensor& grad_out) {
  std::size_t lowest = blocks_.size();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (block_trainable(i)) {
      lowest = i;
      break;
    }
  }
  Tensor g = grad_out;
  for (std::size_t i = blocks_.size(); i-- > 0;) {
    if (i < lowest) return {};
    g = blocks_.at(i).backward(g);
  }
  return g;
}

std::vector<std::size_t> Encoder::parameterized_blocks() {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_.at(i).has_parameters()) out.push_back(i);
  }
  return out;
}

void Encoder::set_trainable(bool trainable) {
  for (Parameter* p : parameters()) p->trainable = trainable;
}

void Encoder::unfreeze_last(std::size_t k) {
  set_trainable(false);
  const auto blocks = parameterized_blocks();
  const std::size_t first = blocks.size() > k ? blocks.size() - k : 0;
  for (std::size_t j = first; j < blocks.size(); ++j) {
    for (Parameter* p : blocks_.at(blocks[j]).parameters()) p->trainable = true;
  }
}

std::unique_ptr<Sequential> make_projector(int in_dim, const std::vector<int>& widths, Rng& rng) {
  require(!widths.empty(), ErrorKind::invalid_argument, "projector needs at least one layer");
  auto s = std::make_unique<Sequential>();
  int in = in_dim;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::string name = "projector." + std::to_string(i);
    s->add(std::make_unique<Linear>(name + ".linear", in, widths[i], true, rng));
    s->add(std::make_unique<BatchNorm>(name + ".bn", widths[i]));
    s->add(std::make_unique<Act>(Activation::relu));
    in = widths[i];
  }
  s->add(std::make_unique<Linear>("projector.out", in, widths.back(), false, rng));
  return s;
}

}  // namespace ivpp::nn
