#include "ivpp/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ivpp/error.hpp"
#include "ivpp/simd/kernels.hpp"

namespace ivpp::nn {

using simd::Trans;

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace {

Parameter make_parameter(std::string name, std::vector<int> shape, bool bias_or_norm) {
  Parameter p;
  p.name = std::move(name);
  p.value = Tensor(shape);
  p.grad = Tensor(std::move(shape));
  p.is_bias_or_norm = bias_or_norm;
  return p;
}

void expect_rank(const Tensor& x, std::size_t rank, const char* layer) {
  require(x.rank() == rank, ErrorKind::precondition,
          std::string(layer) + ": unexpected input shape " + shape_string(x.shape));
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride,
               int padding, int groups, Rng& rng)
    : in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(padding),
      groups_(groups) {
  require(in_ % groups == 0 && out_ % groups == 0, ErrorKind::invalid_argument,
          "conv channels must be divisible by groups");
  weight_ = make_parameter(std::move(name), {out_, in_ / groups, k_, k_}, false);
  std::normal_distribution<float> init(0.0f, std::sqrt(2.0f / float(out_ * k_ * k_)));
  for (auto& v : weight_.value.data) v = init(rng);
}

void Conv2d::im2col(const float* x, int group, float* col) const {
  const int cin = in_ / groups_;
  const std::size_t ohw = std::size_t(oh_) * ow_;
  for (int c = 0; c < cin; ++c) {
    const float* plane = x + std::size_t(group * cin + c) * h_ * w_;
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        float* dst = col + (std::size_t(c) * k_ * k_ + ky * k_ + kx) * ohw;
        for (int oy = 0; oy < oh_; ++oy) {
          const int iy = oy * stride_ - pad_ + ky;
          float* row = dst + std::size_t(oy) * ow_;
          if (iy < 0 || iy >= h_) {
            std::fill(row, row + ow_, 0.0f);
            continue;
          }
          const float* src = plane + std::size_t(iy) * w_;
          for (int ox = 0; ox < ow_; ++ox) {
            const int ix = ox * stride_ - pad_ + kx;
            row[ox] = (ix >= 0 && ix < w_) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void Conv2d::col2im(const float* col, int group, float* dx) const {
  const int cin = in_ / groups_;
  const std::size_t ohw = std::size_t(oh_) * ow_;
  for (int c = 0; c < cin; ++c) {
    float* plane = dx + std::size_t(group * cin + c) * h_ * w_;
    for (int ky = 0; ky < k_; ++ky) {
      for (int kx = 0; kx < k_; ++kx) {
        const float* src = col + (std::size_t(c) * k_ * k_ + ky * k_ + kx) * ohw;
        for (int oy = 0; oy < oh_; ++oy) {
          const int iy = oy * stride_ - pad_ + ky;
          if (iy < 0 || iy >= h_) continue;
          float* row = plane + std::size_t(iy) * w_;
          const float* g = src + std::size_t(oy) * ow_;
          for (int ox = 0; ox < ow_; ++ox) {
            const int ix = ox * stride_ - pad_ + kx;
            if (ix >= 0 && ix < w_) row[ix] += g[ox];
          }
        }
      }
    }
  }
}

Tensor Conv2d::forward(const Tensor& x, bool /*training*/) {
  expect_rank(x, 4, "conv2d");
  require(x.dim(1) == in_, ErrorKind::precondition,
          "conv2d: expected " + std::to_string(in_) + " channels, got " + shape_string(x.shape));
  const int n = x.dim(0);
  h_ = x.dim(2);
  w_ = x.dim(3);
  oh_ = (h_ + 2 * pad_ - k_) / stride_ + 1;
  ow_ = (w_ + 2 * pad_ - k_) / stride_ + 1;
  require(oh_ > 0 && ow_ > 0, ErrorKind::precondition, "conv2d: input smaller than kernel");
  input_ = x;

  const int cin = in_ / groups_;
  const int cout = out_ / groups_;
  const std::size_t kk = std::size_t(cin) * k_ * k_;
  const std::size_t ohw = std::size_t(oh_) * ow_;
  const bool pointwise = k_ == 1 && stride_ == 1 && pad_ == 0;
  Tensor y({n, out_, oh_, ow_});
  std::vector<float> col(pointwise ? 0 : kk * ohw);
  for (int b = 0; b < n; ++b) {
    const float* xb = x.ptr() + std::size_t(b) * in_ * h_ * w_;
    for (int g = 0; g < groups_; ++g) {
      const float* src = xb + std::size_t(g) * cin * h_ * w_;
      if (!pointwise) {
        im2col(xb, g, col.data());
        src = col.data();
      }
      simd::gemm<float>(Trans::no, Trans::no, cout, ohw, kk, 1.0f,
                        weight_.value.ptr() + std::size_t(g) * cout * kk, kk, src, ohw, 0.0f,
                        y.ptr() + (std::size_t(b) * out_ + std::size_t(g) * cout) * ohw, ohw);
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
  const int n = input_.dim(0);
  const int cin = in_ / groups_;
  const int cout = out_ / groups_;
  const std::size_t kk = std::size_t(cin) * k_ * k_;
  const std::size_t ohw = std::size_t(oh_) * ow_;
  const bool pointwise = k_ == 1 && stride_ == 1 && pad_ == 0;
  Tensor dx(input_.shape);
  std::vector<float> col(pointwise ? 0 : kk * ohw);
  std::vector<float> dcol(pointwise ? 0 : kk * ohw);
  for (int b = 0; b < n; ++b) {
    const float* xb = input_.ptr() + std::size_t(b) * in_ * h_ * w_;
    float* dxb = dx.ptr() + std::size_t(b) * in_ * h_ * w_;
    for (int g = 0; g < groups_; ++g) {
      const float* dyg = dy.ptr() + (std::size_t(b) * out_ + std::size_t(g) * cout) * ohw;
      const float* wg = weight_.value.ptr() + std::size_t(g) * cout * kk;
      float* dwg = weight_.grad.ptr() + std::size_t(g) * cout * kk;
      const float* src = xb + std::size_t(g) * cin * h_ * w_;
      if (!pointwise) {
        im2col(xb, g, col.data());
        src = col.data();
      }
      if (weight_.trainable) {
        simd::gemm<float>(Trans::no, Trans::yes, cout, kk, ohw, 1.0f, dyg, ohw, src, ohw, 1.0f,
                          dwg, kk);
      }
      if (pointwise) {
        simd::gemm<float>(Trans::yes, Trans::no, kk, ohw, cout, 1.0f, wg, kk, dyg, ohw, 0.0f,
                          dxb + std::size_t(g) * cin * h_ * w_, ohw);
      } else {
        simd::gemm<float>(Trans::yes, Trans::no, kk, ohw, cout, 1.0f, wg, kk, dyg, ohw, 0.0f,
                          dcol.data(), ohw);
        col2im(dcol.data(), g, dxb);
      }
    }
  }
  return dx;
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::string name, int channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps), name_(std::move(name)) {
  gamma_ = make_parameter(name_ + ".weight", {channels}, true);
  beta_ = make_parameter(name_ + ".bias", {channels}, true);
  std::fill(gamma_.value.data.begin(), gamma_.value.data.end(), 1.0f);
  running_mean_ = Tensor({channels}, 0.0f);
  running_var_ = Tensor({channels}, 1.0f);
}

void BatchNorm::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm::collect_buffers(std::vector<Buffer>& out) {
  out.push_back({name_ + ".running_mean", &running_mean_});
  out.push_back({name_ + ".running_var", &running_var_});
}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
  require((x.rank() == 2 || x.rank() == 4) && x.dim(1) == channels_, ErrorKind::precondition,
          "batchnorm: unexpected input shape " + shape_string(x.shape));
  const int n = x.dim(0);
  const std::size_t inner = x.rank() == 4 ? std::size_t(x.dim(2)) * x.dim(3) : 1;
  const std::size_t m = std::size_t(n) * inner;
  require(!training || m > 1, ErrorKind::precondition,
          "batchnorm: training needs more than one value per channel");

  cached_training_ = training;
  xhat_ = Tensor(x.shape);
  inv_std_.assign(channels_, 0.0f);
  Tensor y(x.shape);
  for (int c = 0; c < channels_; ++c) {
    double mean, var;
    if (training) {
      double s = 0.0, ss = 0.0;
      for (int b = 0; b < n; ++b) {
        const float* p = x.ptr() + (std::size_t(b) * channels_ + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) s += p[i];
      }
      mean = s / double(m);
      for (int b = 0; b < n; ++b) {
        const float* p = x.ptr() + (std::size_t(b) * channels_ + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) ss += (p[i] - mean) * (p[i] - mean);
      }
      var = ss / double(m);
      running_mean_.data[c] =
          float((1.0 - momentum_) * running_mean_.data[c] + momentum_ * mean);
      running_var_.data[c] =
          float((1.0 - momentum_) * running_var_.data[c] + momentum_ * ss / double(m - 1));
    } else {
      mean = running_mean_.data[c];
      var = running_var_.data[c];
    }
    const float inv = float(1.0 / std::sqrt(var + eps_));
    inv_std_[c] = inv;
    const float g = gamma_.value.data[c];
    const float bta = beta_.value.data[c];
    const float mu = float(mean);
    for (int b = 0; b < n; ++b) {
      const std::size_t off = (std::size_t(b) * channels_ + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const float xh = (x.data[off + i] - mu) * inv;
        xhat_.data[off + i] = xh;
        y.data[off + i] = g * xh + bta;
      }
    }
  }
  return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
  const int n = dy.dim(0);
  const std::size_t inner = dy.rank() == 4 ? std::size_t(dy.dim(2)) * dy.dim(3) : 1;
  const double m = double(n) * double(inner);
  Tensor dx(dy.shape);
  for (int c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int b = 0; b < n; ++b) {
      const std::size_t off = (std::size_t(b) * channels_ + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        sum_dy += dy.data[off + i];
        sum_dy_xhat += double(dy.data[off + i]) * xhat_.data[off + i];
      }
    }
    if (gamma_.trainable) gamma_.grad.data[c] += float(sum_dy_xhat);
    if (beta_.trainable) beta_.grad.data[c] += float(sum_dy);
    const float scale = gamma_.value.data[c] * inv_std_[c];
    const float mean_dy = float(sum_dy / m);
    const float mean_dy_xhat = float(sum_dy_xhat / m);
    for (int b = 0; b < n; ++b) {
      const std::size_t off = (std::size_t(b) * channels_ + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const float g = dy.data[off + i];
        dx.data[off + i] = cached_training_
                               ? scale * (g - mean_dy - xhat_.data[off + i] * mean_dy_xhat)
                               : scale * g;
      }
    }
  }
  return dx;
}

// ----------------------------------------------------------- Activations

Tensor Act::forward(const Tensor& x, bool /*training*/) {
  input_ = x;
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float v = x.data[i];
    switch (kind_) {
      case Activation::relu:
        y.data[i] = v > 0.0f ? v : 0.0f;
        break;
      case Activation::hardswish:
        y.data[i] = v * std::clamp(v + 3.0f, 0.0f, 6.0f) / 6.0f;
        break;
      case Activation::hardsigmoid:
        y.data[i] = std::clamp(v + 3.0f, 0.0f, 6.0f) / 6.0f;
        break;
    }
  }
  return y;
}

Tensor Act::backward(const Tensor& dy) {
  Tensor dx(dy.shape);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    const float v = input_.data[i];
    float d = 0.0f;
    switch (kind_) {
      case Activation::relu:
        d = v > 0.0f ? 1.0f : 0.0f;
        break;
      case Activation::hardswish:
        d = v <= -3.0f ? 0.0f : (v >= 3.0f ? 1.0f : (2.0f * v + 3.0f) / 6.0f);
        break;
      case Activation::hardsigmoid:
        d = (v > -3.0f && v < 3.0f) ? 1.0f / 6.0f : 0.0f;
        break;
    }
    dx.data[i] = dy.data[i] * d;
  }
  return dx;
}

// --------------------------------------------------------------- Pooling

Tensor MaxPool2d::forward(const Tensor& x, bool /*training*/) {
  expect_rank(x, 4, "maxpool");
  in_shape_ = x.shape;
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int oh = (h + 2 * pad_ - k_) / stride_ + 1;
  const int ow = (w + 2 * pad_ - k_) / stride_ + 1;
  Tensor y({n, c, oh, ow});
  argmax_.assign(y.size(), 0);
  std::size_t o = 0;
  for (int p = 0; p < n * c; ++p) {
    const std::size_t base = std::size_t(p) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++o) {
        float best = -std::numeric_limits<float>::infinity();
        std::size_t arg = base;
        for (int ky = 0; ky < k_; ++ky) {
          const int iy = oy * stride_ - pad_ + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < k_; ++kx) {
            const int ix = ox * stride_ - pad_ + kx;
            if (ix < 0 || ix >= w) continue;
            const std::size_t idx = base + std::size_t(iy) * w + ix;
            if (x.data[idx] > best) {
              best = x.data[idx];
              arg = idx;
            }
          }
        }
        y.data[o] = best;
        argmax_[o] = arg;
      }
    }
  }
  return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) {
  Tensor dx(in_shape_);
  for (std::size_t o = 0; o < dy.size(); ++o) dx.data[argmax_[o]] += dy.data[o];
  return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool /*training*/) {
  expect_rank(x, 4, "global pool");
  in_shape_ = x.shape;
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t hw = std::size_t(x.dim(2)) * x.dim(3);
  Tensor y({n, c});
  for (std::size_t p = 0; p < std::size_t(n) * c; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += x.data[p * hw + i];
    y.data[p] = float(s / double(hw));
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
  Tensor dx(in_shape_);
  const std::size_t hw = std::size_t(in_shape_[2]) * in_shape_[3];
  for (std::size_t p = 0; p < dy.size(); ++p) {
    const float g = dy.data[p] / float(hw);
    std::fill(dx.ptr() + p * hw, dx.ptr() + (p + 1) * hw, g);
  }
  return dx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(std::string name, int in_features, int out_features, bool bias, Rng& rng)
    : in_(in_features), out_(out_features), has_bias_(bias) {
  weight_ = make_parameter(name + ".weight", {out_, in_}, false);
  bias_ = make_parameter(name + ".bias", {bias ? out_ : 0}, true);
  const float bound = 1.0f / std::sqrt(float(in_));
  std::uniform_real_distribution<float> init(-bound, bound);
  for (auto& v : weight_.value.data) v = init(rng);
  for (auto& v : bias_.value.data) v = init(rng);
}

void Linear::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

Tensor Linear::forward(const Tensor& x, bool /*training*/) {
  require(x.rank() == 2 && x.dim(1) == in_, ErrorKind::precondition,
          "linear: expected " + std::to_string(in_) + " features, got " + shape_string(x.shape));
  input_ = x;
  const int n = x.dim(0);
  Tensor y({n, out_});
  if (has_bias_) {
    for (int b = 0; b < n; ++b) std::copy(bias_.value.data.begin(), bias_.value.data.end(),
                                          y.ptr() + std::size_t(b) * out_);
  }
  simd::gemm<float>(Trans::no, Trans::yes, n, out_, in_, 1.0f, x.ptr(), in_, weight_.value.ptr(),
                    in_, has_bias_ ? 1.0f : 0.0f, y.ptr(), out_);
  return y;
}

Tensor Linear::backward(const Tensor& dy) {
  const int n = dy.dim(0);
  if (weight_.trainable) {
    simd::gemm<float>(Trans::yes, Trans::no, out_, in_, n, 1.0f, dy.ptr(), out_, input_.ptr(),
                      in_, 1.0f, weight_.grad.ptr(), in_);
  }
  if (has_bias_ && bias_.trainable) {
    for (int b = 0; b < n; ++b) {
      for (int o = 0; o < out_; ++o) bias_.grad.data[o] += dy.data[std::size_t(b) * out_ + o];
    }
  }
  Tensor dx({n, in_});
  simd::gemm<float>(Trans::no, Trans::no, n, in_, out_, 1.0f, dy.ptr(), out_, weight_.value.ptr(),
                    in_, 0.0f, dx.ptr(), in_);
  return dx;
}

// ------------------------------------------------------------ Sequential

Tensor Sequential::forward(const Tensor& x, bool training) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, training);
  return h;
}

Tensor Sequential::backward(const Tensor& dy) {
  Tensor g = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l->collect_parameters(out);
}

void Sequential::collect_buffers(std::vector<Buffer>& out) {
  for (auto& l : layers_) l->collect_buffers(out);
}

ModulePtr conv_bn(const std::string& name, int in, int out, int kernel, int stride, int groups,
                  Rng& rng) {
  auto s = std::make_unique<Sequential>();
  s->add(std::make_unique<Conv2d>(name + ".conv.weight", in, out, kernel, stride,
                                  (kernel - 1) / 2, groups, rng));
  s->add(std::make_unique<BatchNorm>(name + ".bn", out));
  return s;
}

ModulePtr conv_bn_act(const std::string& name, int in, int out, int kernel, int stride,
                      int groups, Activation act, Rng& rng) {
  auto s = std::make_unique<Sequential>();
  s->add(std::make_unique<Conv2d>(name + ".conv.weight", in, out, kernel, stride,
                                  (kernel - 1) / 2, groups, rng));
  s->add(std::make_unique<BatchNorm>(name + ".bn", out));
  s->add(std::make_unique<Act>(act));
  return s;
}

// ------------------------------------------------------------ BasicBlock

BasicBlock::BasicBlock(const std::string& name, int in, int out, int stride, Rng& rng) {
  main_.add(conv_bn_act(name + ".a", in, out, 3, stride, 1, Activation::relu, rng));
  main_.add(conv_bn(name + ".b", out, out, 3, 1, 1, rng));
  if (stride != 1 || in != out) shortcut_ = conv_bn(name + ".down", in, out, 1, stride, 1, rng);
}

Tensor BasicBlock::forward(const Tensor& x, bool training) {
  Tensor y = main_.forward(x, training);
  const Tensor s = shortcut_ ? shortcut_->forward(x, training) : x;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] = std::max(0.0f, y.data[i] + s.data[i]);
  out_ = y;
  return y;
}

Tensor BasicBlock::backward(const Tensor& dy) {
  Tensor g(dy.shape);
  for (std::size_t i = 0; i < dy.size(); ++i) g.data[i] = out_.data[i] > 0.0f ? dy.data[i] : 0.0f;
  Tensor dx = main_.backward(g);
  const Tensor ds = shortcut_ ? shortcut_->backward(g) : g;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += ds.data[i];
  return dx;
}

void BasicBlock::collect_parameters(std::vector<Parameter*>& out) {
  main_.collect_parameters(out);
  if (shortcut_) shortcut_->collect_parameters(out);
}

void BasicBlock::collect_buffers(std::vector<Buffer>& out) {
  main_.collect_buffers(out);
  if (shortcut_) shortcut_->collect_buffers(out);
}

// --------------------------------------------------------- SqueezeExcite

SqueezeExcite::SqueezeExcite(const std::string& name, int channels, int squeeze, Rng& rng)
    : fc1_(name + ".fc1", channels, squeeze, true, rng),
      fc2_(name + ".fc2", squeeze, channels, true, rng) {}

void SqueezeExcite::collect_parameters(std::vector<Parameter*>& out) {
  fc1_.collect_parameters(out);
  fc2_.collect_parameters(out);
}

Tensor SqueezeExcite::forward(const Tensor& x, bool training) {
  input_ = x;
  Tensor s = pool_.forward(x, training);
  s = fc1_.forward(s, training);
  s = relu_.forward(s, training);
  s = fc2_.forward(s, training);
  scale_ = gate_.forward(s, training);
  Tensor y(x.shape);
  const std::size_t hw = std::size_t(x.dim(2)) * x.dim(3);
  for (std::size_t p = 0; p < scale_.size(); ++p) {
    for (std::size_t i = 0; i < hw; ++i) y.data[p * hw + i] = x.data[p * hw + i] * scale_.data[p];
  }
  return y;
}

Tensor SqueezeExcite::backward(const Tensor& dy) {
  const std::size_t hw = std::size_t(input_.dim(2)) * input_.dim(3);
  Tensor dx(dy.shape);
  Tensor dscale(scale_.shape);
  for (std::size_t p = 0; p < scale_.size(); ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) {
      dx.data[p * hw + i] = dy.data[p * hw + i] * scale_.data[p];
      acc += double(dy.data[p * hw + i]) * input_.data[p * hw + i];
    }
    dscale.data[p] = float(acc);
  }
  Tensor g = gate_.backward(dscale);
  g = fc2_.backward(g);
  g = relu_.backward(g);
  g = fc1_.backward(g);
  const Tensor dpool = pool_.backward(g);
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += dpool.data[i];
  return dx;
}

// ------------------------------------------------------ InvertedResidual

namespace {
int make_divisible(int v, int divisor) {
  int out = std::max(divisor, (v + divisor / 2) / divisor * divisor);
  if (out < 0.9 * v) out += divisor;
  return out;
}
}  // namespace

InvertedResidual::InvertedResidual(const std::string& name, int in, int kernel, int expanded,
                                   int out, bool se, Activation act, int stride, Rng& rng)
    : residual_(stride == 1 && in == out) {
  if (expanded != in) body_.add(conv_bn_act(name + ".expand", in, expanded, 1, 1, 1, act, rng));
  body_.add(conv_bn_act(name + ".dw", expanded, expanded, kernel, stride, expanded, act, rng));
  if (se) {
    body_.add(std::make_unique<SqueezeExcite>(name + ".se", expanded,
                                              make_divisible(expanded / 4, 8), rng));
  }
  body_.add(conv_bn(name + ".project", expanded, out, 1, 1, 1, rng));
}

Tensor InvertedResidual::forward(const Tensor& x, bool training) {
  Tensor y = body_.forward(x, training);
  if (residual_) {
    for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += x.data[i];
  }
  return y;
}

Tensor InvertedResidual::backward(const Tensor& dy) {
  Tensor dx = body_.backward(dy);
  if (residual_) {
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += dy.data[i];
  }
  return dx;
}

}  // namespace ivpp::nn
