#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "s2ica/tensor.hpp"

namespace s2ica {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Gradient of a layer with respect to its input and to each parameter
/// tensor, in the order the layer's params() lists them.
template <typename Scalar>
struct LayerGradients {
  FeatureMap<Scalar> grad_in;
  std::vector<Tensor<Scalar>> params;
};

/// Output extent of a sliding window, floor((extent + 2 pad - window) / stride) + 1.
inline Index window_output_extent(Index extent, Index window, Index stride, Index pad = 0) {
  const Index span = extent + 2 * pad - window;
  if (span < 0 || stride < 1) return 0;
  return span / stride + 1;
}

// ---------------------------------------------------------------------------
// Convolution + ReLU

/// Dense convolution: every input channel feeds every output channel, then
/// ReLU. Kernels are laid out (kh, kw, in, out), so the row-major kernel
/// tensor read as a (kh*kw*in, out) matrix is the im2col weight matrix.
template <typename Scalar>
struct ConvLayer {
  Tensor<Scalar> kernels;
  Tensor<Scalar> bias;
  Index stride = 1;
  Index pad = 0;

  ConvLayer() = default;
  ConvLayer(Index kernel_h, Index kernel_w, Index in_channels, Index out_channels, Index stride_ = 1,
            Index pad_ = 0)
      : kernels(Shape{kernel_h, kernel_w, in_channels, out_channels}),
        bias(Shape{out_channels}),
        stride(stride_),
        pad(pad_) {}

  Index kernel_h() const { return kernels.extent(0); }
  Index kernel_w() const { return kernels.extent(1); }
  Index in_channels() const { return kernels.extent(2); }
  Index out_channels() const { return kernels.extent(3); }
  Index out_height(Index h) const { return window_output_extent(h, kernel_h(), stride, pad); }
  Index out_width(Index w) const { return window_output_extent(w, kernel_w(), stride, pad); }

  std::vector<Tensor<Scalar>*> params() { return {&kernels, &bias}; }
  std::vector<const Tensor<Scalar>*> params() const { return {&kernels, &bias}; }
};

namespace detail {

/// Unfolds one (h, w, c) sample into a (oh*ow, kh*kw*c) patch matrix.
template <typename Scalar>
RowMatrix<Scalar> im2col(const Vec<Scalar>& x, Index h, Index w, Index c, Index kh, Index kw, Index stride,
                         Index pad, Index oh, Index ow) {
  RowMatrix<Scalar> cols = RowMatrix<Scalar>::Zero(oh * ow, kh * kw * c);
  for (Index oy = 0; oy < oh; ++oy) {
    for (Index ox = 0; ox < ow; ++ox) {
      Scalar* row = cols.data() + (oy * ow + ox) * cols.cols();
      for (Index ky = 0; ky < kh; ++ky) {
        const Index iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= h) continue;
        for (Index kx = 0; kx < kw; ++kx) {
          const Index ix = ox * stride + kx - pad;
          if (ix < 0 || ix >= w) continue;
          const Scalar* src = x.data() + (iy * w + ix) * c;
          std::copy(src, src + c, row + (ky * kw + kx) * c);
        }
      }
    }
  }
  return cols;
}

template <typename Scalar>
void col2im(const RowMatrix<Scalar>& cols, Vec<Scalar>& x, Index h, Index w, Index c, Index kh, Index kw,
            Index stride, Index pad, Index oh, Index ow) {
  for (Index oy = 0; oy < oh; ++oy) {
    for (Index ox = 0; ox < ow; ++ox) {
      const Scalar* row = cols.data() + (oy * ow + ox) * cols.cols();
      for (Index ky = 0; ky < kh; ++ky) {
        const Index iy = oy * stride + ky - pad;
        if (iy < 0 || iy >= h) continue;
        for (Index kx = 0; kx < kw; ++kx) {
          const Index ix = ox * stride + kx - pad;
          if (ix < 0 || ix >= w) continue;
          Scalar* dst = x.data() + (iy * w + ix) * c;
          const Scalar* src = row + (ky * kw + kx) * c;
          for (Index ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
}

}  // namespace detail

template <typename Scalar>
FeatureMap<Scalar> conv_forward(const ConvLayer<Scalar>& layer, const FeatureMap<Scalar>& x) {
  if (x.channels() != layer.in_channels()) {
    throw DimensionError("conv expects " + std::to_string(layer.in_channels()) + " input channels, got " +
                         std::to_string(x.channels()));
  }
  const Index oh = layer.out_height(x.height());
  const Index ow = layer.out_width(x.width());
  if (oh < 1 || ow < 1) throw DimensionError("conv kernel larger than padded input");
  const Index kdim = layer.kernel_h() * layer.kernel_w() * layer.in_channels();
  Eigen::Map<const RowMatrix<Scalar>> kmat(layer.kernels.data().data(), kdim, layer.out_channels());
  const auto bias = layer.bias.data().transpose();

  FeatureMap<Scalar> y(oh, ow, layer.out_channels(), x.batch());
  for (Index s = 0; s < x.batch(); ++s) {
    const auto cols = detail::im2col<Scalar>(x.sample(s), x.height(), x.width(), x.channels(), layer.kernel_h(),
                                             layer.kernel_w(), layer.stride, layer.pad, oh, ow);
    RowMatrix<Scalar> z = cols * kmat;
    z.rowwise() += bias;
    z = z.cwiseMax(Scalar(0));
    y.set_sample(s, Eigen::Map<const Vec<Scalar>>(z.data(), z.size()));
  }
  return y;
}

/// Needs the forward input x and the (post-ReLU) output y. ReLU's derivative
/// at exactly zero is taken as zero.
template <typename Scalar>
LayerGradients<Scalar> conv_backward(const ConvLayer<Scalar>& layer, const FeatureMap<Scalar>& x,
                                     const FeatureMap<Scalar>& y, const FeatureMap<Scalar>& grad_out) {
  if (grad_out.shape() != y.shape()) throw DimensionError("conv grad_out shape differs from output");
  const Index oh = y.height(), ow = y.width();
  const Index kdim = layer.kernel_h() * layer.kernel_w() * layer.in_channels();
  Eigen::Map<const RowMatrix<Scalar>> kmat(layer.kernels.data().data(), kdim, layer.out_channels());

  LayerGradients<Scalar> g{FeatureMap<Scalar>(x.height(), x.width(), x.channels(), x.batch()),
                           {Tensor<Scalar>(layer.kernels.shape()), Tensor<Scalar>(layer.bias.shape())}};
  Eigen::Map<RowMatrix<Scalar>> dk(g.params[0].data().data(), kdim, layer.out_channels());
  auto& db = g.params[1].data();

  for (Index s = 0; s < x.batch(); ++s) {
    const Vec<Scalar> ys = y.sample(s);
    Vec<Scalar> dzv = grad_out.sample(s);
    for (Index i = 0; i < dzv.size(); ++i) {
      if (!(ys[i] > Scalar(0))) dzv[i] = Scalar(0);
    }
    Eigen::Map<const RowMatrix<Scalar>> dz(dzv.data(), oh * ow, layer.out_channels());
    const auto cols = detail::im2col<Scalar>(x.sample(s), x.height(), x.width(), x.channels(), layer.kernel_h(),
                                             layer.kernel_w(), layer.stride, layer.pad, oh, ow);
    dk.noalias() += cols.transpose() * dz;
    db += dz.colwise().sum().transpose();
    const RowMatrix<Scalar> dcols = dz * kmat.transpose();
    Vec<Scalar> dx = Vec<Scalar>::Zero(x.volume());
    detail::col2im<Scalar>(dcols, dx, x.height(), x.width(), x.channels(), layer.kernel_h(), layer.kernel_w(),
                           layer.stride, layer.pad, oh, ow);
    g.grad_in.set_sample(s, dx);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Local response normalisation across channels

template <typename Scalar>
struct LrnLayer {
  Scalar alpha = Scalar(2);
  Scalar beta = Scalar(1e-4);
  Scalar gamma = Scalar(0.75);
  Scalar sigma = Scalar(2.5);

  /// Inclusive channel window [lo, hi] around channel n for N channels.
  std::pair<Index, Index> window(Index n, Index channels) const {
    const auto lo = Index(std::ceil(double(n) - double(sigma)));
    const auto hi = Index(std::floor(double(n) + double(sigma)));
    return {std::max<Index>(0, lo), std::min<Index>(channels - 1, hi)};
  }

  std::vector<Tensor<Scalar>*> params() { return {}; }
  std::vector<const Tensor<Scalar>*> params() const { return {}; }
};

namespace detail {

/// denom[n] = alpha + beta * sum over the window of x_j^2, for one cell.
template <typename Scalar>
void lrn_denominators(const LrnLayer<Scalar>& layer, const Scalar* x, Index stride, Index channels,
                      Scalar* denom) {
  for (Index n = 0; n < channels; ++n) {
    const auto [lo, hi] = layer.window(n, channels);
    Scalar sum = 0;
    for (Index j = lo; j <= hi; ++j) sum += x[j * stride] * x[j * stride];
    denom[n] = layer.alpha + layer.beta * sum;
  }
}

}  // namespace detail

template <typename Scalar>
FeatureMap<Scalar> lrn_forward(const LrnLayer<Scalar>& layer, const FeatureMap<Scalar>& x) {
  FeatureMap<Scalar> y(x.height(), x.width(), x.channels(), x.batch());
  const Index c = x.channels(), b = x.batch();
  std::vector<Scalar> denom(static_cast<std::size_t>(c));
  for (Index cell = 0; cell < x.cells(); ++cell) {
    for (Index s = 0; s < b; ++s) {
      const Index base = cell * c * b + s;
      const Scalar* in = x.data().data() + base;
      detail::lrn_denominators(layer, in, b, c, denom.data());
      for (Index n = 0; n < c; ++n) {
        y.data()[base + n * b] = in[n * b] / std::pow(denom[std::size_t(n)], layer.gamma);
      }
    }
  }
  return y;
}

/// Full quotient-rule Jacobian: each output channel depends on every input
/// channel inside its window.
template <typename Scalar>
LayerGradients<Scalar> lrn_backward(const LrnLayer<Scalar>& layer, const FeatureMap<Scalar>& x,
                                    const FeatureMap<Scalar>& grad_out) {
  if (grad_out.shape() != x.shape()) throw DimensionError("lrn grad_out shape differs from output");
  LayerGradients<Scalar> g{FeatureMap<Scalar>(x.height(), x.width(), x.channels(), x.batch()), {}};
  const Index c = x.channels(), b = x.batch();
  std::vector<Scalar> denom(static_cast<std::size_t>(c)), coeff(static_cast<std::size_t>(c));
  for (Index cell = 0; cell < x.cells(); ++cell) {
    for (Index s = 0; s < b; ++s) {
      const Index base = cell * c * b + s;
      const Scalar* in = x.data().data() + base;
      const Scalar* go = grad_out.data().data() + base;
      detail::lrn_denominators(layer, in, b, c, denom.data());
      // coeff[n] = g_n * x_n * D_n^(-gamma-1)
      for (Index n = 0; n < c; ++n) {
        coeff[std::size_t(n)] = go[n * b] * in[n * b] * std::pow(denom[std::size_t(n)], -layer.gamma - 1);
      }
      for (Index k = 0; k < c; ++k) {
        const auto [lo, hi] = layer.window(k, c);
        Scalar cross = 0;
        for (Index n = lo; n <= hi; ++n) cross += coeff[std::size_t(n)];
        g.grad_in.data()[base + k * b] = go[k * b] * std::pow(denom[std::size_t(k)], -layer.gamma) -
                                         Scalar(2) * layer.gamma * layer.beta * in[k * b] * cross;
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Sub-sampling: scaled mean over non-overlapping T x T windows plus bias

template <typename Scalar>
struct SubSampleLayer {
  Index window = 2;
  Tensor<Scalar> scale;  // per channel
  Tensor<Scalar> bias;   // per channel

  SubSampleLayer() = default;
  SubSampleLayer(Index window_, Index channels)
      : window(window_), scale(Shape{channels}, Scalar(1)), bias(Shape{channels}) {}

  Index channels() const { return scale.size(); }

  std::vector<Tensor<Scalar>*> params() { return {&scale, &bias}; }
  std::vector<const Tensor<Scalar>*> params() const { return {&scale, &bias}; }
};

template <typename Scalar>
FeatureMap<Scalar> subsample_forward(const SubSampleLayer<Scalar>& layer, const FeatureMap<Scalar>& x) {
  const Index t = layer.window;
  if (x.height() < t || x.width() < t) {
    throw DimensionError("sub-sampling window " + std::to_string(t) + " exceeds input extent");
  }
  if (x.channels() != layer.channels()) throw DimensionError("sub-sampling channel count mismatch");
  const Index oh = x.height() / t, ow = x.width() / t;
  FeatureMap<Scalar> y(oh, ow, x.channels(), x.batch());
  const Scalar norm = Scalar(1) / Scalar(t * t);
  for (Index oy = 0; oy < oh; ++oy)
    for (Index ox = 0; ox < ow; ++ox)
      for (Index ch = 0; ch < x.channels(); ++ch)
        for (Index s = 0; s < x.batch(); ++s) {
          Scalar sum = 0;
          for (Index dy = 0; dy < t; ++dy)
            for (Index dx = 0; dx < t; ++dx) sum += x(oy * t + dy, ox * t + dx, ch, s);
          y(oy, ox, ch, s) = layer.scale[ch] * norm * sum + layer.bias[ch];
        }
  return y;
}

template <typename Scalar>
LayerGradients<Scalar> subsample_backward(const SubSampleLayer<Scalar>& layer, const FeatureMap<Scalar>& x,
                                          const FeatureMap<Scalar>& grad_out) {
  const Index t = layer.window;
  const Index oh = x.height() / t, ow = x.width() / t;
  if (grad_out.height() != oh || grad_out.width() != ow || grad_out.channels() != x.channels() ||
      grad_out.batch() != x.batch()) {
    throw DimensionError("sub-sampling grad_out shape differs from output");
  }
  LayerGradients<Scalar> g{FeatureMap<Scalar>(x.height(), x.width(), x.channels(), x.batch()),
                           {Tensor<Scalar>(layer.scale.shape()), Tensor<Scalar>(layer.bias.shape())}};
  const Scalar norm = Scalar(1) / Scalar(t * t);
  for (Index oy = 0; oy < oh; ++oy)
    for (Index ox = 0; ox < ow; ++ox)
      for (Index ch = 0; ch < x.channels(); ++ch)
        for (Index s = 0; s < x.batch(); ++s) {
          const Scalar go = grad_out(oy, ox, ch, s);
          Scalar sum = 0;
          for (Index dy = 0; dy < t; ++dy)
            for (Index dx = 0; dx < t; ++dx) {
              sum += x(oy * t + dy, ox * t + dx, ch, s);
              g.grad_in(oy * t + dy, ox * t + dx, ch, s) = go * layer.scale[ch] * norm;
            }
          g.params[0][ch] += go * sum * norm;
          g.params[1][ch] += go;
        }
  return g;
}

// ---------------------------------------------------------------------------
// Max pooling

template <typename Scalar>
struct MaxPoolLayer {
  Index window = 2;
  Index stride = 2;

  Index out_extent(Index extent) const { return window_output_extent(extent, window, stride); }

  std::vector<Tensor<Scalar>*> params() { return {}; }
  std::vector<const Tensor<Scalar>*> params() const { return {}; }
};

/// Also returns, per output value, the flat input index that won (first on ties).
template <typename Scalar>
FeatureMap<Scalar> maxpool_forward(const MaxPoolLayer<Scalar>& layer, const FeatureMap<Scalar>& x,
                                   std::vector<Index>* winners = nullptr) {
  if (layer.window > x.height() || layer.window > x.width()) {
    throw DimensionError("max-pool window exceeds spatial extent");
  }
  const Index oh = layer.out_extent(x.height()), ow = layer.out_extent(x.width());
  FeatureMap<Scalar> y(oh, ow, x.channels(), x.batch());
  if (winners) winners->assign(std::size_t(y.data().size()), 0);
  for (Index oy = 0; oy < oh; ++oy)
    for (Index ox = 0; ox < ow; ++ox)
      for (Index ch = 0; ch < x.channels(); ++ch)
        for (Index s = 0; s < x.batch(); ++s) {
          Index best = x.index(oy * layer.stride, ox * layer.stride, ch, s);
          for (Index dy = 0; dy < layer.window; ++dy)
            for (Index dx = 0; dx < layer.window; ++dx) {
              const Index i = x.index(oy * layer.stride + dy, ox * layer.stride + dx, ch, s);
              if (x.data()[i] > x.data()[best]) best = i;
            }
          const Index o = y.index(oy, ox, ch, s);
          y.data()[o] = x.data()[best];
          if (winners) (*winners)[std::size_t(o)] = best;
        }
  return y;
}

template <typename Scalar>
LayerGradients<Scalar> maxpool_backward(const FeatureMap<Scalar>& x, const std::vector<Index>& winners,
                                        const FeatureMap<Scalar>& grad_out) {
  if (Index(winners.size()) != grad_out.data().size()) {
    throw DimensionError("max-pool grad_out shape differs from output");
  }
  LayerGradients<Scalar> g{FeatureMap<Scalar>(x.height(), x.width(), x.channels(), x.batch()), {}};
  for (std::size_t o = 0; o < winners.size(); ++o) g.grad_in.data()[winners[o]] += grad_out.data()[Index(o)];
  return g;
}

// ---------------------------------------------------------------------------
// Fully connected

template <typename Scalar>
struct FcLayer {
  Tensor<Scalar> weights;  // (in, out)
  Tensor<Scalar> bias;     // (out)
  bool hidden = true;      // ReLU on hidden layers, identity on logits

  FcLayer() = default;
  FcLayer(Index fan_in, Index fan_out, bool hidden_ = true)
      : weights(Shape{fan_in, fan_out}), bias(Shape{fan_out}), hidden(hidden_) {}

  Index fan_in() const { return weights.extent(0); }
  Index fan_out() const { return weights.extent(1); }

  std::vector<Tensor<Scalar>*> params() { return {&weights, &bias}; }
  std::vector<const Tensor<Scalar>*> params() const { return {&weights, &bias}; }
};

template <typename Scalar>
Vec<Scalar> fc_forward(const FcLayer<Scalar>& layer, const Vec<Scalar>& x) {
  if (x.size() != layer.fan_in()) {
    throw DimensionError("fully connected layer expects " + std::to_string(layer.fan_in()) + " inputs, got " +
                         std::to_string(x.size()));
  }
  Vec<Scalar> y = layer.weights.matrix().transpose() * x + layer.bias.data();
  if (layer.hidden) y = y.cwiseMax(Scalar(0));
  return y;
}

/// Flattens each batch member's (h, w, c) volume; output is (1, 1, out, batch).
template <typename Scalar>
FeatureMap<Scalar> fc_forward(const FcLayer<Scalar>& layer, const FeatureMap<Scalar>& x) {
  FeatureMap<Scalar> y(1, 1, layer.fan_out(), x.batch());
  for (Index s = 0; s < x.batch(); ++s) y.set_sample(s, fc_forward(layer, x.sample(s)));
  return y;
}

template <typename Scalar>
LayerGradients<Scalar> fc_backward(const FcLayer<Scalar>& layer, const FeatureMap<Scalar>& x,
                                   const FeatureMap<Scalar>& y, const FeatureMap<Scalar>& grad_out) {
  if (grad_out.shape() != y.shape()) throw DimensionError("fc grad_out shape differs from output");
  LayerGradients<Scalar> g{FeatureMap<Scalar>(x.height(), x.width(), x.channels(), x.batch()),
                           {Tensor<Scalar>(layer.weights.shape()), Tensor<Scalar>(layer.bias.shape())}};
  auto dw = g.params[0].matrix();
  for (Index s = 0; s < x.batch(); ++s) {
    Vec<Scalar> dz = grad_out.sample(s);
    if (layer.hidden) {
      const Vec<Scalar> ys = y.sample(s);
      for (Index i = 0; i < dz.size(); ++i) {
        if (!(ys[i] > Scalar(0))) dz[i] = Scalar(0);
      }
    }
    const Vec<Scalar> xs = x.sample(s);
    dw.noalias() += xs * dz.transpose();
    g.params[1].data() += dz;
    g.grad_in.set_sample(s, layer.weights.matrix() * dz);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Training objective

template <typename Scalar>
struct LossAndGradient {
  Scalar loss;
  Vec<Scalar> grad;
};

/// Cross-entropy of softmax(logits) against a class index, stabilised by
/// subtracting the max logit. Gradient is softmax - onehot.
template <typename Scalar>
LossAndGradient<Scalar> softmax_xent(const Vec<Scalar>& logits, Index label) {
  if (label < 0 || label >= logits.size()) {
    throw IndexError("label " + std::to_string(label) + " out of range for " + std::to_string(logits.size()) +
                     " logits");
  }
  const Index top = argmax(logits);
  const Vec<Scalar> shifted = logits.array() - logits[top];
  const Vec<Scalar> e = shifted.array().exp();
  // log(sum e) = log1p(sum of non-top terms); keeps tiny losses representable.
  Scalar rest = 0;
  for (Index i = 0; i < e.size(); ++i) {
    if (i != top) rest += e[i];
  }
  const Scalar z = Scalar(1) + rest;
  LossAndGradient<Scalar> out{std::log1p(rest) - shifted[label], e / z};
  out.grad[label] -= Scalar(1);
  return out;
}

}  // namespace s2ica
