#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "s2ica/layers.hpp"
#include "s2ica/random.hpp"
#include "s2ica/su_layer.hpp"

namespace s2ica {

// ---------------------------------------------------------------------------
// Specification

struct ConvSpec {
  Index out_channels = 1;
  Index kernel = 3;
  Index stride = 1;
  Index pad = 0;
  bool operator==(const ConvSpec&) const = default;
};
struct LrnSpec {
  double alpha = 2.0;
  double beta = 1e-4;
  double gamma = 0.75;
  double sigma = 2.5;
  bool operator==(const LrnSpec&) const = default;
};
struct SubSampleSpec {
  Index window = 2;
  bool operator==(const SubSampleSpec&) const = default;
};
struct SuSpec {
  Index blocks = 4;
  double probability = 0.5;
  bool infer_apply = true;
  bool operator==(const SuSpec&) const = default;
};
struct MaxPoolSpec {
  Index window = 2;
  Index stride = 2;
  bool operator==(const MaxPoolSpec&) const = default;
};
struct FcSpec {
  Index out = 1;
  bool hidden = true;
  bool operator==(const FcSpec&) const = default;
};

using LayerSpec = std::variant<ConvSpec, LrnSpec, SubSampleSpec, SuSpec, MaxPoolSpec, FcSpec>;

std::string layer_kind(const LayerSpec& spec);

/// full and toy enforce the five-conv / four-FC census; custom only checks
/// shapes and SU placement.
enum class Profile { full, toy, custom };

std::string to_string(Profile profile);
Profile profile_from_string(const std::string& name);

/// (height, width, channels) of one activation.
struct ActivationShape {
  Index height = 0, width = 0, channels = 0;
  Index volume() const { return height * width * channels; }
  bool operator==(const ActivationShape&) const = default;
};

struct NetworkSpec {
  ActivationShape input{32, 32, 1};
  std::vector<LayerSpec> layers;
  Profile profile = Profile::custom;

  /// Index of the final convolution layer (the feature tap).
  Index last_conv() const;
  Index count_conv() const;
  Index count_fc() const;
  /// Index of the SU layer if present.
  std::optional<Index> su_index() const;
  Index classes() const;

  /// Activation shape after each layer; throws SpecificationError when a
  /// layer cannot be applied.
  std::vector<ActivationShape> output_shapes() const;
  void validate() const;
  /// Number of learned scalars, computed without building the network.
  Index parameter_count() const;

  /// The layers up to and including the last convolution.
  NetworkSpec conv_stack() const;
  /// Copy with an SU layer right after the first sub-sampling layer.
  NetworkSpec with_su(const SuSpec& su) const;
  NetworkSpec without_su() const;

  /// Desk-scale profile on side x side inputs.
  static NetworkSpec toy(Index classes, Index side = 32, Index channels = 1);
  /// 224 x 224 profile with AlexNet-like widths and a four-layer FC head.
  static NetworkSpec full(Index classes, Index hidden = 4096);

  bool operator==(const NetworkSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Runtime layers

template <typename Scalar>
using Layer = std::variant<ConvLayer<Scalar>, LrnLayer<Scalar>, SubSampleLayer<Scalar>, SuSpec,
                           MaxPoolLayer<Scalar>, FcLayer<Scalar>>;

struct ForwardContext {
  SuMode mode = SuMode::infer;
  Rng* rng = nullptr;
  /// When set in train mode, overrides the Bernoulli draw (fixed r).
  std::optional<bool> fixed_r;
};

/// Cached forward state of one layer.
template <typename Scalar>
struct LayerState {
  FeatureMap<Scalar> input;
  FeatureMap<Scalar> output;
  std::vector<Index> winners;
  SuState su;
  bool valid = false;
};

template <typename Scalar>
using Trace = std::vector<LayerState<Scalar>>;

template <typename Scalar>
FeatureMap<Scalar> layer_forward(const Layer<Scalar>& layer, const FeatureMap<Scalar>& x, ForwardContext& ctx,
                                 LayerState<Scalar>* state) {
  FeatureMap<Scalar> y;
  std::visit(
      [&](const auto& l) {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, ConvLayer<Scalar>>) {
          y = conv_forward(l, x);
        } else if constexpr (std::is_same_v<L, LrnLayer<Scalar>>) {
          y = lrn_forward(l, x);
        } else if constexpr (std::is_same_v<L, SubSampleLayer<Scalar>>) {
          y = subsample_forward(l, x);
        } else if constexpr (std::is_same_v<L, SuSpec>) {
          SuConfig cfg{l.blocks, l.probability, 0, ctx.mode, l.infer_apply};
          if (ctx.mode == SuMode::train && ctx.fixed_r) {
            cfg.mode = SuMode::infer;
            cfg.infer_apply = *ctx.fixed_r;
          }
          Rng fallback(0);
          auto r = su_forward(cfg, x, ctx.rng ? *ctx.rng : fallback);
          y = std::move(r.output);
          if (state) state->su = std::move(r.state);
        } else if constexpr (std::is_same_v<L, MaxPoolLayer<Scalar>>) {
          y = maxpool_forward(l, x, state ? &state->winners : nullptr);
        } else {
          y = fc_forward(l, x);
        }
      },
      layer);
  if (state) {
    state->input = x;
    state->output = y;
    state->valid = true;
  }
  return y;
}

template <typename Scalar>
LayerGradients<Scalar> layer_backward(const Layer<Scalar>& layer, const LayerState<Scalar>& state,
                                      const FeatureMap<Scalar>& grad_out) {
  if (!state.valid) throw StateError("backward called without a cached forward pass");
  if (grad_out.shape() != state.output.shape()) {
    throw DimensionError("grad_out shape " + shape_string(grad_out.shape()) + " differs from forward output " +
                         shape_string(state.output.shape()));
  }
  return std::visit(
      [&](const auto& l) -> LayerGradients<Scalar> {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, ConvLayer<Scalar>>) {
          return conv_backward(l, state.input, state.output, grad_out);
        } else if constexpr (std::is_same_v<L, LrnLayer<Scalar>>) {
          return lrn_backward(l, state.input, grad_out);
        } else if constexpr (std::is_same_v<L, SubSampleLayer<Scalar>>) {
          return subsample_backward(l, state.input, grad_out);
        } else if constexpr (std::is_same_v<L, SuSpec>) {
          return {su_backward(state.su, grad_out), {}};
        } else if constexpr (std::is_same_v<L, MaxPoolLayer<Scalar>>) {
          return maxpool_backward(state.input, state.winners, grad_out);
        } else {
          return fc_backward(l, state.input, state.output, grad_out);
        }
      },
      layer);
}

template <typename Scalar>
std::vector<Tensor<Scalar>*> layer_params(Layer<Scalar>& layer) {
  return std::visit(
      [](auto& l) -> std::vector<Tensor<Scalar>*> {
        if constexpr (std::is_same_v<std::decay_t<decltype(l)>, SuSpec>) {
          return {};
        } else {
          return l.params();
        }
      },
      layer);
}

template <typename Scalar>
std::vector<const Tensor<Scalar>*> layer_params(const Layer<Scalar>& layer) {
  return std::visit(
      [](const auto& l) -> std::vector<const Tensor<Scalar>*> {
        if constexpr (std::is_same_v<std::decay_t<decltype(l)>, SuSpec>) {
          return {};
        } else {
          return l.params();
        }
      },
      layer);
}

/// Weight initialisation. A non-positive weight_std selects He scaling,
/// sqrt(2 / fan_in); biases start at zero and sub-sampling scales at one.
struct InitConfig {
  std::uint64_t seed = 0;
  double weight_std = 0.0;
};

/// Per-layer parameter gradients, aligned with Network::params().
template <typename Scalar>
struct NetworkGradients {
  std::vector<Tensor<Scalar>> params;
  FeatureMap<Scalar> grad_in;
};

template <typename Scalar>
class Network {
 public:
  Network() = default;

  /// Builds runtime layers for a validated spec; parameters are zero until
  /// initialize() runs.
  explicit Network(NetworkSpec spec, std::string variant = "base") : spec_(std::move(spec)), variant_(std::move(variant)) {
    spec_.validate();
    shapes_ = spec_.output_shapes();
    ActivationShape in = spec_.input;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
      layers_.push_back(make_layer(spec_.layers[i], in));
      in = shapes_[i];
    }
  }

  static Network build(NetworkSpec spec, const InitConfig& init, std::string variant = "base") {
    Network net(std::move(spec), std::move(variant));
    net.initialize(init);
    return net;
  }

  void initialize(const InitConfig& init) {
    Rng rng(init.seed);
    for (auto& layer : layers_) {
      std::visit(
          [&](auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, ConvLayer<Scalar>>) {
              fill_gaussian(l.kernels, init, l.kernel_h() * l.kernel_w() * l.in_channels(), rng);
              l.bias.data().setZero();
            } else if constexpr (std::is_same_v<L, FcLayer<Scalar>>) {
              fill_gaussian(l.weights, init, l.fan_in(), rng);
              l.bias.data().setZero();
            } else if constexpr (std::is_same_v<L, SubSampleLayer<Scalar>>) {
              l.scale.data().setOnes();
              l.bias.data().setZero();
            }
          },
          layer);
    }
  }

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<Layer<Scalar>>& layers() const { return layers_; }
  std::vector<Layer<Scalar>>& layers() { return layers_; }
  const std::string& variant() const { return variant_; }
  void set_variant(std::string v) { variant_ = std::move(v); }

  std::vector<Tensor<Scalar>*> params() {
    std::vector<Tensor<Scalar>*> out;
    for (auto& l : layers_)
      for (auto* p : layer_params(l)) out.push_back(p);
    return out;
  }
  std::vector<const Tensor<Scalar>*> params() const {
    std::vector<const Tensor<Scalar>*> out;
    for (const auto& l : layers_)
      for (const auto* p : layer_params(l)) out.push_back(p);
    return out;
  }
  Index parameter_count() const {
    Index n = 0;
    for (const auto* p : params()) n += p->size();
    return n;
  }

  /// Runs layers [begin, end) on x.
  FeatureMap<Scalar> forward_range(const FeatureMap<Scalar>& x, std::size_t begin, std::size_t end,
                                   ForwardContext& ctx, Trace<Scalar>* trace = nullptr) const {
    const ActivationShape expected = spec_input_at(begin);
    if (x.height() != expected.height || x.width() != expected.width || x.channels() != expected.channels) {
      throw DimensionError("input (" + std::to_string(x.height()) + ", " + std::to_string(x.width()) + ", " +
                           std::to_string(x.channels()) + ") does not match the network input shape");
    }
    if (trace) trace->assign(layers_.size(), {});
    FeatureMap<Scalar> a = x;
    for (std::size_t i = begin; i < end; ++i) {
      a = layer_forward(layers_[i], a, ctx, trace ? &(*trace)[i] : nullptr);
    }
    return a;
  }

  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, ForwardContext& ctx, Trace<Scalar>* trace = nullptr) const {
    return forward_range(x, 0, layers_.size(), ctx, trace);
  }

  /// Inference-mode forward returning logits of a single sample.
  Vec<Scalar> predict_logits(const FeatureMap<Scalar>& x) const {
    ForwardContext ctx;
    return forward(x, ctx).sample(0);
  }

  /// ReLU activations at the last convolution layer (inference mode).
  FeatureMap<Scalar> last_conv_activations(const FeatureMap<Scalar>& x) const {
    ForwardContext ctx;
    return forward_range(x, 0, std::size_t(spec_.last_conv()) + 1, ctx);
  }

  /// Backpropagates grad_logits through a trace from forward().
  NetworkGradients<Scalar> backward(const Trace<Scalar>& trace, const FeatureMap<Scalar>& grad_logits) const {
    if (trace.size() != layers_.size()) throw StateError("trace does not match this network");
    std::vector<std::vector<Tensor<Scalar>>> per_layer(layers_.size());
    FeatureMap<Scalar> g = grad_logits;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      auto lg = layer_backward(layers_[i], trace[i], g);
      per_layer[i] = std::move(lg.params);
      g = std::move(lg.grad_in);
    }
    NetworkGradients<Scalar> out;
    out.grad_in = std::move(g);
    for (auto& layer : per_layer)
      for (auto& t : layer) out.params.push_back(std::move(t));
    return out;
  }

  /// Softmax cross-entropy of one sample plus gradients.
  Scalar loss_and_gradients(const FeatureMap<Scalar>& x, Index label, ForwardContext& ctx,
                            NetworkGradients<Scalar>* grads) const {
    Trace<Scalar> trace;
    const auto logits = forward(x, ctx, grads ? &trace : nullptr);
    auto lg = softmax_xent<Scalar>(logits.sample(0), label);
    if (grads) {
      FeatureMap<Scalar> g(1, 1, logits.channels(), 1);
      g.data() = lg.grad;
      *grads = backward(trace, g);
    }
    return lg.loss;
  }

  template <typename Other>
  Network<Other> cast() const {
    Network<Other> out(spec_, variant_);
    auto dst = out.params();
    auto src = params();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<Other>();
    return out;
  }

  bool operator==(const Network& other) const {
    if (!(spec_ == other.spec_) || variant_ != other.variant_) return false;
    auto a = params();
    auto b = other.params();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(*a[i] == *b[i])) return false;
    }
    return true;
  }

 private:
  ActivationShape spec_input_at(std::size_t layer) const {
    if (layer == 0) return spec_.input;
    return shapes_[layer - 1];
  }

  static void fill_gaussian(Tensor<Scalar>& t, const InitConfig& init, Index fan_in, Rng& rng) {
    const double std = init.weight_std > 0 ? init.weight_std : std::sqrt(2.0 / double(fan_in));
    for (Index i = 0; i < t.size(); ++i) t[i] = Scalar(rng.normal(0.0, std));
  }

  static Layer<Scalar> make_layer(const LayerSpec& spec, const ActivationShape& in) {
    return std::visit(
        [&](const auto& s) -> Layer<Scalar> {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConvSpec>) {
            return ConvLayer<Scalar>(s.kernel, s.kernel, in.channels, s.out_channels, s.stride, s.pad);
          } else if constexpr (std::is_same_v<S, LrnSpec>) {
            return LrnLayer<Scalar>{Scalar(s.alpha), Scalar(s.beta), Scalar(s.gamma), Scalar(s.sigma)};
          } else if constexpr (std::is_same_v<S, SubSampleSpec>) {
            return SubSampleLayer<Scalar>(s.window, in.channels);
          } else if constexpr (std::is_same_v<S, SuSpec>) {
            return s;
          } else if constexpr (std::is_same_v<S, MaxPoolSpec>) {
            return MaxPoolLayer<Scalar>{s.window, s.stride};
          } else {
            return FcLayer<Scalar>(in.volume(), s.out, s.hidden);
          }
        },
        spec);
  }

  NetworkSpec spec_;
  std::string variant_ = "base";
  std::vector<ActivationShape> shapes_;
  std::vector<Layer<Scalar>> layers_;
};

}  // namespace s2ica
