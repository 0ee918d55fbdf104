#include "s2ica/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace s2ica {

namespace {

void randomize(Tensor<double>& t, Rng& rng, double lo, double hi) {
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
}

/// Entry indices to probe: all, or a seeded sample without replacement.
std::vector<Index> probe_entries(Index size, Index limit, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(size));
  std::iota(idx.begin(), idx.end(), Index(0));
  if (limit <= 0 || limit >= size) return idx;
  for (Index i = 0; i < limit; ++i) std::swap(idx[std::size_t(i)], idx[std::size_t(i) + rng.below(std::uint64_t(size - i))]);
  idx.resize(std::size_t(limit));
  return idx;
}

/// Compares analytic[i] with central differences of loss() in *value.
void compare(double* value, const Eigen::VectorXd& analytic, const std::function<double()>& loss,
             const GradCheckConfig& cfg, Rng& rng, GradCheckResult& out) {
  for (Index i : probe_entries(analytic.size(), cfg.max_entries, rng)) {
    const double saved = value[i];
    value[i] = saved + cfg.epsilon;
    const double up = loss();
    value[i] = saved - cfg.epsilon;
    const double down = loss();
    value[i] = saved;
    const double numeric = (up - down) / (2 * cfg.epsilon);
    const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), cfg.floor);
    out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic[i] - numeric) / denom);
    ++out.checked;
  }
}

}  // namespace

GradCheckResult check_layer(const std::string& name, Layer<double> layer, const FeatureMap<double>& x_in,
                            const ForwardContext& ctx_in, const GradCheckConfig& cfg) {
  Rng rng(cfg.seed);
  FeatureMap<double> x = x_in;
  ForwardContext ctx = ctx_in;
  LayerState<double> state;
  const auto y = layer_forward(layer, x, ctx, &state);
  FeatureMap<double> r(y.height(), y.width(), y.channels(), y.batch());
  randomize(r.tensor(), rng, -1.0, 1.0);
  const auto grads = layer_backward(layer, state, r);

  auto loss = [&] {
    ForwardContext c = ctx_in;
    return layer_forward<double>(layer, x, c, nullptr).data().dot(r.data());
  };
  GradCheckResult out{name};
  compare(x.data().data(), grads.grad_in.data(), loss, cfg, rng, out);
  auto params = layer_params(layer);
  for (std::size_t p = 0; p < params.size(); ++p) {
    compare(params[p]->data().data(), grads.params[p].data(), loss, cfg, rng, out);
  }
  return out;
}

GradCheckResult check_network(const std::string& name, Network<double> net, const FeatureMap<double>& x_in,
                              Index label, const ForwardContext& ctx_in, const GradCheckConfig& cfg) {
  Rng rng(cfg.seed);
  FeatureMap<double> x = x_in;
  ForwardContext ctx = ctx_in;
  NetworkGradients<double> grads;
  net.loss_and_gradients(x, label, ctx, &grads);
  auto loss = [&] {
    ForwardContext c = ctx_in;
    return net.loss_and_gradients(x, label, c, nullptr);
  };
  GradCheckResult out{name};
  compare(x.data().data(), grads.grad_in.data(), loss, cfg, rng, out);
  auto params = net.params();
  for (std::size_t p = 0; p < params.size(); ++p) {
    compare(params[p]->data().data(), grads.params[p].data(), loss, cfg, rng, out);
  }
  return out;
}

std::vector<GradCheckResult> gradient_suite(std::uint64_t seed) {
  Rng rng(seed);
  GradCheckConfig cfg;
  cfg.seed = derive_seed(seed, 1);
  auto map = [&](Index h, Index w, Index c, double lo, double hi) {
    FeatureMap<double> m(h, w, c, 1);
    randomize(m.tensor(), rng, lo, hi);
    return m;
  };
  ForwardContext infer;
  std::vector<GradCheckResult> out;

  ConvLayer<double> conv(3, 3, 2, 3, 2, 1);
  randomize(conv.kernels, rng, -1, 1);
  randomize(conv.bias, rng, -0.5, 0.5);
  out.push_back(check_layer("conv", conv, map(6, 5, 2, -1, 1), infer, cfg));

  out.push_back(check_layer("lrn", LrnLayer<double>{}, map(3, 3, 8, -20, 20), infer, cfg));

  SubSampleLayer<double> sub(2, 3);
  randomize(sub.scale, rng, 0.5, 2);
  randomize(sub.bias, rng, -1, 1);
  out.push_back(check_layer("subsample", sub, map(5, 4, 3, -1, 1), infer, cfg));

  FcLayer<double> fc(12, 5, true);
  randomize(fc.weights, rng, -1, 1);
  randomize(fc.bias, rng, -0.5, 0.5);
  out.push_back(check_layer("fc", fc, map(2, 2, 3, -1, 1), infer, cfg));

  out.push_back(check_layer("maxpool", MaxPoolLayer<double>{2, 2}, map(4, 6, 2, -1, 1), infer, cfg));

  for (bool r : {false, true}) {
    ForwardContext fixed{SuMode::train, nullptr, r};
    out.push_back(check_layer(r ? "su_r1" : "su_r0", SuSpec{16, 0.5, true}, map(8, 8, 2, -1, 1), fixed, cfg));
  }

  auto toy = Network<double>::build(NetworkSpec::toy(4).with_su(SuSpec{4, 0.5, true}), InitConfig{seed});
  GradCheckConfig net_cfg = cfg;
  net_cfg.max_entries = 16;
  ForwardContext shuffled{SuMode::train, nullptr, true};
  out.push_back(check_network("toy_network", toy, map(32, 32, 1, 0, 1), 2, shuffled, net_cfg));
  return out;
}

}  // namespace s2ica
