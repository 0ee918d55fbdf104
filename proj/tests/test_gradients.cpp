#include <gtest/gtest.h>

#include "s2ica/gradcheck.hpp"

using namespace s2ica;

namespace {

FeatureMap<double> random_map(Index h, Index w, Index c, Index b, Rng& rng, double lo = -1, double hi = 1) {
  FeatureMap<double> m(h, w, c, b);
  for (Index i = 0; i < m.data().size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST(Gradients, SuiteWithinTolerance) {
  for (std::uint64_t seed : {1u, 2u}) {
    for (const auto& r : gradient_suite(seed)) {
      EXPECT_LE(r.max_rel_error, 1e-5) << r.name << " seed " << seed;
      EXPECT_GT(r.checked, 0) << r.name;
    }
  }
}

TEST(Gradients, BatchedConvAndLrn) {
  Rng rng(31);
  ConvLayer<double> conv(3, 3, 2, 2, 1, 1);
  for (Index i = 0; i < conv.kernels.size(); ++i) conv.kernels[i] = rng.uniform(-1, 1);
  GradCheckConfig cfg;
  EXPECT_LE(check_layer("conv_batch", conv, random_map(4, 4, 2, 3, rng), {}, cfg).max_rel_error, 1e-5);
  EXPECT_LE(check_layer("lrn_batch", LrnLayer<double>{}, random_map(2, 2, 6, 2, rng, -30, 30), {}, cfg).max_rel_error,
            1e-5);
}

TEST(Gradients, SuBatchWithMixedDraws) {
  Rng rng(32);
  const auto x = random_map(8, 8, 1, 4, rng);
  Rng draws(5);
  SuConfig cfg{16, 0.5, 0, SuMode::train, true};
  auto r = su_forward(cfg, x, draws);
  FeatureMap<double> g = random_map(8, 8, 1, 4, rng);
  const auto back = su_backward(r.state, g);
  // <S x, g> == <x, S^T g> for the sampled per-member gating.
  EXPECT_NEAR(r.output.data().dot(g.data()), x.data().dot(back.data()), 1e-12);
}

TEST(Gradients, ReluPassesOnlyPositiveInputs) {
  ConvLayer<double> conv(1, 1, 1, 1);
  conv.kernels[0] = 1.0;
  FeatureMap<double> x(1, 3, 1, 1);
  x.data() << -1, 0, 2;
  ForwardContext ctx;
  LayerState<double> state;
  layer_forward<double>(conv, x, ctx, &state);
  const auto g = layer_backward<double>(conv, state, FeatureMap<double>(1, 3, 1, 1, 1.0));
  EXPECT_EQ(g.grad_in.data(), (Eigen::Vector3d(0, 0, 1)));
}

TEST(Gradients, MissingStateIsStateError) {
  LayerState<double> empty;
  EXPECT_THROW(layer_backward<double>(LrnLayer<double>{}, empty, FeatureMap<double>(1, 1, 1, 1)), StateError);
  auto net = Network<double>::build(NetworkSpec::toy(3), InitConfig{1});
  Trace<double> short_trace(2);
  EXPECT_THROW(net.backward(short_trace, FeatureMap<double>(1, 1, 3, 1)), StateError);
}

TEST(Gradients, GradShapeMismatchIsDimensionError) {
  ForwardContext ctx;
  LayerState<double> state;
  layer_forward<double>(LrnLayer<double>{}, FeatureMap<double>(2, 2, 3, 1), ctx, &state);
  EXPECT_THROW(layer_backward<double>(LrnLayer<double>{}, state, FeatureMap<double>(2, 2, 4, 1)), DimensionError);
}
