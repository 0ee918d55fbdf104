#include <gtest/gtest.h>

#include <algorithm>

#include "s2ica/su_layer.hpp"

using namespace s2ica;

namespace {

FeatureMap<float> counting_map(Index h, Index w, Index c = 1, Index b = 1) {
  FeatureMap<float> m(h, w, c, b);
  for (Index i = 0; i < m.data().size(); ++i) m.data()[i] = float(i + 1);
  return m;
}

FeatureMap<float> random_map(Index h, Index w, Index c, Index b, Rng& rng) {
  FeatureMap<float> m(h, w, c, b);
  for (Index i = 0; i < m.data().size(); ++i) m.data()[i] = float(rng.uniform(-1, 1));
  return m;
}

std::vector<float> channel_values(const FeatureMap<float>& m, Index c, Index s) {
  std::vector<float> v;
  for (Index y = 0; y < m.height(); ++y)
    for (Index x = 0; x < m.width(); ++x) v.push_back(m(y, x, c, s));
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(BlockGrid, SingleBlockForLevelOne) {
  const auto g = build_block_grid(4, 4, 4);
  ASSERT_EQ(g.grid_rows, 1);
  EXPECT_EQ(g(0, 0), (BlockScope{0, 4, 0, 4}));
}

TEST(BlockGrid, LevelTwoGivesFourByFourBlocks) {
  const auto g = build_block_grid(8, 8, 16);
  ASSERT_EQ(g.grid_rows, 2);
  ASSERT_EQ(g.grid_cols, 2);
  EXPECT_EQ(g(0, 0), (BlockScope{0, 4, 0, 4}));
  EXPECT_EQ(g(0, 1), (BlockScope{0, 4, 4, 8}));
  EXPECT_EQ(g(1, 0), (BlockScope{4, 8, 0, 4}));
  EXPECT_EQ(g(1, 1), (BlockScope{4, 8, 4, 8}));
}

TEST(BlockGrid, BlocksTileEveryCellOnce) {
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = std::vector<Index>{4, 9, 16, 36, 64, 100}[rng.below(6)];
    const Index level = isqrt(n) / 2;
    const Index h = level + Index(rng.below(20)), w = level + Index(rng.below(20));
    const auto g = build_block_grid(h, w, n);
    std::vector<int> hits(std::size_t(h * w), 0);
    for (const auto& s : g.scopes)
      for (Index y = s.row_begin; y < s.row_end; ++y)
        for (Index x = s.col_begin; x < s.col_end; ++x) ++hits[std::size_t(y * w + x)];
    EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int k) { return k == 1; }));
  }
}

TEST(BlockGrid, MapSmallerThanGridIsDimensionError) {
  EXPECT_THROW(build_block_grid(3, 8, 64), DimensionError);
  EXPECT_THROW(build_block_grid(4, 4, 1), ConfigurationError);
}

TEST(Transform, SwapForFourBlocks) {
  TransformMatrix s(2, 2);
  s << 0, 1, 1, 0;
  EXPECT_EQ(build_transform(4), s);
  EXPECT_EQ(swap_matrix(), s);
}

TEST(Transform, BlockDiagonalForSixteen) {
  TransformMatrix t = TransformMatrix::Zero(4, 4);
  t(0, 1) = t(1, 0) = t(2, 3) = t(3, 2) = 1;
  EXPECT_EQ(build_transform(16), t);
}

TEST(Transform, PermutationMatrixProperties) {
  for (Index n : {4, 16, 36, 64, 144}) {
    const auto t = build_transform(n);
    const Index k = isqrt(n);
    EXPECT_TRUE((t.rowwise().sum().array() == 1).all());
    EXPECT_TRUE((t.colwise().sum().array() == 1).all());
    EXPECT_TRUE(((t.array() == 0) || (t.array() == 1)).all());
    EXPECT_EQ(t * t.transpose(), TransformMatrix::Identity(k, k));
    EXPECT_EQ(t * t, TransformMatrix::Identity(k, k));
  }
}

TEST(Transform, OddRootOrNonSquareIsConfigurationError) {
  EXPECT_THROW(build_transform(9), ConfigurationError);
  EXPECT_THROW(build_transform(8), ConfigurationError);
}

TEST(BlockPermutation, TwoByTwoSymbolic) {
  const auto u = build_scope_matrix(4, 4, 4);
  const auto v = apply_block_permutation(u, build_transform(4));
  EXPECT_EQ(v(0, 0), u(1, 1));
  EXPECT_EQ(v(0, 1), u(1, 0));
  EXPECT_EQ(v(1, 0), u(0, 1));
  EXPECT_EQ(v(1, 1), u(0, 0));
  EXPECT_EQ(apply_block_permutation(v, build_transform(4)), u);
}

TEST(BlockPermutation, FourByFourMatchesPairSwapOracle) {
  const auto u = build_scope_matrix(8, 12, 16);
  const auto v = apply_block_permutation(u, build_transform(16));
  auto partner = [](Index i) { return i ^ 1; };
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) EXPECT_EQ(v(i, j), u(partner(i), partner(j)));
}

TEST(BlockPermutation, SizeMismatchIsDimensionError) {
  EXPECT_THROW(apply_block_permutation(build_scope_matrix(8, 8, 16), build_transform(4)), DimensionError);
  TransformMatrix bad = TransformMatrix::Ones(2, 2);
  EXPECT_THROW(apply_block_permutation(build_scope_matrix(4, 4, 4), bad), ConfigurationError);
}

TEST(Shuffle, FourByFourOracle) {
  const auto [y, map] = shuffle_alg1(counting_map(4, 4), 4);
  const std::vector<float> expected{11, 12, 9, 10, 15, 16, 13, 14, 3, 4, 1, 2, 7, 8, 5, 6};
  for (Index i = 0; i < 16; ++i) EXPECT_EQ(y.data()[i], expected[std::size_t(i)]);
  EXPECT_FALSE(map.is_identity());
}

TEST(Shuffle, EvenExtentsAreAnInvolution) {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const Index h = 2 * (1 + Index(rng.below(8))), w = 2 * (1 + Index(rng.below(8)));
    const auto x = random_map(h, w, 2, 1, rng);
    const auto once = shuffle_alg1(x, 4).first;
    EXPECT_EQ(shuffle_alg1(once, 4).first, x);
  }
}

TEST(Shuffle, PreservesValuesPerChannel) {
  Rng rng(43);
  const auto x = random_map(9, 7, 3, 2, rng);
  const auto y = shuffle_alg1(x, 16).first;
  for (Index c = 0; c < 3; ++c)
    for (Index s = 0; s < 2; ++s) EXPECT_EQ(channel_values(x, c, s), channel_values(y, c, s));
}

TEST(Shuffle, OddExtentRotatesByFloorHalf) {
  const auto map = shuffle_permutation(3, 1, 4);
  EXPECT_EQ(map.forward, (std::vector<Index>{1, 2, 0}));
}

TEST(Shuffle, MatrixFormAgreesForFourBlocks) {
  Rng rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    const Index h = 2 * (1 + Index(rng.below(12))), w = 2 * (1 + Index(rng.below(12)));
    const auto u = build_scope_matrix(h, w, 4);
    const auto matrix_form = block_permutation_map(u, apply_block_permutation(u, build_transform(4)));
    EXPECT_EQ(matrix_form, shuffle_permutation(h, w, 4)) << h << "x" << w;
  }
}

TEST(PermutationMap, FromForwardChecksBijection) {
  EXPECT_THROW(PermutationMap::from_forward(1, 3, {0, 0, 1}), DimensionError);
  EXPECT_THROW(PermutationMap::from_forward(1, 3, {0, 1}), DimensionError);
  const auto p = PermutationMap::from_forward(1, 3, {2, 0, 1});
  EXPECT_EQ(p.inverse, (std::vector<Index>{1, 2, 0}));
  EXPECT_TRUE(PermutationMap::identity(2, 2).is_identity());
}

TEST(SuForward, ProbabilityZeroIsIdentityAndOneShuffles) {
  Rng rng(45);
  const auto x = random_map(8, 8, 2, 3, rng);
  SuConfig never{4, 0.0, 1, SuMode::train, true};
  SuConfig always{4, 1.0, 1, SuMode::train, true};
  EXPECT_EQ(su_forward(never, x).output, x);
  EXPECT_EQ(su_forward(always, x).output, shuffle_alg1(x, 4).first);
}

TEST(SuForward, InferenceModeIsDeterministic) {
  Rng rng(46);
  const auto x = random_map(8, 8, 1, 1, rng);
  SuConfig on{4, 0.5, 1, SuMode::infer, true};
  SuConfig off{4, 0.5, 1, SuMode::infer, false};
  EXPECT_EQ(su_forward(on, x).output, shuffle_alg1(x, 4).first);
  EXPECT_EQ(su_forward(off, x).output, x);
}

TEST(SuForward, EmpiricalRateNearProbability) {
  SuConfig cfg{4, 0.5, 7, SuMode::train, true};
  Rng rng(cfg.seed);
  const FeatureMap<float> x(4, 4, 1, 10000);
  const auto r = su_forward(cfg, x, rng);
  const double rate = double(std::count(r.state.applied.begin(), r.state.applied.end(), 1)) / 10000.0;
  EXPECT_NEAR(rate, 0.5, 0.02);
}

TEST(SuForward, ChannelStatisticsInvariant) {
  Rng rng(47);
  const auto x = random_map(6, 10, 3, 1, rng);
  SuConfig cfg{16, 1.0, 0, SuMode::train, true};
  const auto y = su_forward(cfg, x).output;
  for (Index c = 0; c < 3; ++c) {
    const auto a = channel_values(x, c, 0), b = channel_values(y, c, 0);
    EXPECT_EQ(a.back(), b.back());
    EXPECT_EQ(a, b);
  }
}

TEST(SuBackward, InverseRestoresOrderAndIdentityWhenOff) {
  const auto x = counting_map(6, 4, 2, 2);
  SuConfig cfg{4, 1.0, 0, SuMode::train, true};
  const auto r = su_forward(cfg, x);
  EXPECT_EQ(su_backward(r.state, r.output), x);
  SuConfig off{4, 0.0, 0, SuMode::train, true};
  const auto r0 = su_forward(off, x);
  EXPECT_EQ(su_backward(r0.state, x), x);
}

TEST(SuBackward, MissingOrStaleStateIsStateError) {
  EXPECT_THROW(su_backward(SuState{}, FeatureMap<float>(4, 4, 1, 1)), StateError);
  SuConfig cfg{4, 1.0, 0, SuMode::train, true};
  const auto r = su_forward(cfg, FeatureMap<float>(4, 4, 1, 1));
  EXPECT_THROW(su_backward(r.state, FeatureMap<float>(6, 4, 1, 1)), StateError);
}

TEST(SuConfig, RejectsInvalidProbability) {
  EXPECT_THROW((SuConfig{4, 1.5}).validate(), ConfigurationError);
  EXPECT_THROW((SuConfig{4, -0.1}).validate(), ConfigurationError);
  EXPECT_EQ((SuConfig{64}).level(), 4);
}
