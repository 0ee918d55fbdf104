#pragma once

#include <cstdint>
#include <vector>

#include "s2ica/random.hpp"
#include "s2ica/tensor.hpp"

namespace s2ica {

// Spatially unstructured layer: a block-wise spatial permutation of every
// channel, applied at random during training so the network does not rely on
// the layout of the patterns it sees.

enum class SuMode { train, infer };

struct SuConfig {
  /// Requested block count n; the shuffle works on a level x level grid with
  /// level = floor(floor(sqrt(n)) / 2).
  Index blocks = 4;
  /// Probability that a batch member is shuffled in train mode.
  double probability = 0.5;
  std::uint64_t seed = 0;
  SuMode mode = SuMode::train;
  /// Whether inference shuffles (r = 1) or passes through (r = 0).
  bool infer_apply = true;

  /// Throws ConfigurationError when the config cannot drive a shuffle.
  void validate() const;
  Index level() const;
};

/// floor(sqrt(n)) for n >= 0.
Index isqrt(Index n);

/// Half-open [row_begin, row_end) x [col_begin, col_end) scope of one block.
struct BlockScope {
  Index row_begin = 0, row_end = 0, col_begin = 0, col_end = 0;

  Index rows() const { return row_end - row_begin; }
  Index cols() const { return col_end - col_begin; }
  bool operator==(const BlockScope&) const = default;
};

/// Row-major matrix of block scopes covering a height x width map.
struct BlockGrid {
  Index grid_rows = 0, grid_cols = 0;
  Index height = 0, width = 0;
  std::vector<BlockScope> scopes;

  const BlockScope& operator()(Index i, Index j) const { return scopes[std::size_t(i * grid_cols + j)]; }
  BlockScope& operator()(Index i, Index j) { return scopes[std::size_t(i * grid_cols + j)]; }
  bool operator==(const BlockGrid&) const = default;
};

/// Boundaries floor(k * extent / parts) for k = 0..parts.
std::vector<Index> tile_axis(Index extent, Index parts);

/// Grid of parts_h x parts_w contiguous blocks tiling the map.
BlockGrid tile_blocks(Index height, Index width, Index parts_h, Index parts_w);

/// The level x level grid the shuffle rotates within.
BlockGrid build_block_grid(Index height, Index width, Index n);

/// The sqrt(n) x sqrt(n) block scope matrix used by the matrix formulation.
BlockGrid build_scope_matrix(Index height, Index width, Index n);

using TransformMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// The 2 x 2 swap |I - 1|.
TransformMatrix swap_matrix();

/// Block-diagonal sqrt(n) x sqrt(n) matrix of swap blocks. Needs sqrt(n) even.
TransformMatrix build_transform(Index n);

/// T^T U T: permutes the rows and columns of the scope matrix.
BlockGrid apply_block_permutation(const BlockGrid& grid, const TransformMatrix& transform);

/// Flat spatial permutation over height x width cells. Output cell d reads
/// input cell forward[d]; inverse[forward[d]] == d.
struct PermutationMap {
  Index height = 0, width = 0;
  std::vector<Index> forward;
  std::vector<Index> inverse;

  static PermutationMap identity(Index height, Index width);
  /// Builds the inverse; throws DimensionError if forward is not a bijection.
  static PermutationMap from_forward(Index height, Index width, std::vector<Index> forward);

  Index cells() const { return height * width; }
  bool is_identity() const;
  bool operator==(const PermutationMap&) const = default;
};

/// Cell permutation that moves each block of `target` into the position of
/// the corresponding block of `source`. Swapped blocks must have equal sizes.
PermutationMap block_permutation_map(const BlockGrid& source, const BlockGrid& target);

/// Cell permutation of the shuffle: inside every block of the level grid,
/// rows rotate by floor(rows / 2) and columns by floor(cols / 2).
PermutationMap shuffle_permutation(Index height, Index width, Index n);

/// Moves every channel and batch member of x through the same map.
template <typename Scalar>
FeatureMap<Scalar> permute_cells(const PermutationMap& map, const FeatureMap<Scalar>& x) {
  if (map.height != x.height() || map.width != x.width()) {
    throw DimensionError("permutation map does not match feature map extents");
  }
  FeatureMap<Scalar> y(x.height(), x.width(), x.channels(), x.batch());
  const Index run = x.channels() * x.batch();
  for (Index d = 0; d < map.cells(); ++d) {
    const Scalar* src = x.data().data() + map.forward[std::size_t(d)] * run;
    std::copy(src, src + run, y.data().data() + d * run);
  }
  return y;
}

template <typename Scalar>
std::pair<FeatureMap<Scalar>, PermutationMap> shuffle_alg1(const FeatureMap<Scalar>& x, Index n) {
  auto map = shuffle_permutation(x.height(), x.width(), n);
  auto y = permute_cells(map, x);
  return {std::move(y), std::move(map)};
}

/// What a forward pass recorded: the realised map and, per batch member,
/// whether it was shuffled (r).
struct SuState {
  PermutationMap map;
  std::vector<std::uint8_t> applied;
  bool valid = false;
};

template <typename Scalar>
struct SuResult {
  FeatureMap<Scalar> output;
  SuState state;
};

/// Bernoulli-gated shuffle. In train mode r ~ Bernoulli(p) is drawn once per
/// batch member from `rng`; in infer mode r = cfg.infer_apply.
template <typename Scalar>
SuResult<Scalar> su_forward(const SuConfig& cfg, const FeatureMap<Scalar>& x, Rng& rng) {
  cfg.validate();
  SuResult<Scalar> result{FeatureMap<Scalar>(x.height(), x.width(), x.channels(), x.batch()),
                          {shuffle_permutation(x.height(), x.width(), cfg.blocks), {}, true}};
  auto& state = result.state;
  state.applied.resize(std::size_t(x.batch()));
  for (Index s = 0; s < x.batch(); ++s) {
    const bool r = cfg.mode == SuMode::train ? rng.bernoulli(cfg.probability) : cfg.infer_apply;
    state.applied[std::size_t(s)] = r ? 1 : 0;
  }
  const Index c = x.channels(), b = x.batch();
  for (Index d = 0; d < x.cells(); ++d) {
    const Index src_cell = state.map.forward[std::size_t(d)];
    for (Index ch = 0; ch < c; ++ch)
      for (Index s = 0; s < b; ++s) {
        const Index from = state.applied[std::size_t(s)] ? src_cell : d;
        result.output.data()[(d * c + ch) * b + s] = x.data()[(from * c + ch) * b + s];
      }
  }
  return result;
}

template <typename Scalar>
SuResult<Scalar> su_forward(const SuConfig& cfg, const FeatureMap<Scalar>& x) {
  Rng rng(cfg.seed);
  return su_forward(cfg, x, rng);
}

/// Routes gradients back through the recorded permutation (its Jacobian is
/// the inverse permutation); identity for members with r = 0.
template <typename Scalar>
FeatureMap<Scalar> su_backward(const SuState& state, const FeatureMap<Scalar>& grad_out) {
  if (!state.valid) throw StateError("spatially unstructured backward without a recorded forward pass");
  if (state.map.height != grad_out.height() || state.map.width != grad_out.width() ||
      Index(state.applied.size()) != grad_out.batch()) {
    throw StateError("recorded permutation does not match grad_out (stale state)");
  }
  FeatureMap<Scalar> g(grad_out.height(), grad_out.width(), grad_out.channels(), grad_out.batch());
  const Index c = grad_out.channels(), b = grad_out.batch();
  for (Index d = 0; d < grad_out.cells(); ++d) {
    const Index src_cell = state.map.forward[std::size_t(d)];
    for (Index ch = 0; ch < c; ++ch)
      for (Index s = 0; s < b; ++s) {
        const Index to = state.applied[std::size_t(s)] ? src_cell : d;
        g.data()[(to * c + ch) * b + s] = grad_out.data()[(d * c + ch) * b + s];
      }
  }
  return g;
}

}  // namespace s2ica
