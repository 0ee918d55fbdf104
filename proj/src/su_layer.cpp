#include "s2ica/su_layer.hpp"

#include <cmath>
#include <string>

namespace s2ica {

Index isqrt(Index n) {
  if (n < 0) throw ConfigurationError("square root of a negative block count");
  auto r = Index(std::sqrt(double(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

Index SuConfig::level() const { return isqrt(blocks) / 2; }

void SuConfig::validate() const {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw ConfigurationError("shuffle probability must lie in [0, 1], got " + std::to_string(probability));
  }
  if (blocks < 1 || level() < 1) {
    throw ConfigurationError("block count " + std::to_string(blocks) +
                             " gives rearrangement level 0; need at least 4 blocks");
  }
}

std::vector<Index> tile_axis(Index extent, Index parts) {
  std::vector<Index> points(static_cast<std::size_t>(parts + 1));
  for (Index k = 0; k <= parts; ++k) points[std::size_t(k)] = (k * extent) / parts;
  return points;
}

BlockGrid tile_blocks(Index height, Index width, Index parts_h, Index parts_w) {
  if (parts_h < 1 || parts_w < 1) throw ConfigurationError("block grid needs at least one block per axis");
  if (height < parts_h || width < parts_w) {
    throw DimensionError("map " + std::to_string(height) + "x" + std::to_string(width) + " is smaller than the " +
                         std::to_string(parts_h) + "x" + std::to_string(parts_w) + " block grid");
  }
  const auto rows = tile_axis(height, parts_h);
  const auto cols = tile_axis(width, parts_w);
  BlockGrid grid{parts_h, parts_w, height, width, {}};
  grid.scopes.reserve(std::size_t(parts_h * parts_w));
  for (Index i = 0; i < parts_h; ++i)
    for (Index j = 0; j < parts_w; ++j)
      grid.scopes.push_back({rows[std::size_t(i)], rows[std::size_t(i + 1)], cols[std::size_t(j)],
                             cols[std::size_t(j + 1)]});
  return grid;
}

BlockGrid build_block_grid(Index height, Index width, Index n) {
  const Index level = isqrt(n) / 2;
  if (level < 1) throw ConfigurationError("block count " + std::to_string(n) + " gives rearrangement level 0");
  return tile_blocks(height, width, level, level);
}

BlockGrid build_scope_matrix(Index height, Index width, Index n) {
  const Index side = isqrt(n);
  if (side * side != n || side < 1) {
    throw ConfigurationError("block count " + std::to_string(n) + " is not a perfect square");
  }
  return tile_blocks(height, width, side, side);
}

TransformMatrix swap_matrix() {
  TransformMatrix s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

TransformMatrix build_transform(Index n) {
  const Index side = isqrt(n);
  if (side * side != n || side < 2 || side % 2 != 0) {
    throw ConfigurationError("transform needs an even square root of the block count, got n = " +
                             std::to_string(n));
  }
  TransformMatrix t = TransformMatrix::Zero(side, side);
  for (Index k = 0; k < side; k += 2) t.block(k, k, 2, 2) = swap_matrix();
  return t;
}

BlockGrid apply_block_permutation(const BlockGrid& grid, const TransformMatrix& transform) {
  if (transform.rows() != transform.cols() || transform.rows() != grid.grid_rows ||
      transform.cols() != grid.grid_cols) {
    throw DimensionError("transform is " + std::to_string(transform.rows()) + "x" +
                         std::to_string(transform.cols()) + " but the scope matrix is " +
                         std::to_string(grid.grid_rows) + "x" + std::to_string(grid.grid_cols));
  }
  // For a permutation matrix, column i holds its single one at row src[i], so
  // (T^T U T)(i, j) = U(src[i], src[j]).
  const Index side = transform.rows();
  std::vector<Index> src(std::size_t(side), -1);
  for (Index i = 0; i < side; ++i) {
    for (Index k = 0; k < side; ++k) {
      const int v = transform(k, i);
      if (v != 0 && v != 1) throw ConfigurationError("transform must be binary");
      if (v == 1) {
        if (src[std::size_t(i)] != -1) throw ConfigurationError("transform is not a permutation matrix");
        src[std::size_t(i)] = k;
      }
    }
    if (src[std::size_t(i)] == -1) throw ConfigurationError("transform is not a permutation matrix");
  }
  BlockGrid out = grid;
  for (Index i = 0; i < side; ++i)
    for (Index j = 0; j < side; ++j) out(i, j) = grid(src[std::size_t(i)], src[std::size_t(j)]);
  return out;
}

PermutationMap PermutationMap::identity(Index height, Index width) {
  std::vector<Index> fwd(static_cast<std::size_t>(height * width));
  for (std::size_t i = 0; i < fwd.size(); ++i) fwd[i] = Index(i);
  return {height, width, fwd, fwd};
}

PermutationMap PermutationMap::from_forward(Index height, Index width, std::vector<Index> forward) {
  const Index cells = height * width;
  if (Index(forward.size()) != cells) throw DimensionError("permutation length differs from cell count");
  std::vector<Index> inverse(forward.size(), -1);
  for (std::size_t d = 0; d < forward.size(); ++d) {
    const Index s = forward[d];
    if (s < 0 || s >= cells || inverse[std::size_t(s)] != -1) {
      throw DimensionError("cell map is not a bijection");
    }
    inverse[std::size_t(s)] = Index(d);
  }
  return {height, width, std::move(forward), std::move(inverse)};
}

bool PermutationMap::is_identity() const {
  for (std::size_t i = 0; i < forward.size(); ++i) {
    if (forward[i] != Index(i)) return false;
  }
  return true;
}

PermutationMap block_permutation_map(const BlockGrid& source, const BlockGrid& target) {
  if (source.grid_rows != target.grid_rows || source.grid_cols != target.grid_cols ||
      source.height != target.height || source.width != target.width) {
    throw DimensionError("block grids differ in layout");
  }
  std::vector<Index> fwd(std::size_t(source.height * source.width), -1);
  for (std::size_t b = 0; b < source.scopes.size(); ++b) {
    const auto& dst = source.scopes[b];
    const auto& src = target.scopes[b];
    if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
      throw DimensionError("swapped blocks differ in size; use even extents");
    }
    for (Index r = 0; r < dst.rows(); ++r)
      for (Index c = 0; c < dst.cols(); ++c) {
        fwd[std::size_t((dst.row_begin + r) * source.width + dst.col_begin + c)] =
            (src.row_begin + r) * source.width + src.col_begin + c;
      }
  }
  return PermutationMap::from_forward(source.height, source.width, std::move(fwd));
}

PermutationMap shuffle_permutation(Index height, Index width, Index n) {
  const BlockGrid grid = build_block_grid(height, width, n);
  std::vector<Index> fwd(static_cast<std::size_t>(height * width));
  for (const auto& block : grid.scopes) {
    const Index bh = block.rows(), bw = block.cols();
    const Index shift_r = bh / 2, shift_c = bw / 2;
    for (Index r = 0; r < bh; ++r)
      for (Index c = 0; c < bw; ++c) {
        const Index sr = (r + shift_r) % bh;
        const Index sc = (c + shift_c) % bw;
        fwd[std::size_t((block.row_begin + r) * width + block.col_begin + c)] =
            (block.row_begin + sr) * width + block.col_begin + sc;
      }
  }
  return PermutationMap::from_forward(height, width, std::move(fwd));
}

}  // namespace s2ica
