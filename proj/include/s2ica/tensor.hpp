#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "s2ica/errors.hpp"

namespace s2ica {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

inline Index shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

/// Dense row-major n-d array. Storage is an Eigen column vector so whole-array
/// arithmetic can be written as Eigen expressions on data().
template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// Empty placeholder; rank 0 and no data.
  Tensor() = default;

  explicit Tensor(Shape shape, Scalar fill = Scalar(0)) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_ = Vector::Constant(shape_volume(shape_), fill);
  }

  Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (shape_volume(shape_) != data_.size()) {
      throw DimensionError("tensor shape " + shape_string(shape_) + " holds " +
                           std::to_string(shape_volume(shape_)) + " values, got " +
                           std::to_string(data_.size()));
    }
  }

  Tensor(Shape shape, std::initializer_list<Scalar> values)
      : Tensor(std::move(shape), Vector(Eigen::Map<const Vector>(values.begin(), Index(values.size())))) {}

  const Shape& shape() const { return shape_; }
  Index rank() const { return Index(shape_.size()); }
  Index size() const { return data_.size(); }
  bool empty() const { return shape_.empty(); }
  Index extent(Index axis) const { return shape_.at(std::size_t(axis)); }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  Scalar& operator[](Index flat) { return data_[flat]; }
  const Scalar& operator[](Index flat) const { return data_[flat]; }

  Shape strides() const {
    Shape s(shape_.size(), 1);
    for (Index i = rank() - 2; i >= 0; --i) s[i] = s[i + 1] * shape_[i + 1];
    return s;
  }

  /// Row-major linear index of a coordinate.
  Index offset(std::span<const Index> coord) const {
    if (Index(coord.size()) != rank()) throw DimensionError("coordinate rank mismatch");
    Index flat = 0;
    for (std::size_t i = 0; i < coord.size(); ++i) {
      if (coord[i] < 0 || coord[i] >= shape_[i]) throw IndexError("coordinate out of range");
      flat = flat * shape_[i] + coord[i];
    }
    return flat;
  }

  Scalar& at(std::initializer_list<Index> coord) { return data_[offset({coord.begin(), coord.size()})]; }
  const Scalar& at(std::initializer_list<Index> coord) const {
    return data_[offset({coord.begin(), coord.size()})];
  }

  Tensor reshaped(Shape shape) const {
    check_shape(shape);
    if (shape_volume(shape) != size()) {
      throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  /// Rank-2 view as a row-major Eigen matrix.
  Eigen::Map<const RowMajorMatrix> matrix() const {
    require_rank(2);
    return {data_.data(), shape_[0], shape_[1]};
  }
  Eigen::Map<RowMajorMatrix> matrix() {
    require_rank(2);
    return {data_.data(), shape_[0], shape_[1]};
  }

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_.size() == other.data_.size() &&
           std::equal(data_.data(), data_.data() + data_.size(), other.data_.data());
  }

 private:
  static void check_shape(const Shape& shape) {
    if (shape.empty()) throw DimensionError("tensor rank must be at least 1");
    for (Index e : shape) {
      if (e < 1) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
    }
  }

  void require_rank(Index r) const {
    if (rank() != r) {
      throw DimensionError("expected rank " + std::to_string(r) + ", got shape " + shape_string(shape_));
    }
  }

  Shape shape_;
  Vector data_;
};

/// 4-d activation array with fixed axis order (height, width, channels, batch).
template <typename Scalar>
class FeatureMap {
 public:
  using Vector = typename Tensor<Scalar>::Vector;

  FeatureMap() = default;

  FeatureMap(Index height, Index width, Index channels, Index batch = 1, Scalar fill = Scalar(0))
      : tensor_(Shape{height, width, channels, batch}, fill) {}

  explicit FeatureMap(Tensor<Scalar> tensor) : tensor_(std::move(tensor)) {
    if (tensor_.rank() != 4) {
      throw DimensionError("feature map must be rank 4, got " + shape_string(tensor_.shape()));
    }
  }

  Index height() const { return tensor_.extent(0); }
  Index width() const { return tensor_.extent(1); }
  Index channels() const { return tensor_.extent(2); }
  Index batch() const { return tensor_.extent(3); }
  Index cells() const { return height() * width(); }
  /// Number of values per batch member.
  Index volume() const { return height() * width() * channels(); }
  bool empty() const { return tensor_.empty(); }

  const Shape& shape() const { return tensor_.shape(); }
  const Tensor<Scalar>& tensor() const { return tensor_; }
  Tensor<Scalar>& tensor() { return tensor_; }
  Vector& data() { return tensor_.data(); }
  const Vector& data() const { return tensor_.data(); }

  Index index(Index h, Index w, Index c, Index s) const {
    return ((h * width() + w) * channels() + c) * batch() + s;
  }
  Scalar& operator()(Index h, Index w, Index c, Index s = 0) { return tensor_[index(h, w, c, s)]; }
  const Scalar& operator()(Index h, Index w, Index c, Index s = 0) const { return tensor_[index(h, w, c, s)]; }

  /// Copies batch member s out as an (h, w, c) vector in row-major order.
  Vector sample(Index s) const {
    if (batch() == 1) return data();
    return Eigen::Map<const Vector, 0, Eigen::InnerStride<>>(data().data() + s, volume(),
                                                             Eigen::InnerStride<>(batch()));
  }

  void set_sample(Index s, const Vector& values) {
    if (values.size() != volume()) throw DimensionError("sample volume mismatch");
    if (batch() == 1) {
      data() = values;
      return;
    }
    Eigen::Map<Vector, 0, Eigen::InnerStride<>>(data().data() + s, volume(), Eigen::InnerStride<>(batch())) =
        values;
  }

  template <typename Other>
  FeatureMap<Other> cast() const {
    return FeatureMap<Other>(tensor_.template cast<Other>());
  }

  bool operator==(const FeatureMap& other) const { return tensor_ == other.tensor_; }

 private:
  Tensor<Scalar> tensor_;
};

/// Stacks single-sample maps of equal (h, w, c) along the batch axis.
template <typename Scalar>
FeatureMap<Scalar> stack_batch(std::span<const FeatureMap<Scalar>> samples) {
  if (samples.empty()) throw EmptyInputError("cannot stack an empty batch");
  const auto& first = samples.front();
  FeatureMap<Scalar> out(first.height(), first.width(), first.channels(), Index(samples.size()));
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (samples[s].height() != first.height() || samples[s].width() != first.width() ||
        samples[s].channels() != first.channels() || samples[s].batch() != 1) {
      throw DimensionError("batch members must share (h, w, c) and have batch 1");
    }
    out.set_sample(Index(s), samples[s].data());
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> matmul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul needs rank-2 operands");
  if (a.extent(1) != b.extent(0)) {
    throw DimensionError("matmul inner extents differ: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor<Scalar> out(Shape{a.extent(0), b.extent(1)});
  out.matrix().noalias() = a.matrix() * b.matrix();
  return out;
}

enum class Elementwise { add, mul, max, relu, scale };

template <typename Scalar>
Tensor<Scalar> elementwise(Elementwise op, const Tensor<Scalar>& a, Scalar b) {
  Tensor<Scalar> out = a;
  auto& d = out.data();
  switch (op) {
    case Elementwise::add: d.array() += b; break;
    case Elementwise::mul:
    case Elementwise::scale: d.array() *= b; break;
    case Elementwise::max: d = d.cwiseMax(b); break;
    case Elementwise::relu: d = d.cwiseMax(Scalar(0)); break;
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> elementwise(Elementwise op, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (op == Elementwise::relu) return elementwise(op, a, Scalar(0));
  if (a.shape() != b.shape()) {
    throw DimensionError("elementwise shapes differ: " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  Tensor<Scalar> out = a;
  auto& d = out.data();
  switch (op) {
    case Elementwise::add: d += b.data(); break;
    case Elementwise::mul:
    case Elementwise::scale: d.array() *= b.data().array(); break;
    case Elementwise::max: d = d.cwiseMax(b.data()); break;
    case Elementwise::relu: break;
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& a) {
  return elementwise(Elementwise::relu, a, Scalar(0));
}

/// Smallest index attaining the maximum.
template <typename Derived>
Index argmax(const Eigen::DenseBase<Derived>& v) {
  if (v.size() == 0) throw EmptyInputError("argmax of an empty vector");
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

template <typename Scalar>
Index argmax(const Tensor<Scalar>& a) {
  if (a.empty()) throw EmptyInputError("argmax of an empty tensor");
  if (a.rank() != 1) throw DimensionError("argmax expects a rank-1 tensor");
  return argmax(a.data());
}

}  // namespace s2ica
