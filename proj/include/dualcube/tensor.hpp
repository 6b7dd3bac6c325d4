#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>

#include "dualcube/error.hpp"

namespace dualcube {

using Index = Eigen::Index;

/// NCHW extents. Cubemaps stack their six faces along `n` (sample-major, face-minor).
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  Index numel() const { return Index(n) * c * h * w; }
  Index plane() const { return Index(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
};

/// Dense contiguous NCHW array.
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = Scalar(0))
      : shape_(shape), data_(Array::Constant(shape.numel(), fill)) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
      throw DimensionError("negative tensor extent " + shape.str());
    }
  }
  Tensor(Shape shape, Array data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape.numel()) {
      throw DimensionError("tensor data size does not match shape " + shape.str());
    }
  }

  const Shape& shape() const { return shape_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Index offset(int n, int c, int h, int w) const {
    return ((Index(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  Scalar& operator()(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  Scalar operator()(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }
  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  /// Pointer to the start of channel `c` of sample `n`.
  Scalar* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
  const Scalar* plane(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }

  /// Samples [first, first + count) as a new tensor.
  Tensor slice(int first, int count) const {
    Shape s = shape_;
    s.n = count;
    const Index per = Index(shape_.c) * shape_.plane();
    return Tensor(s, data_.segment(Index(first) * per, Index(count) * per));
  }

  void fill(Scalar v) { data_.setConstant(v); }
  bool all_finite() const { return data_.isFinite().all(); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

 private:
  Shape shape_;
  Array data_;
};

using TensorD = Tensor<double>;
using TensorF = Tensor<float>;

/// Concatenate along the batch axis. All inputs share c, h, w.
template <typename Scalar>
Tensor<Scalar> concat_batch(const Tensor<Scalar>* const* parts, int count) {
  if (count == 0) return {};
  Shape s = parts[0]->shape();
  s.n = 0;
  for (int i = 0; i < count; ++i) {
    const Shape& p = parts[i]->shape();
    if (p.c != s.c || p.h != s.h || p.w != s.w) throw DimensionError("concat_batch extent mismatch");
    s.n += p.n;
  }
  Tensor<Scalar> out(s);
  Index pos = 0;
  for (int i = 0; i < count; ++i) {
    out.array().segment(pos, parts[i]->size()) = parts[i]->array();
    pos += parts[i]->size();
  }
  return out;
}

}  // namespace dualcube
