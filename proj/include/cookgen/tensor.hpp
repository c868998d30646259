#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cookgen/errors.hpp"

namespace cookgen {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<Index> dims) : dims_(dims) {}
  explicit Shape(std::vector<Index> dims) : dims_(std::move(dims)) {}

  int rank() const { return static_cast<int>(dims_.size()); }
  Index operator[](int i) const { return dims_[static_cast<size_t>(i)]; }
  Index numel() const {
    return std::accumulate(dims_.begin(), dims_.end(), Index{1}, std::multiplies<>());
  }
  const std::vector<Index>& dims() const { return dims_; }

  friend bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
    os << ']';
    return os.str();
  }

 private:
  std::vector<Index> dims_;
};

// Dense row-major tensor. Images are NCHW; vectors in a batch are [N, D].
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(Array::Zero(shape_.numel())) {}
  Tensor(Shape shape, Array data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.numel())
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
  }

  static Tensor constant(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }
  static Tensor scalar(Scalar value) { return constant(Shape{1}, value); }

  const Shape& shape() const { return shape_; }
  Index dim(int i) const { return shape_[i]; }
  int rank() const { return shape_.rank(); }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Scalar item() const { return data_(0); }

  // Row-major matrix view over `rows*cols` elements starting at `offset`.
  Eigen::Map<RowMatrix<Scalar>> matrix(Index rows, Index cols, Index offset = 0) {
    return {data_.data() + offset, rows, cols};
  }
  Eigen::Map<const RowMatrix<Scalar>> matrix(Index rows, Index cols, Index offset = 0) const {
    return {data_.data() + offset, rows, cols};
  }

  void set_zero() { data_.setZero(); }
  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

 private:
  Shape shape_;
  Array data_;
};

inline void require_shape(const Shape& got, const Shape& want, const char* what) {
  if (!(got == want))
    throw ShapeError(std::string(what) + ": expected shape " + want.str() + ", got " + got.str());
}

}  // namespace cookgen
