#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "cscn/errors.hpp"

namespace cscn {

// Extents of a dense row-major tensor, rank 1..4.
class Shape {
public:
  Shape() = default;

  Shape(std::initializer_list<std::size_t> dims) {
    if (dims.size() < 1 || dims.size() > 4)
      throw DimensionError("Shape: rank must be between 1 and 4, got " +
                           std::to_string(dims.size()));
    rank_ = dims.size();
    std::size_t i = 0;
    for (std::size_t d : dims) {
      if (d == 0) throw DimensionError("Shape: extents must be positive");
      dims_[i++] = d;
    }
  }

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t i) const {
    assert(i < rank_);
    return dims_[i];
  }

  std::size_t count() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
    return rank_ == 0 ? 0 : n;
  }

  bool operator==(const Shape& other) const {
    if (rank_ != other.rank_) return false;
    for (std::size_t i = 0; i < rank_; ++i)
      if (dims_[i] != other.dims_[i]) return false;
    return true;
  }
  bool operator!=(const Shape& other) const { return !(*this == other); }

  std::string str() const {
    if (rank_ == 0) return "[]";
    std::string s = std::to_string(dims_[0]);
    for (std::size_t i = 1; i < rank_; ++i) s += "x" + std::to_string(dims_[i]);
    return s;
  }

private:
  std::array<std::size_t, 4> dims_{1, 1, 1, 1};
  std::size_t rank_ = 0;
};

// Dense row-major tensor. float for training/inference, double for gradient
// checking; pick the scalar type at construction via the template parameter.
template <typename T>
class TensorT {
public:
  TensorT() = default;

  explicit TensorT(Shape shape, T value = T{0})
      : shape_(shape), data_(shape.count(), value) {}

  TensorT(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (shape_.count() != data_.size())
      throw DimensionError("Tensor: shape " + shape_.str() + " expects " +
                           std::to_string(shape_.count()) + " values, got " +
                           std::to_string(data_.size()));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.rank(); }
  std::size_t extent(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::size_t i) {
    assert(i < data_.size());
    return data_[i];
  }
  const T& operator[](std::size_t i) const {
    assert(i < data_.size());
    return data_[i];
  }

  T& operator()(std::size_t i, std::size_t j) {
    assert(rank() == 2);
    return data_[i * shape_[1] + j];
  }
  const T& operator()(std::size_t i, std::size_t j) const {
    assert(rank() == 2);
    return data_[i * shape_[1] + j];
  }
  T& operator()(std::size_t c, std::size_t i, std::size_t j) {
    assert(rank() == 3);
    return data_[(c * shape_[1] + i) * shape_[2] + j];
  }
  const T& operator()(std::size_t c, std::size_t i, std::size_t j) const {
    assert(rank() == 3);
    return data_[(c * shape_[1] + i) * shape_[2] + j];
  }
  T& operator()(std::size_t o, std::size_t c, std::size_t i, std::size_t j) {
    assert(rank() == 4);
    return data_[((o * shape_[1] + c) * shape_[2] + i) * shape_[3] + j];
  }
  const T& operator()(std::size_t o, std::size_t c, std::size_t i, std::size_t j) const {
    assert(rank() == 4);
    return data_[((o * shape_[1] + c) * shape_[2] + i) * shape_[3] + j];
  }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  // Same data, different extents; element count must match.
  TensorT reshaped(Shape shape) const& {
    TensorT t = *this;
    t.set_shape(shape);
    return t;
  }
  TensorT reshaped(Shape shape) && {
    set_shape(shape);
    return std::move(*this);
  }

private:
  void set_shape(Shape shape) {
    if (shape.count() != data_.size())
      throw DimensionError("reshape: " + shape_.str() + " -> " + shape.str() +
                           " changes element count");
    shape_ = shape;
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* where) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(where) + ": shape mismatch " + a.shape().str() +
                         " vs " + b.shape().str());
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape(a, b, "add");
  TensorT<T> out = a;
  const T* bp = b.data();
  T* op = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) op[i] += bp[i];
  return out;
}

template <typename T>
void add_inplace(TensorT<T>& dst, const TensorT<T>& src) {
  check_same_shape(dst, src, "add_inplace");
  const T* sp = src.data();
  T* dp = dst.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dp[i] += sp[i];
}

template <typename T>
void scale_inplace(TensorT<T>& t, T s) {
  for (auto& v : t) v *= s;
}

template <typename T>
void clamp01_inplace(TensorT<T>& t) {
  for (auto& v : t) v = v < T{0} ? T{0} : (v > T{1} ? T{1} : v);
}

}  // namespace cscn
