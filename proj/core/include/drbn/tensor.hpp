// Copyright 2026 The DRBN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DRBN_TENSOR_HPP
#define DRBN_TENSOR_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drbn {

using Shape = std::vector<std::size_t>;

/// Thrown when tensor extents disagree with what an operation requires.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string to_string(const Shape& shape);

template <typename T>
using RowMajorMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-major n-dimensional array. For batched data the leading axis is the
/// batch axis; a rank-1 tensor is a single sample.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;
  // Eigen's vectorized kernels peel loops by address, so a fixed allocation
  // alignment keeps results bitwise identical from run to run.
  using Storage = std::vector<T, Eigen::aligned_allocator<T>>;
  using MatrixMap = Eigen::Map<RowMajorMatrix<T>>;
  using ConstMatrixMap = Eigen::Map<const RowMajorMatrix<T>>;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
    check_extents();
  }

  BasicTensor(Shape shape, const std::vector<T>& data)
      : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    check_extents();
    if (data_.size() != shape_size(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
    }
  }

  static BasicTensor zeros(Shape shape) { return BasicTensor(std::move(shape), T(0)); }
  static BasicTensor filled(Shape shape, T value) { return BasicTensor(std::move(shape), value); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<T> values() & noexcept { return data_; }
  std::span<const T> values() const& noexcept { return data_; }
  // A temporary hands over its storage, so range-for over it stays valid.
  Storage values() && { return std::move(data_); }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
  const T& at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

  std::size_t offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) throw ShapeError("index rank mismatch");
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
      if (i >= shape_[axis]) throw std::out_of_range("tensor index out of range");
      flat = flat * shape_[axis] + i;
      ++axis;
    }
    return flat;
  }

  /// Same data, new extents; total size must agree.
  BasicTensor reshaped(Shape shape) const& {
    BasicTensor out = *this;
    out.reshape(std::move(shape));
    return out;
  }
  BasicTensor reshaped(Shape shape) && {
    reshape(std::move(shape));
    return std::move(*this);
  }
  void reshape(Shape shape) {
    if (shape_size(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    shape_ = std::move(shape);
  }

  /// Leading extent (1 for a rank-1 tensor).
  std::size_t rows() const noexcept {
    return shape_.size() <= 1 ? 1 : shape_.front();
  }
  std::size_t row_size() const noexcept {
    return rows() == 0 ? 0 : data_.size() / rows();
  }
  std::span<T> row(std::size_t r) {
    return std::span<T>(data_).subspan(r * row_size(), row_size());
  }
  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(data_).subspan(r * row_size(), row_size());
  }

  /// View as a rows() x row_size() row-major matrix.
  MatrixMap matrix() {
    return MatrixMap(data_.data(), static_cast<Eigen::Index>(rows()),
                     static_cast<Eigen::Index>(row_size()));
  }
  ConstMatrixMap matrix() const {
    return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(rows()),
                          static_cast<Eigen::Index>(row_size()));
  }

  /// All values as one row vector.
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> row_vector() const {
    return Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(
        data_.data(), static_cast<Eigen::Index>(data_.size()));
  }

  /// Rows [begin, end) along the leading axis.
  BasicTensor slice_rows(std::size_t begin, std::size_t end) const {
    if (rank() < 2 || begin > end || end > rows()) throw ShapeError("bad row slice");
    Shape s = shape_;
    s[0] = end - begin;
    const auto stride = row_size();
    BasicTensor out(std::move(s));
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
              data_.begin() + static_cast<std::ptrdiff_t>(end * stride), out.data_.begin());
    return out;
  }

  /// Gather rows by index along the leading axis.
  BasicTensor gather_rows(std::span<const std::size_t> indices) const {
    if (rank() < 2) throw ShapeError("gather_rows needs a batched tensor");
    Shape s = shape_;
    s[0] = indices.size();
    BasicTensor out(std::move(s));
    const auto stride = row_size();
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] >= rows()) throw std::out_of_range("gather_rows index");
      std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * stride), stride,
                  out.data_.begin() + static_cast<std::ptrdiff_t>(i * stride));
    }
    return out;
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  BasicTensor& operator+=(const BasicTensor& other) {
    require_same_shape(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }
  BasicTensor& operator-=(const BasicTensor& other) {
    require_same_shape(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }
  BasicTensor& operator*=(T scale) {
    for (auto& x : data_) x *= scale;
    return *this;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T x) { return std::isfinite(x); });
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

  void require_same_shape(const BasicTensor& other) const {
    if (shape_ != other.shape_) {
      throw ShapeError("shape mismatch: " + to_string(shape_) + " vs " + to_string(other.shape_));
    }
  }

 private:
  // A zero leading extent is an empty batch; every other extent is positive.
  void check_extents() const {
    for (std::size_t i = 1; i < shape_.size(); ++i) {
      if (shape_[i] == 0) throw ShapeError("tensor extents must be positive: " + to_string(shape_));
    }
  }

  Shape shape_;
  Storage data_;
};

using Tensor = BasicTensor<double>;
using TensorF = BasicTensor<float>;

inline std::string to_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

/// Prepend a batch axis of extent n.
inline Shape batched(std::size_t n, const Shape& unit) {
  Shape s;
  s.reserve(unit.size() + 1);
  s.push_back(n);
  s.insert(s.end(), unit.begin(), unit.end());
  return s;
}

template <typename T>
double dot(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.size() != b.size()) throw ShapeError("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

}  // namespace drbn

#endif  // DRBN_TENSOR_HPP
