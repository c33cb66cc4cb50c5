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

#ifndef DRBN_MATH_HPP
#define DRBN_MATH_HPP

#include "drbn/parallel.hpp"
#include "drbn/rng.hpp"
#include "drbn/tensor.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace drbn {

template <typename T>
inline T sigmoid(T x) noexcept {
  // Branch on sign so exp never overflows.
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

/// log(1 + exp(x)) without overflow.
template <typename T>
inline T softplus(T x) noexcept {
  if (x > T(0)) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  BasicTensor<T> out = x;
  for (auto& v : out.values()) v = sigmoid(v);
  return out;
}

template <typename T>
void sigmoid_inplace(BasicTensor<T>& x) {
  for (auto& v : x.values()) v = sigmoid(v);
}

/// Each output element is 1 with probability p_i, decided by u < p_i with u
/// uniform on [0, 1). With a single chain every element draws from it in
/// storage order; with one chain per row, row r draws only from chains[r].
template <typename T>
BasicTensor<T> bernoulli_sample(const BasicTensor<T>& p, std::span<Rng> chains) {
  for (T v : p.values()) {
    if (!(v >= T(0) && v <= T(1))) {
      throw std::domain_error("bernoulli_sample: probability outside [0,1]: " +
                              std::to_string(static_cast<double>(v)));
    }
  }
  BasicTensor<T> out(p.shape());
  if (chains.size() == 1) {
    Rng& rng = chains.front();
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = rng.uniform() < p[i] ? T(1) : T(0);
    return out;
  }
  if (chains.size() != p.rows()) {
    throw ShapeError("bernoulli_sample: " + std::to_string(chains.size()) + " chains for " +
                     std::to_string(p.rows()) + " rows");
  }
  const std::size_t stride = p.row_size();
  for (std::size_t r = 0; r < p.rows(); ++r) {
    Rng& rng = chains[r];
    for (std::size_t i = r * stride; i < (r + 1) * stride; ++i) {
      out[i] = rng.uniform() < p[i] ? T(1) : T(0);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> bernoulli_sample(const BasicTensor<T>& p, Rng& rng) {
  return bernoulli_sample(p, std::span<Rng>(&rng, 1));
}

/// Plain 2-D product (m x k) * (k x n).
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible " + to_string(a.shape()) + " * " + to_string(b.shape()));
  }
  BasicTensor<T> out({a.dim(0), b.dim(1)});
  out.matrix().noalias() = a.matrix() * b.matrix();
  return out;
}

/// Geometry of a strided valid convolution over an H x W x C input with K
/// filters of size Nw x Nw x C. Output extent is (H - Nw) / stride + 1 and
/// the division must be exact.
struct ConvGeometry {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t filters = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;

  std::size_t out_height() const { return (height - kernel) / stride + 1; }
  std::size_t out_width() const { return (width - kernel) / stride + 1; }
  std::size_t patch_size() const { return kernel * kernel * channels; }
  std::size_t positions() const { return out_height() * out_width(); }

  Shape input_shape() const { return {height, width, channels}; }
  Shape output_shape() const { return {out_height(), out_width(), filters}; }
  Shape filter_shape() const { return {filters, kernel, kernel, channels}; }

  void validate() const {
    if (height == 0 || width == 0 || channels == 0 || filters == 0 || kernel == 0 || stride == 0) {
      throw ShapeError("conv geometry: all extents must be positive");
    }
    if (kernel > height || kernel > width) {
      throw ShapeError("conv geometry: kernel " + std::to_string(kernel) + " larger than input " +
                       std::to_string(height) + "x" + std::to_string(width));
    }
    if ((height - kernel) % stride != 0 || (width - kernel) % stride != 0) {
      throw ShapeError("conv geometry: (" + std::to_string(height) + "-" + std::to_string(kernel) +
                       ") or (" + std::to_string(width) + "-" + std::to_string(kernel) +
                       ") not divisible by stride " + std::to_string(stride));
    }
  }

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

namespace detail {

inline std::size_t conv_batch(const Shape& s, std::size_t unit_rank, const char* what) {
  if (s.size() == unit_rank) return 1;
  if (s.size() == unit_rank + 1) return s[0];
  throw ShapeError(std::string(what) + ": expected rank " + std::to_string(unit_rank) + " or " +
                   std::to_string(unit_rank + 1) + ", got " + to_string(s));
}

inline const std::size_t* unit_dims(const Shape& s, std::size_t unit_rank) {
  return s.data() + (s.size() - unit_rank);
}

/// Rows are (sample, i, j), columns are (r, s, c): the receptive field of
/// output position (i, j) starts at input (stride*i, stride*j).
template <typename T>
RowMajorMatrix<T> im2col(const T* input, std::size_t batch, const ConvGeometry& g) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), c = g.channels, kw = g.kernel;
  RowMajorMatrix<T> patches(static_cast<Eigen::Index>(batch * oh * ow),
                            static_cast<Eigen::Index>(g.patch_size()));
  const std::size_t sample_stride = g.height * g.width * c;
  parallel_for(batch, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t n = b0; n < b1; ++n) {
      const T* x = input + n * sample_stride;
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          T* dst = patches.data() + ((n * oh + i) * ow + j) * g.patch_size();
          for (std::size_t r = 0; r < kw; ++r) {
            const T* src = x + ((i * g.stride + r) * g.width + j * g.stride) * c;
            std::copy_n(src, kw * c, dst + r * kw * c);
          }
        }
      }
    }
  });
  return patches;
}

/// Adjoint of im2col: scatter-add every patch row back into the image.
template <typename T>
void col2im(const RowMajorMatrix<T>& patches, std::size_t batch, const ConvGeometry& g, T* output) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), c = g.channels, kw = g.kernel;
  const std::size_t sample_stride = g.height * g.width * c;
  parallel_for(batch, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t n = b0; n < b1; ++n) {
      T* x = output + n * sample_stride;
      std::fill_n(x, sample_stride, T(0));
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          const T* src = patches.data() + ((n * oh + i) * ow + j) * g.patch_size();
          for (std::size_t r = 0; r < kw; ++r) {
            T* dst = x + ((i * g.stride + r) * g.width + j * g.stride) * c;
            const T* row = src + r * kw * c;
            for (std::size_t q = 0; q < kw * c; ++q) dst[q] += row[q];
          }
        }
      }
    }
  });
}

template <typename T>
ConvGeometry geometry_from(const Shape& input_unit, const Shape& filters, std::size_t stride) {
  if (filters.size() != 4 || filters[1] != filters[2]) {
    throw ShapeError("conv filters must be K x Nw x Nw x Cin, got " + to_string(filters));
  }
  if (filters[3] != input_unit[2]) {
    throw ShapeError("conv: filter channels " + std::to_string(filters[3]) +
                     " != input channels " + std::to_string(input_unit[2]));
  }
  ConvGeometry g{input_unit[0], input_unit[1], input_unit[2], filters[0], filters[1], stride};
  g.validate();
  return g;
}

}  // namespace detail

/// Valid (unpadded) strided cross-correlation, no filter flip:
///   out[i, j, k] = sum_{r, s, c} W[k, r, s, c] * in[stride*i + r, stride*j + s, c]
/// Accepts a single H x W x C input or a batch N x H x W x C.
template <typename T>
BasicTensor<T> conv_valid(const BasicTensor<T>& input, const BasicTensor<T>& filters,
                          std::size_t stride) {
  const std::size_t batch = detail::conv_batch(input.shape(), 3, "conv_valid");
  const std::size_t* d = detail::unit_dims(input.shape(), 3);
  const ConvGeometry g = detail::geometry_from<T>({d[0], d[1], d[2]}, filters.shape(), stride);
  const auto patches = detail::im2col(input.data(), batch, g);
  Shape out_shape = g.output_shape();
  if (input.rank() == 4) out_shape = batched(batch, out_shape);
  BasicTensor<T> out(std::move(out_shape));
  Eigen::Map<RowMajorMatrix<T>> out_m(out.data(), static_cast<Eigen::Index>(batch * g.positions()),
                                      static_cast<Eigen::Index>(g.filters));
  Eigen::Map<const RowMajorMatrix<T>> w(filters.data(), static_cast<Eigen::Index>(g.filters),
                                        static_cast<Eigen::Index>(g.patch_size()));
  out_m.noalias() = patches * w.transpose();
  return out;
}

/// Exact adjoint of conv_valid: the visible extent is (H' - 1) * stride + Nw.
template <typename T>
BasicTensor<T> conv_transpose(const BasicTensor<T>& hidden, const BasicTensor<T>& filters,
                              std::size_t stride) {
  const std::size_t batch = detail::conv_batch(hidden.shape(), 3, "conv_transpose");
  const std::size_t* d = detail::unit_dims(hidden.shape(), 3);
  if (filters.rank() != 4 || filters.dim(0) != d[2]) {
    throw ShapeError("conv_transpose: filters " + to_string(filters.shape()) +
                     " incompatible with hidden " + to_string(hidden.shape()));
  }
  if (stride == 0) throw ShapeError("conv_transpose: stride must be positive");
  const std::size_t kw = filters.dim(1);
  const ConvGeometry g{(d[0] - 1) * stride + kw, (d[1] - 1) * stride + kw, filters.dim(3),
                       filters.dim(0), kw, stride};
  g.validate();
  Eigen::Map<const RowMajorMatrix<T>> h(hidden.data(), static_cast<Eigen::Index>(batch * g.positions()),
                                        static_cast<Eigen::Index>(g.filters));
  Eigen::Map<const RowMajorMatrix<T>> w(filters.data(), static_cast<Eigen::Index>(g.filters),
                                        static_cast<Eigen::Index>(g.patch_size()));
  const RowMajorMatrix<T> patches = h * w;
  Shape out_shape = g.input_shape();
  if (hidden.rank() == 4) out_shape = batched(batch, out_shape);
  BasicTensor<T> out(std::move(out_shape));
  detail::col2im(patches, batch, g, out.data());
  return out;
}

/// Filter-shaped correlation of inputs with hidden-side signals, summed over
/// the batch:  G[k, r, s, c] = sum_{n, i, j} hidden[n, i, j, k] * in[n, stride*i + r, stride*j + s, c].
/// This is the weight derivative of sum(hidden * conv_valid(input, W)).
template <typename T>
BasicTensor<T> conv_filter_correlation(const BasicTensor<T>& input, const BasicTensor<T>& hidden,
                                       const ConvGeometry& g) {
  const std::size_t batch = detail::conv_batch(input.shape(), 3, "conv_filter_correlation");
  if (hidden.size() != batch * g.positions() * g.filters) {
    throw ShapeError("conv_filter_correlation: hidden " + to_string(hidden.shape()) +
                     " does not match geometry");
  }
  const auto patches = detail::im2col(input.data(), batch, g);
  Eigen::Map<const RowMajorMatrix<T>> h(hidden.data(), static_cast<Eigen::Index>(batch * g.positions()),
                                        static_cast<Eigen::Index>(g.filters));
  BasicTensor<T> out(g.filter_shape());
  Eigen::Map<RowMajorMatrix<T>> out_m(out.data(), static_cast<Eigen::Index>(g.filters),
                                      static_cast<Eigen::Index>(g.patch_size()));
  out_m.noalias() = h.transpose() * patches;
  return out;
}

}  // namespace drbn

#endif  // DRBN_MATH_HPP
