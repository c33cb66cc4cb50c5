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

#ifndef DRBN_CONV_RBM_HPP
#define DRBN_CONV_RBM_HPP

#include "drbn/math.hpp"
#include "drbn/rbm.hpp"

namespace drbn {

using ConvRbmGrads = ParamGrads;

/// Convolutional RBM over an H x W x C visible grid with K shared filters.
///
///   E(v, h) = - sum_{k,i,j} h[i,j,k] * sum_{r,s,c} W[k,r,s,c] v[stride*i + r, stride*j + s, c]
///             - sum_k c_k sum_{i,j} h[i,j,k] - b * sum v
///
/// The visible bias is one scalar shared by every visible unit (stored as a
/// one-element tensor so optimizers can treat it uniformly); the hidden bias
/// has one entry per filter.
struct ConvRbmParams {
  ConvGeometry geometry;
  Tensor filters;       // K x Nw x Nw x C
  Tensor visible_bias;  // {1}
  Tensor hidden_bias;   // K

  static ConvRbmParams zeros(const ConvGeometry& geometry);
  static ConvRbmParams gaussian(const ConvGeometry& geometry, Rng& rng, double stddev = 0.01);

  Shape visible_shape() const { return geometry.input_shape(); }
  Shape hidden_shape() const { return geometry.output_shape(); }
  std::size_t visible_size() const { return shape_size(visible_shape()); }
  std::size_t hidden_size() const { return shape_size(hidden_shape()); }

  void validate() const;

  std::array<Tensor*, 3> tensors() { return {&filters, &visible_bias, &hidden_bias}; }
  std::array<const Tensor*, 3> tensors() const { return {&filters, &visible_bias, &hidden_bias}; }

  friend bool operator==(const ConvRbmParams&, const ConvRbmParams&) = default;
};

// Inputs are one sample (rank 3) or a batch (rank 4, leading sample axis).
// Any tensor whose size matches is reshaped onto the layer geometry, so flat
// batches {n, H*W*C} are accepted as well.

std::vector<double> energy(const ConvRbmParams& params, const Tensor& visible, const Tensor& hidden);

/// sigmoid(conv_valid(v, W) + c_k)
Tensor prob_hidden(const ConvRbmParams& params, const Tensor& visible);

/// sigmoid(conv_transpose(h, W) + b)
Tensor prob_visible(const ConvRbmParams& params, const Tensor& hidden);

/// F(v) = -b sum v - sum_{k,i,j} softplus(alpha[i,j,k]), alpha = conv_valid(v, W) + c.
std::vector<double> free_energy(const ConvRbmParams& params, const Tensor& visible);

/// Batch mean of dF/dtheta.
ConvRbmGrads free_energy_grad(const ConvRbmParams& params, const Tensor& visible);

}  // namespace drbn

#endif  // DRBN_CONV_RBM_HPP
