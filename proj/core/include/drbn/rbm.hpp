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

#ifndef DRBN_RBM_HPP
#define DRBN_RBM_HPP

#include "drbn/rng.hpp"
#include "drbn/tensor.hpp"

#include <array>
#include <span>
#include <vector>

namespace drbn {

/// Gradients of one layer, stored in the same order as the layer's
/// parameters: weights (W or filters), visible bias (b), hidden bias (c).
struct ParamGrads {
  Tensor weights;
  Tensor visible_bias;
  Tensor hidden_bias;

  std::array<const Tensor*, 3> tensors() const { return {&weights, &visible_bias, &hidden_bias}; }
  std::array<Tensor*, 3> tensors() { return {&weights, &visible_bias, &hidden_bias}; }

  ParamGrads& operator-=(const ParamGrads& other);
  friend bool operator==(const ParamGrads&, const ParamGrads&) = default;
};

using RbmGrads = ParamGrads;

/// Dense binary-binary RBM, energy E(v, h) = -b'v - c'h - v'Wh.
struct RbmParams {
  Tensor weights;       // D x P
  Tensor visible_bias;  // D
  Tensor hidden_bias;   // P

  static RbmParams zeros(std::size_t visible, std::size_t hidden);
  /// W ~ N(0, stddev^2), biases zero.
  static RbmParams gaussian(std::size_t visible, std::size_t hidden, Rng& rng,
                            double stddev = 0.01);

  std::size_t visible_size() const { return visible_bias.size(); }
  std::size_t hidden_size() const { return hidden_bias.size(); }

  void validate() const;

  std::array<Tensor*, 3> tensors() { return {&weights, &visible_bias, &hidden_bias}; }
  std::array<const Tensor*, 3> tensors() const { return {&weights, &visible_bias, &hidden_bias}; }

  friend bool operator==(const RbmParams&, const RbmParams&) = default;
};

// Batched layer operations. Inputs are either one sample (rank 1, D values)
// or a batch whose leading axis is the sample axis and whose remaining
// extents multiply to D. Outputs keep that convention: {P} for one sample,
// {n, P} for a batch.

/// Per-sample energy of (v, h) pairs.
std::vector<double> energy(const RbmParams& params, const Tensor& visible, const Tensor& hidden);

/// p(h_j = 1 | v) = sigmoid(sum_i v_i W_ij + c_j). v may be real-valued in [0, 1].
Tensor prob_hidden(const RbmParams& params, const Tensor& visible);

/// p(v_i = 1 | h) = sigmoid(sum_j W_ij h_j + b_i), shaped {D} or {n, D}.
Tensor prob_visible(const RbmParams& params, const Tensor& hidden);

/// F(v) = -b'v - sum_j softplus(c_j + sum_i v_i W_ij), one value per sample.
std::vector<double> free_energy(const RbmParams& params, const Tensor& visible);

/// Batch mean of dF/dtheta. Throws on an empty batch.
RbmGrads free_energy_grad(const RbmParams& params, const Tensor& visible);

struct GibbsSample {
  Tensor hidden;
  Tensor visible;
  Tensor visible_prob;
};

/// One block Gibbs sweep v -> h -> v'. `chains` is either a single stream or
/// one stream per sample row.
GibbsSample gibbs_step(const RbmParams& params, const Tensor& visible, std::span<Rng> chains);
GibbsSample gibbs_step(const RbmParams& params, const Tensor& visible, Rng& rng);

/// log Z by enumerating every visible configuration through the closed-form
/// free energy. Guarded to D + P <= 24.
double log_partition(const RbmParams& params);

/// Mean log p(v) over the rows of `data`.
double exact_log_likelihood(const Tensor& data, const RbmParams& params);

/// Largest D + P accepted by the enumeration routines.
inline constexpr std::size_t kMaxEnumerationUnits = 24;

}  // namespace drbn

#endif  // DRBN_RBM_HPP
