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

#ifndef DRBN_TESTS_ORACLES_HPP
#define DRBN_TESTS_ORACLES_HPP

// Reference implementations written directly from the model definitions,
// sharing no code with the library beyond the parameter containers.

#include "drbn/conv_rbm.hpp"
#include "drbn/network.hpp"
#include "drbn/rbm.hpp"
#include "drbn/rng.hpp"
#include "drbn/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace drbn::testing {

// Triple-loop product of 2-D tensors.
Tensor naive_matmul(const Tensor& a, const Tensor& b);

// Direct sum over the window for one H x W x C input and K x Nw x Nw x C filters.
Tensor naive_conv(const Tensor& input, const Tensor& filters, std::size_t stride);

// Direct scatter of one H' x W' x K hidden map back onto the input grid.
Tensor naive_conv_transpose(const Tensor& hidden, const Tensor& filters, std::size_t stride,
                            std::size_t height, std::size_t width);

// Bits of `mask` as a {n} tensor of 0/1, least significant bit first.
Tensor bits(std::uint64_t mask, std::size_t n);

// E(v, h) = -b'v - c'h - v'Wh for one sample, by explicit loops.
double dense_energy(const RbmParams& p, const Tensor& v, const Tensor& h);
// Conv energy by explicit loops over (i, j, k, r, s, c).
double conv_energy(const ConvRbmParams& p, const Tensor& v, const Tensor& h);

// -log sum_h exp(-E(v, h)) by enumerating all hidden configurations.
double enumerated_free_energy(const RbmParams& p, const Tensor& v);
double enumerated_free_energy(const ConvRbmParams& p, const Tensor& v);

// log sum_{v,h} exp(-E(v, h)) by joint enumeration (D + P <= 22).
double enumerated_log_partition(const RbmParams& p);

// p(h_j = 1 | v) as a marginal of the enumerated conditional distribution.
Tensor enumerated_hidden_marginals(const RbmParams& p, const Tensor& v);

// The dense RBM whose energy equals the conv RBM's on every state. Visible
// units are ordered (y, x, c) and hidden units (i, j, k), both row-major.
RbmParams unroll(const ConvRbmParams& p);
// Folds gradients of the unrolled RBM back onto the shared conv parameters.
ParamGrads fold_unrolled_grads(const ParamGrads& dense, const ConvGeometry& g);

// (f(x + h e_i) - f(x - h e_i)) / 2h for every entry i of t.
Tensor central_difference(Tensor& t, const std::function<double()>& f, double h = 1e-5);

// ||a - b||_2 / ||b||_2 (vectors) and |a - b| / |b| (scalars); exact
// agreement counts as 0 even when b is 0.
double relative_error(const Tensor& a, const Tensor& b);
double relative_error(double a, double b);

Tensor random_binary(const Shape& shape, Rng& rng, double p = 0.5);
Tensor random_uniform(const Shape& shape, Rng& rng, double lo = 0.0, double hi = 1.0);
Tensor random_normal(const Shape& shape, Rng& rng, double stddev);
RbmParams random_rbm(std::size_t visible, std::size_t hidden, Rng& rng, double scale = 0.5);
ConvRbmParams random_conv_rbm(const ConvGeometry& g, Rng& rng, double scale = 0.5);
// Random weights and biases at every layer of a spec.
Drbn random_network(const NetworkSpec& spec, Rng& rng, double scale = 0.5);

}  // namespace drbn::testing

#endif  // DRBN_TESTS_ORACLES_HPP
