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

#include "drbn/conv_rbm.hpp"

#include <stdexcept>

namespace drbn {

namespace {

struct ConvBatch {
  Tensor data;  // always rank 4
  bool single;
};

ConvBatch as_batch(const Tensor& t, const Shape& unit, const char* what) {
  const std::size_t unit_size = shape_size(unit);
  const bool single = (t.rank() <= 1 || t.shape() == unit) && t.size() == unit_size;
  if (single) return {t.reshaped(batched(1, unit)), true};
  if (t.rank() < 2 || t.size() != t.dim(0) * unit_size) {
    throw ShapeError(std::string(what) + ": shape " + to_string(t.shape()) +
                     " is not a batch of " + to_string(unit) + " samples");
  }
  return {t.reshaped(batched(t.dim(0), unit)), false};
}

Tensor finish(Tensor t, bool single) {
  if (single) {
    Shape s(t.shape().begin() + 1, t.shape().end());
    t.reshape(std::move(s));
  }
  return t;
}

// alpha[n, i, j, k] = conv_valid(v, W)[n, i, j, k] + c_k
Tensor hidden_inputs(const ConvRbmParams& p, const Tensor& batch) {
  Tensor alpha = conv_valid(batch, p.filters, p.geometry.stride);
  const std::size_t K = p.geometry.filters;
  for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] += p.hidden_bias[i % K];
  return alpha;
}

}  // namespace

ConvRbmParams ConvRbmParams::zeros(const ConvGeometry& geometry) {
  geometry.validate();
  ConvRbmParams p{geometry, Tensor(geometry.filter_shape()), Tensor({1}), Tensor({geometry.filters})};
  return p;
}

ConvRbmParams ConvRbmParams::gaussian(const ConvGeometry& geometry, Rng& rng, double stddev) {
  ConvRbmParams p = zeros(geometry);
  for (auto& w : p.filters.values()) w = stddev * rng.normal();
  return p;
}

void ConvRbmParams::validate() const {
  geometry.validate();
  if (filters.shape() != geometry.filter_shape() || visible_bias.shape() != Shape{1} ||
      hidden_bias.shape() != Shape{geometry.filters}) {
    throw ShapeError("conv RBM parameter shapes inconsistent with geometry: filters " +
                     to_string(filters.shape()) + ", b " + to_string(visible_bias.shape()) +
                     ", c " + to_string(hidden_bias.shape()));
  }
  for (const Tensor* t : tensors()) {
    if (!t->all_finite()) throw std::domain_error("conv RBM parameters contain non-finite values");
  }
}

std::vector<double> energy(const ConvRbmParams& p, const Tensor& visible, const Tensor& hidden) {
  const auto v = as_batch(visible, p.visible_shape(), "conv energy(visible)");
  const auto h = as_batch(hidden, p.hidden_shape(), "conv energy(hidden)");
  const std::size_t rows = v.data.dim(0);
  if (h.data.dim(0) != rows) throw ShapeError("conv energy: batch sizes differ");
  const Tensor alpha = hidden_inputs(p, v.data);
  const std::size_t vs = p.visible_size(), hs = p.hidden_size();
  const double b = p.visible_bias[0];
  std::vector<double> out(rows);
  for (std::size_t n = 0; n < rows; ++n) {
    double e = 0.0;
    for (std::size_t i = n * hs; i < (n + 1) * hs; ++i) e -= h.data[i] * alpha[i];
    double vsum = 0.0;
    for (std::size_t i = n * vs; i < (n + 1) * vs; ++i) vsum += v.data[i];
    out[n] = e - b * vsum;
  }
  return out;
}

Tensor prob_hidden(const ConvRbmParams& p, const Tensor& visible) {
  auto v = as_batch(visible, p.visible_shape(), "conv prob_hidden");
  Tensor alpha = hidden_inputs(p, v.data);
  sigmoid_inplace(alpha);
  return finish(std::move(alpha), v.single);
}

Tensor prob_visible(const ConvRbmParams& p, const Tensor& hidden) {
  auto h = as_batch(hidden, p.hidden_shape(), "conv prob_visible");
  Tensor out = conv_transpose(h.data, p.filters, p.geometry.stride);
  const double b = p.visible_bias[0];
  for (auto& x : out.values()) x = sigmoid(x + b);
  return finish(std::move(out), h.single);
}

std::vector<double> free_energy(const ConvRbmParams& p, const Tensor& visible) {
  const auto v = as_batch(visible, p.visible_shape(), "conv free_energy");
  const std::size_t rows = v.data.dim(0);
  const Tensor alpha = hidden_inputs(p, v.data);
  const std::size_t vs = p.visible_size(), hs = p.hidden_size();
  const double b = p.visible_bias[0];
  std::vector<double> out(rows);
  for (std::size_t n = 0; n < rows; ++n) {
    double acc = 0.0;
    for (std::size_t i = n * hs; i < (n + 1) * hs; ++i) acc += softplus(alpha[i]);
    double vsum = 0.0;
    for (std::size_t i = n * vs; i < (n + 1) * vs; ++i) vsum += v.data[i];
    out[n] = -b * vsum - acc;
  }
  return out;
}

ConvRbmGrads free_energy_grad(const ConvRbmParams& p, const Tensor& visible) {
  const auto v = as_batch(visible, p.visible_shape(), "conv free_energy_grad");
  const std::size_t rows = v.data.dim(0);
  if (rows == 0) throw std::invalid_argument("conv free_energy_grad: empty batch");
  Tensor act = hidden_inputs(p, v.data);
  sigmoid_inplace(act);
  const double scale = -1.0 / static_cast<double>(rows);

  ConvRbmGrads g;
  g.weights = conv_filter_correlation(v.data, act, p.geometry);
  g.weights *= scale;

  double vsum = 0.0;
  for (double x : v.data.values()) vsum += x;
  g.visible_bias = Tensor({1}, scale * vsum);

  const std::size_t K = p.geometry.filters;
  g.hidden_bias = Tensor({K});
  for (std::size_t i = 0; i < act.size(); ++i) g.hidden_bias[i % K] += act[i];
  g.hidden_bias *= scale;
  return g;
}

}  // namespace drbn
