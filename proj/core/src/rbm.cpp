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

#include "drbn/rbm.hpp"

#include "drbn/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace drbn {

namespace {

std::size_t batch_rows(const Tensor& t, std::size_t unit, const char* what) {
  if (t.rank() == 1) {
    if (t.size() != unit) {
      throw ShapeError(std::string(what) + ": expected " + std::to_string(unit) + " values, got " +
                       to_string(t.shape()));
    }
    return 1;
  }
  if (t.rank() < 1 || t.size() != t.dim(0) * unit) {
    throw ShapeError(std::string(what) + ": shape " + to_string(t.shape()) +
                     " is not a batch of " + std::to_string(unit) + "-unit samples");
  }
  return t.dim(0);
}

Shape output_shape(const Tensor& input, std::size_t rows, std::size_t unit) {
  return input.rank() == 1 ? Shape{unit} : Shape{rows, unit};
}

using ConstMap = Eigen::Map<const RowMajorMatrix<double>>;

ConstMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

// Pre-activations V W + c, one row per sample.
RowMajorMatrix<double> hidden_inputs(const RbmParams& p, const Tensor& visible, std::size_t rows) {
  const auto D = p.visible_size(), P = p.hidden_size();
  RowMajorMatrix<double> a = as_matrix(visible, rows, D) * as_matrix(p.weights, D, P);
  a.rowwise() += p.hidden_bias.row_vector();
  return a;
}

}  // namespace

ParamGrads& ParamGrads::operator-=(const ParamGrads& other) {
  weights -= other.weights;
  visible_bias -= other.visible_bias;
  hidden_bias -= other.hidden_bias;
  return *this;
}

RbmParams RbmParams::zeros(std::size_t visible, std::size_t hidden) {
  RbmParams p{Tensor({visible, hidden}), Tensor({visible}), Tensor({hidden})};
  p.validate();
  return p;
}

RbmParams RbmParams::gaussian(std::size_t visible, std::size_t hidden, Rng& rng, double stddev) {
  RbmParams p = zeros(visible, hidden);
  for (auto& w : p.weights.values()) w = stddev * rng.normal();
  return p;
}

void RbmParams::validate() const {
  const auto D = visible_bias.size(), P = hidden_bias.size();
  if (D == 0 || P == 0) throw ShapeError("RBM needs at least one visible and one hidden unit");
  if (visible_bias.rank() != 1 || hidden_bias.rank() != 1 || weights.shape() != Shape{D, P}) {
    throw ShapeError("RBM parameter shapes inconsistent: W " + to_string(weights.shape()) + ", b " +
                     to_string(visible_bias.shape()) + ", c " + to_string(hidden_bias.shape()));
  }
  for (const Tensor* t : tensors()) {
    if (!t->all_finite()) throw std::domain_error("RBM parameters contain non-finite values");
  }
}

std::vector<double> energy(const RbmParams& p, const Tensor& visible, const Tensor& hidden) {
  const auto D = p.visible_size(), P = p.hidden_size();
  const auto rows = batch_rows(visible, D, "energy(visible)");
  if (batch_rows(hidden, P, "energy(hidden)") != rows) {
    throw ShapeError("energy: visible and hidden batch sizes differ");
  }
  const auto V = as_matrix(visible, rows, D);
  const auto H = as_matrix(hidden, rows, P);
  const RowMajorMatrix<double> VW = V * as_matrix(p.weights, D, P);
  std::vector<double> out(rows);
  for (std::size_t n = 0; n < rows; ++n) {
    const auto r = static_cast<Eigen::Index>(n);
    out[n] = -V.row(r).dot(as_matrix(p.visible_bias, 1, D).row(0)) -
             H.row(r).dot(as_matrix(p.hidden_bias, 1, P).row(0)) - VW.row(r).dot(H.row(r));
  }
  return out;
}

Tensor prob_hidden(const RbmParams& p, const Tensor& visible) {
  const auto rows = batch_rows(visible, p.visible_size(), "prob_hidden");
  Tensor out(output_shape(visible, rows, p.hidden_size()));
  auto m = out.matrix();
  m = hidden_inputs(p, visible, rows);
  sigmoid_inplace(out);
  return out;
}

Tensor prob_visible(const RbmParams& p, const Tensor& hidden) {
  const auto D = p.visible_size(), P = p.hidden_size();
  const auto rows = batch_rows(hidden, P, "prob_visible");
  Tensor out(output_shape(hidden, rows, D));
  Eigen::Map<RowMajorMatrix<double>> m(out.data(), static_cast<Eigen::Index>(rows),
                                       static_cast<Eigen::Index>(D));
  m.noalias() = as_matrix(hidden, rows, P) * as_matrix(p.weights, D, P).transpose();
  m.rowwise() += p.visible_bias.row_vector();
  sigmoid_inplace(out);
  return out;
}

std::vector<double> free_energy(const RbmParams& p, const Tensor& visible) {
  const auto D = p.visible_size();
  const auto rows = batch_rows(visible, D, "free_energy");
  const auto alpha = hidden_inputs(p, visible, rows);
  const RowMajorMatrix<double> vb = as_matrix(visible, rows, D) * as_matrix(p.visible_bias, D, 1);
  std::vector<double> out(rows);
  for (std::size_t n = 0; n < rows; ++n) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < alpha.cols(); ++j) {
      acc += softplus(alpha(static_cast<Eigen::Index>(n), j));
    }
    out[n] = -vb(static_cast<Eigen::Index>(n), 0) - acc;
  }
  return out;
}

RbmGrads free_energy_grad(const RbmParams& p, const Tensor& visible) {
  const auto D = p.visible_size(), P = p.hidden_size();
  const auto rows = batch_rows(visible, D, "free_energy_grad");
  if (rows == 0) throw std::invalid_argument("free_energy_grad: empty batch");
  RowMajorMatrix<double> act = hidden_inputs(p, visible, rows);
  act = act.unaryExpr([](double x) { return sigmoid(x); });
  const auto V = as_matrix(visible, rows, D);
  const double scale = -1.0 / static_cast<double>(rows);

  RbmGrads g{Tensor({D, P}), Tensor({D}), Tensor({P})};
  g.weights.matrix().noalias() = scale * (V.transpose() * act);
  Eigen::Map<RowMajorMatrix<double>>(g.visible_bias.data(), 1, static_cast<Eigen::Index>(D)) =
      scale * V.colwise().sum();
  Eigen::Map<RowMajorMatrix<double>>(g.hidden_bias.data(), 1, static_cast<Eigen::Index>(P)) =
      scale * act.colwise().sum();
  return g;
}

GibbsSample gibbs_step(const RbmParams& p, const Tensor& visible, std::span<Rng> chains) {
  GibbsSample s;
  s.hidden = bernoulli_sample(prob_hidden(p, visible), chains);
  s.visible_prob = prob_visible(p, s.hidden);
  s.visible = bernoulli_sample(s.visible_prob, chains);
  if (visible.rank() > 1) {
    s.visible.reshape(visible.shape());
    s.visible_prob.reshape(visible.shape());
  }
  return s;
}

GibbsSample gibbs_step(const RbmParams& p, const Tensor& visible, Rng& rng) {
  return gibbs_step(p, visible, std::span<Rng>(&rng, 1));
}

double log_partition(const RbmParams& p) {
  const auto D = p.visible_size();
  if (D + p.hidden_size() > kMaxEnumerationUnits) {
    throw std::invalid_argument("log_partition: model too large for enumeration (D + P = " +
                                std::to_string(D + p.hidden_size()) + ")");
  }
  const std::size_t total = std::size_t{1} << D;
  const std::size_t chunk = std::min<std::size_t>(total, 4096);
  std::vector<double> neg_f;
  neg_f.reserve(total);
  Tensor states({chunk, D});
  for (std::size_t start = 0; start < total; start += chunk) {
    for (std::size_t s = 0; s < chunk; ++s) {
      const std::size_t code = start + s;
      for (std::size_t i = 0; i < D; ++i) states[s * D + i] = static_cast<double>((code >> i) & 1U);
    }
    for (double f : free_energy(p, states)) neg_f.push_back(-f);
  }
  const double peak = *std::max_element(neg_f.begin(), neg_f.end());
  double acc = 0.0;
  for (double x : neg_f) acc += std::exp(x - peak);
  return peak + std::log(acc);
}

double exact_log_likelihood(const Tensor& data, const RbmParams& p) {
  const double log_z = log_partition(p);
  const auto f = free_energy(p, data);
  double acc = 0.0;
  for (double x : f) acc += -x - log_z;
  return acc / static_cast<double>(f.size());
}

}  // namespace drbn
