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

#include "drbn/math.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace drbn {
namespace {

using namespace drbn::testing;

const ConvGeometry kSmall{6, 6, 1, 1, 3, 1};

TEST(ConvRbm, ShapesOfReferenceLayers) {
  const ConvRbmParams a = ConvRbmParams::zeros({28, 28, 1, 64, 12, 2});
  EXPECT_EQ(a.hidden_shape(), (Shape{9, 9, 64}));
  const ConvRbmParams b = ConvRbmParams::zeros({9, 9, 64, 128, 5, 2});
  EXPECT_EQ(b.hidden_shape(), (Shape{3, 3, 128}));
  EXPECT_EQ(a.visible_bias.size(), 1u);
  EXPECT_EQ(a.hidden_bias.size(), 64u);
}

TEST(ConvRbm, IdentityFilterCopiesInput) {
  Rng r(1);
  const Tensor x = random_normal({5, 5, 1}, r, 1.0);
  EXPECT_EQ(conv_valid(x, Tensor({1, 1, 1, 1}, 1.0), 1), x);
}

TEST(ConvRbm, TransposeStampsFilter) {
  Rng r(2);
  const Tensor w = random_normal({1, 3, 3, 1}, r, 1.0);
  Tensor h({4, 4, 1});
  h.at({0, 0, 0}) = 1.0;
  const Tensor v = conv_transpose(h, w, 1);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 6; ++x)
      EXPECT_EQ(v.at({y, x, 0}), (y < 3 && x < 3) ? w.at({0, y, x, 0}) : 0.0);
  for (double x : conv_transpose(Tensor({4, 4, 1}), w, 1).values()) EXPECT_EQ(x, 0.0);
}

TEST(ConvRbmEnergy, SpecialCases) {
  Rng r(3);
  const ConvRbmParams p = random_conv_rbm(kSmall, r);
  EXPECT_EQ(energy(p, Tensor(kSmall.input_shape()), Tensor(kSmall.output_shape()))[0], 0.0);
  const Tensor v = random_binary(kSmall.input_shape(), r);
  double sum_v = 0;
  for (double x : v.values()) sum_v += x;
  EXPECT_NEAR(energy(p, v, Tensor(kSmall.output_shape()))[0], -p.visible_bias[0] * sum_v, 1e-14);
}

TEST(ConvRbmEnergy, MatchesLoopOracle) {
  Rng r(4);
  const ConvGeometry g{7, 7, 2, 3, 3, 2};
  const ConvRbmParams p = random_conv_rbm(g, r);
  const Tensor v = random_binary(batched(3, g.input_shape()), r);
  const Tensor h = random_binary(batched(3, g.output_shape()), r);
  const auto e = energy(p, v, h);
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_LT(relative_error(e[n], conv_energy(p, v.slice_rows(n, n + 1), h.slice_rows(n, n + 1))), 1e-12);
  }
}

TEST(ConvRbmConditionals, BiasOnlyValues) {
  ConvRbmParams p = ConvRbmParams::zeros({6, 6, 1, 2, 3, 1});
  for (double x : prob_hidden(p, Tensor({6, 6, 1}, 1.0)).values()) EXPECT_EQ(x, 0.5);
  for (double x : prob_visible(p, Tensor({4, 4, 2}, 1.0)).values()) EXPECT_EQ(x, 0.5);
  p.hidden_bias[1] = std::log(3.0);
  const Tensor ph = prob_hidden(p, Tensor({6, 6, 1}));
  for (std::size_t i = 0; i < ph.size(); ++i) EXPECT_NEAR(ph[i], i % 2 == 1 ? 0.75 : 0.5, 1e-15);
  p.visible_bias[0] = -1.25;
  for (double x : prob_visible(p, Tensor({4, 4, 2})).values()) EXPECT_DOUBLE_EQ(x, sigmoid(-1.25));
}

TEST(ConvRbmFreeEnergy, AllZeroParams) {
  const ConvRbmParams p = ConvRbmParams::zeros({6, 6, 1, 2, 3, 1});
  EXPECT_NEAR(free_energy(p, Tensor({6, 6, 1}, 1.0))[0], -(4.0 * 4.0 * 2.0) * std::log(2.0), 1e-12);
}

TEST(ConvRbmFreeEnergy, MatchesEnumerationOnNineHidden) {
  Rng r(5);
  const ConvGeometry g{4, 4, 1, 1, 3, 1};  // 2x2 hidden ... widened below
  const ConvGeometry g9{5, 5, 1, 1, 3, 1};  // 3x3x1 = 9 hidden units
  for (const ConvGeometry& geo : {g, g9}) {
    const ConvRbmParams p = random_conv_rbm(geo, r, 0.8);
    for (int trial = 0; trial < 4; ++trial) {
      const Tensor v = random_binary(geo.input_shape(), r);
      EXPECT_LT(relative_error(free_energy(p, v)[0], enumerated_free_energy(p, v)), 1e-10);
    }
  }
}

TEST(ConvRbmUnrolling, EverythingMatchesDenseEquivalent) {
  Rng r(6);
  for (const ConvGeometry& g : {kSmall, ConvGeometry{6, 6, 2, 2, 3, 1}, ConvGeometry{7, 7, 1, 2, 3, 2}}) {
    const ConvRbmParams c = random_conv_rbm(g, r, 0.6);
    const RbmParams d = unroll(c);
    const std::size_t n = 5;
    const Tensor v = random_binary(batched(n, g.input_shape()), r);
    const Tensor h = random_binary(batched(n, g.output_shape()), r);
    const Tensor vf = v.reshaped({n, d.visible_size()}), hf = h.reshaped({n, d.hidden_size()});

    const auto ec = energy(c, v, h), ed = energy(d, vf, hf);
    const auto fc = free_energy(c, v), fd = free_energy(d, vf);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LT(relative_error(ec[i], ed[i]), 1e-10);
      EXPECT_LT(relative_error(fc[i], fd[i]), 1e-10);
    }
    EXPECT_LT(relative_error(prob_hidden(c, v).reshaped({n, d.hidden_size()}), prob_hidden(d, vf)), 1e-10);
    EXPECT_LT(relative_error(prob_visible(c, h).reshaped({n, d.visible_size()}), prob_visible(d, hf)), 1e-10);

    const ParamGrads gc = free_energy_grad(c, v);
    const ParamGrads gd = fold_unrolled_grads(free_energy_grad(d, vf), g);
    EXPECT_LT(relative_error(gc.weights, gd.weights), 1e-10);
    EXPECT_LT(relative_error(gc.visible_bias, gd.visible_bias), 1e-10);
    EXPECT_LT(relative_error(gc.hidden_bias, gd.hidden_bias), 1e-10);
  }
}

TEST(ConvRbmGradient, MatchesCentralDifferences) {
  Rng r(7);
  for (const ConvGeometry& g : {kSmall, ConvGeometry{7, 7, 2, 2, 3, 2}}) {
    ConvRbmParams p = random_conv_rbm(g, r, 0.5);
    const Tensor v = random_binary(batched(4, g.input_shape()), r);
    const ParamGrads grad = free_energy_grad(p, v);
    auto mean_fe = [&] {
      double s = 0;
      for (double x : free_energy(p, v)) s += x;
      return s / 4.0;
    };
    EXPECT_LT(relative_error(grad.weights, central_difference(p.filters, mean_fe)), 1e-6);
    EXPECT_LT(relative_error(grad.visible_bias, central_difference(p.visible_bias, mean_fe)), 1e-6);
    EXPECT_LT(relative_error(grad.hidden_bias, central_difference(p.hidden_bias, mean_fe)), 1e-6);
  }
}

TEST(ConvRbmGradient, SpecialCases) {
  Rng r(8);
  const ConvRbmParams p = random_conv_rbm(kSmall, r);
  const ParamGrads g0 = free_energy_grad(p, Tensor(batched(3, kSmall.input_shape())));
  for (double x : g0.weights.values()) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(g0.visible_bias[0], 0.0);
  const ConvGeometry g{6, 6, 1, 2, 3, 1};
  const ParamGrads g1 = free_energy_grad(ConvRbmParams::zeros(g), random_binary(batched(2, g.input_shape()), r));
  for (double x : g1.hidden_bias.values()) EXPECT_DOUBLE_EQ(x, -0.5 * 16);
}

TEST(ConvRbm, AcceptsFlatBatches) {
  Rng r(9);
  const ConvRbmParams p = random_conv_rbm(kSmall, r);
  const Tensor v = random_binary(batched(3, kSmall.input_shape()), r);
  EXPECT_EQ(free_energy(p, v), free_energy(p, v.reshaped({3, 36})));
}

}  // namespace
}  // namespace drbn
