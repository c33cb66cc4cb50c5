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

#include "drbn/network.hpp"

#include "drbn/math.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

namespace drbn {
namespace {

using namespace drbn::testing;

NetworkSpec conv_spec() { return NetworkSpec::input({28, 28, 1}).conv(64, 12, 2).conv(128, 5, 2).dense(512); }

TEST(NetworkSpec, WeightCounts) {
  EXPECT_EQ(network_weight_count(NetworkSpec::input({784}).dense(500).dense(1000)), 892000u);
  EXPECT_EQ(network_weight_count(NetworkSpec::input({784}).dense(500).dense(500).dense(1000)), 1142000u);
  EXPECT_EQ(network_weight_count(NetworkSpec::input({784}).dense(1000)), 784000u);
  // 64*12*12 + 128*5*5*64 + 1152*512
  EXPECT_EQ(network_weight_count(conv_spec()), 9216u + 204800u + 589824u);
}

TEST(NetworkSpec, ConvShapeChain) {
  const NetworkSpec s = conv_spec();
  EXPECT_EQ(s.state_shape(0), (Shape{28, 28, 1}));
  EXPECT_EQ(s.state_shape(1), (Shape{9, 9, 64}));
  EXPECT_EQ(s.state_shape(2), (Shape{3, 3, 128}));
  EXPECT_EQ(s.state_shape(3), (Shape{512}));
  EXPECT_TRUE(s.layers[2].flatten);
  EXPECT_EQ(s.layers[2].visible_size(), 1152u);
}

TEST(NetworkSpec, RejectsBadChains) {
  EXPECT_THROW(NetworkSpec::input({784}).conv(4, 3, 1), ShapeError);
  EXPECT_THROW(NetworkSpec::input({28, 28, 1}).conv(4, 11, 2), ShapeError);
  EXPECT_THROW(Drbn(Shape{4}, {}), ShapeError);
  Rng r(0);
  std::vector<LayerParams> layers{random_rbm(4, 3, r), random_rbm(2, 2, r)};
  EXPECT_THROW(Drbn(Shape{4}, layers), ShapeError);
}

TEST(Network, UpwardPassShapesAndZeroParams) {
  const Drbn net = Drbn::zeros(NetworkSpec::input({784}).dense(500).dense(1000));
  Rng r(1);
  const PassRecord up = upward_pass(net, random_binary({3, 784}, r), std::span<Rng>(&r, 1));
  ASSERT_EQ(up.states.size(), 3u);
  EXPECT_EQ(up.states[1].shape(), (Shape{3, 500}));
  EXPECT_EQ(up.states[2].shape(), (Shape{3, 1000}));
  for (std::size_t l = 1; l < 3; ++l)
    for (double p : up.probs[l].values()) EXPECT_EQ(p, 0.5);
  for (double s : up.states[2].values()) EXPECT_TRUE(s == 0.0 || s == 1.0);
}

TEST(Network, ConvUpwardPassShapes) {
  Rng r(2);
  const Drbn net = Drbn::initialize(conv_spec(), r);
  const PassRecord up = upward_pass(net, random_binary({2, 28, 28, 1}, r), std::span<Rng>(&r, 1));
  EXPECT_EQ(up.states[1].shape(), (Shape{2, 9, 9, 64}));
  EXPECT_EQ(up.states[2].shape(), (Shape{2, 3, 3, 128}));
  EXPECT_EQ(up.states[3].shape(), (Shape{2, 512}));
  const PassRecord down = downward_pass(net, up.states[3], std::span<Rng>(&r, 1));
  EXPECT_EQ(down.states[0].shape(), (Shape{2, 28, 28, 1}));
  EXPECT_EQ(down.probs[2].shape(), (Shape{2, 3, 3, 128}));
}

TEST(Network, FlattenIsRowMajorHWC) {
  // The dense layer after a conv layer sees h[i, j, k] at index (i*W + j)*K + k.
  Rng r(3);
  const NetworkSpec spec = NetworkSpec::input({4, 4, 1}).conv(2, 3, 1).dense(1);
  Drbn net = Drbn::zeros(spec);
  auto& dense = std::get<RbmParams>(net.layer(1));
  dense.weights[(1 * 2 + 0) * 2 + 1] = 50.0;  // only h[1, 0, 1] matters
  std::vector<LayerParams> layers = net.layers();
  Tensor top({1, 2, 2, 2});
  top.at({0, 1, 0, 1}) = 1.0;
  EXPECT_NEAR(prob_hidden(dense, top.reshaped({1, 8}))[0], 1.0, 1e-12);
  EXPECT_NEAR(layer_prob_hidden(net.layer(1), top)[0], 1.0, 1e-12);
}

TEST(Network, SingleLayerMatchesRbmGibbsStep) {
  Rng init(4);
  const RbmParams p = random_rbm(6, 4, init);
  const Drbn net(Shape{6}, {p});
  const Tensor v = random_binary({5, 6}, init);
  auto chains_a = Rng::streams(11, 5);
  auto chains_b = chains_a;
  const GibbsIteration it = gibbs_iteration(net, v, chains_a);
  const GibbsSample s = gibbs_step(p, v, chains_b);
  EXPECT_EQ(it.up.states[1], s.hidden);
  EXPECT_EQ(it.visible(), s.visible);
  EXPECT_EQ(it.visible_prob(), s.visible_prob);
  EXPECT_EQ(chains_a, chains_b);
}

TEST(Network, DownwardPassZeroParams) {
  const Drbn net = Drbn::zeros(NetworkSpec::input({6}).dense(4).dense(3));
  Rng r(5);
  const PassRecord down = downward_pass(net, random_binary({2, 3}, r), std::span<Rng>(&r, 1));
  for (double p : down.probs[0].values()) EXPECT_EQ(p, 0.5);
}

TEST(Network, PassesAreDeterministic) {
  Rng init(6);
  const Drbn net = random_network(NetworkSpec::input({8}).dense(5).dense(3), init);
  const Tensor v = random_binary({4, 8}, init);
  auto run = [&] {
    auto chains = Rng::streams(3, 4);
    Tensor x = v;
    for (int i = 0; i < 3; ++i) x = gibbs_iteration(net, x, chains).visible();
    return x;
  };
  EXPECT_EQ(run(), run());
}

TEST(Network, EnergiesAreLayerLocal) {
  Rng init(7);
  const Drbn net = random_network(NetworkSpec::input({5}).dense(4).dense(3), init);
  const PassRecord up = upward_pass(net, random_binary({2, 5}, init), std::span<Rng>(&init, 1));
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const auto e = layer_energy(net.layer(l), up.states[l], up.states[l + 1]);
    const auto& p = std::get<RbmParams>(net.layer(l));
    for (std::size_t n = 0; n < 2; ++n) {
      const Tensor a = up.states[l].slice_rows(n, n + 1).reshaped({p.visible_size()});
      const Tensor b = up.states[l + 1].slice_rows(n, n + 1).reshaped({p.hidden_size()});
      EXPECT_NEAR(e[n], dense_energy(p, a, b), 1e-12);
    }
  }
}

TEST(Generate, UntrainedNetGivesNoiseAroundHalf) {
  Rng r(8);
  const Drbn net = Drbn::initialize(NetworkSpec::input({28, 28}).dense(50).dense(20), r);
  const Tensor g = generate(net, 10, 5, 1);
  EXPECT_EQ(g.shape(), (Shape{10, 28, 28}));
  double mean = 0;
  for (double x : g.values()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
    mean += x;
  }
  mean /= static_cast<double>(g.size());
  EXPECT_GE(mean, 0.45);
  EXPECT_LE(mean, 0.55);
}

TEST(Generate, SeededAndValidated) {
  Rng r(9);
  const Drbn net = random_network(NetworkSpec::input({9}).dense(4), r);
  EXPECT_EQ(generate(net, 3, 4, 5), generate(net, 3, 4, 5));
  EXPECT_NE(generate(net, 3, 4, 5), generate(net, 3, 4, 6));
  EXPECT_THROW(generate(net, 3, 0, 5), std::invalid_argument);
  EXPECT_THROW(generate(net, 0, 1, 5), std::invalid_argument);
}

}  // namespace
}  // namespace drbn
