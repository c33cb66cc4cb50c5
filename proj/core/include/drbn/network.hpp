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

#ifndef DRBN_NETWORK_HPP
#define DRBN_NETWORK_HPP

#include "drbn/conv_rbm.hpp"
#include "drbn/rbm.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace drbn {

enum class LayerKind { dense = 0, conv = 1 };

/// One layer of a network specification, resolved against its input shape.
///
/// A dense layer consumes whatever its predecessor produced as one flat
/// vector. At a conv -> dense junction the H x W x C state is flattened in
/// row-major (H, W, C) order, i.e. channel fastest, and `flatten` is set.
struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  Shape visible_shape;
  Shape hidden_shape;
  ConvGeometry conv;  // meaningful for conv layers only
  bool flatten = false;

  std::size_t visible_size() const { return shape_size(visible_shape); }
  std::size_t hidden_size() const { return shape_size(hidden_shape); }
  std::size_t weight_count() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Declarative layer stack. Build with the fluent helpers:
///   NetworkSpec::input({784}).dense(500).dense(1000)
///   NetworkSpec::input({28, 28, 1}).conv(64, 12, 2).conv(128, 5, 2).dense(512)
struct NetworkSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;

  static NetworkSpec input(Shape shape);
  NetworkSpec& dense(std::size_t hidden);
  NetworkSpec& conv(std::size_t filters, std::size_t kernel, std::size_t stride);

  /// Shape of the state at boundary l (0 = input, layers.size() = top).
  Shape state_shape(std::size_t l) const;
  void validate() const;
  std::string describe() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Total weight entries (W and filters), biases excluded.
std::size_t network_weight_count(const NetworkSpec& spec);

using LayerParams = std::variant<RbmParams, ConvRbmParams>;

/// A stack of RBMs where the hidden state of layer l is the visible state of
/// layer l + 1. Energies, free energies and gradients are local to a layer.
class Drbn {
 public:
  Drbn() = default;
  /// Validates every layer and the shape chain between them.
  Drbn(Shape input_shape, std::vector<LayerParams> layers);

  /// Gaussian weights (stddev), zero biases, one Rng for the whole stack.
  static Drbn initialize(const NetworkSpec& spec, Rng& rng, double stddev = 0.01);
  static Drbn zeros(const NetworkSpec& spec);

  std::size_t depth() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  const LayerParams& layer(std::size_t l) const { return layers_.at(l); }
  LayerParams& layer(std::size_t l) { return layers_.at(l); }
  const std::vector<LayerParams>& layers() const { return layers_; }

  const Shape& input_shape() const { return input_shape_; }
  /// Shape of one sample at boundary l, 0 <= l <= depth().
  Shape state_shape(std::size_t l) const;
  NetworkSpec spec() const;
  std::size_t weight_count() const { return network_weight_count(spec()); }

  void validate() const;

  friend bool operator==(const Drbn&, const Drbn&) = default;

 private:
  Shape input_shape_;
  std::vector<LayerParams> layers_;
};

// Layer-generic wrappers over the dense/conv overloads.
Tensor layer_prob_hidden(const LayerParams& layer, const Tensor& visible);
Tensor layer_prob_visible(const LayerParams& layer, const Tensor& hidden);
std::vector<double> layer_free_energy(const LayerParams& layer, const Tensor& visible);
std::vector<double> layer_energy(const LayerParams& layer, const Tensor& visible, const Tensor& hidden);
ParamGrads layer_free_energy_grad(const LayerParams& layer, const Tensor& visible);
std::array<Tensor*, 3> layer_tensors(LayerParams& layer);
std::array<const Tensor*, 3> layer_tensors(const LayerParams& layer);
Shape layer_visible_shape(const LayerParams& layer);
Shape layer_hidden_shape(const LayerParams& layer);

/// States x^(0..L) and the probabilities they were sampled from. The entry
/// at the boundary where a pass starts holds the given state itself.
struct PassRecord {
  std::vector<Tensor> states;
  std::vector<Tensor> probs;
};

/// x^(l+1) ~ Bernoulli(p(x^(l+1) | x^(l))) for l = 0..L-1. Batched input
/// {n, input_shape...}; `chains` holds one stream, or one per row.
PassRecord upward_pass(const Drbn& net, const Tensor& input, std::span<Rng> chains);

/// x^(l) ~ Bernoulli(p(x^(l) | x^(l+1))) for l = L-1..0, starting from a
/// batched top state {n, top_shape...}.
PassRecord downward_pass(const Drbn& net, const Tensor& top, std::span<Rng> chains);

struct GibbsIteration {
  PassRecord up;
  PassRecord down;
  const Tensor& visible() const { return down.states.front(); }
  const Tensor& visible_prob() const { return down.probs.front(); }
};

/// One up-and-down cycle.
GibbsIteration gibbs_iteration(const Drbn& net, const Tensor& visible, std::span<Rng> chains);

/// Starts n_images chains from Bernoulli(0.5) noise, runs n_steps Gibbs
/// iterations and returns the visible probabilities of the last downward
/// pass, shaped {n_images, input_shape...}. Chain i uses Rng::stream(seed, i).
Tensor generate(const Drbn& net, std::size_t n_images, std::size_t n_steps, std::uint64_t seed);

}  // namespace drbn

#endif  // DRBN_NETWORK_HPP
