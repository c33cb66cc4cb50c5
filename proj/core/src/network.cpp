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

#include <sstream>
#include <stdexcept>

namespace drbn {

namespace {

template <typename... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <typename... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

std::string shape_text(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out;
}

void require_batched(const Tensor& t, const Shape& unit, const char* what) {
  if (t.rank() != unit.size() + 1 || Shape(t.shape().begin() + 1, t.shape().end()) != unit) {
    throw ShapeError(std::string(what) + ": expected a batch of " + to_string(unit) +
                     " samples, got " + to_string(t.shape()));
  }
}

}  // namespace

std::size_t LayerSpec::weight_count() const {
  if (kind == LayerKind::conv) return shape_size(conv.filter_shape());
  return visible_size() * hidden_size();
}

NetworkSpec NetworkSpec::input(Shape shape) {
  if (shape.empty() || shape_size(shape) == 0) throw ShapeError("network input shape must be non-empty");
  NetworkSpec spec;
  spec.input_shape = std::move(shape);
  return spec;
}

NetworkSpec& NetworkSpec::dense(std::size_t hidden) {
  if (hidden == 0) throw ShapeError("dense layer needs at least one hidden unit");
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.visible_shape = state_shape(layers.size());
  l.flatten = l.visible_shape.size() > 1;
  l.hidden_shape = {hidden};
  layers.push_back(std::move(l));
  return *this;
}

NetworkSpec& NetworkSpec::conv(std::size_t filters, std::size_t kernel, std::size_t stride) {
  const Shape in = state_shape(layers.size());
  if (in.size() != 3) {
    throw ShapeError("conv layer needs an H x W x C input, got " + to_string(in));
  }
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.conv = ConvGeometry{in[0], in[1], in[2], filters, kernel, stride};
  l.conv.validate();
  l.visible_shape = in;
  l.hidden_shape = l.conv.output_shape();
  layers.push_back(std::move(l));
  return *this;
}

Shape NetworkSpec::state_shape(std::size_t l) const {
  if (l == 0) return input_shape;
  return layers.at(l - 1).hidden_shape;
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw ShapeError("network needs at least one layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& spec = layers[l];
    const Shape below = state_shape(l);
    if (spec.kind == LayerKind::conv) {
      spec.conv.validate();
      if (spec.visible_shape != below || spec.hidden_shape != spec.conv.output_shape()) {
        throw ShapeError("layer " + std::to_string(l) + ": conv shapes do not chain");
      }
    } else if (spec.visible_size() != shape_size(below)) {
      throw ShapeError("layer " + std::to_string(l) + ": dense visible size " +
                       std::to_string(spec.visible_size()) + " != " +
                       std::to_string(shape_size(below)));
    }
  }
}

std::string NetworkSpec::describe() const {
  std::ostringstream os;
  os << shape_text(input_shape);
  for (const auto& l : layers) {
    if (l.kind == LayerKind::conv) {
      os << " -> conv " << l.conv.filters << "x" << l.conv.kernel << "x" << l.conv.kernel << "/s"
         << l.conv.stride << " -> " << shape_text(l.hidden_shape);
    } else {
      if (l.flatten) os << " -> flatten " << l.visible_size();
      os << " -> dense " << l.hidden_size();
    }
  }
  return os.str();
}

std::size_t network_weight_count(const NetworkSpec& spec) {
  spec.validate();
  std::size_t total = 0;
  for (const auto& l : spec.layers) total += l.weight_count();
  return total;
}

// ---------------------------------------------------------------------------

Tensor layer_prob_hidden(const LayerParams& layer, const Tensor& visible) {
  return std::visit([&](const auto& p) { return prob_hidden(p, visible); }, layer);
}

Tensor layer_prob_visible(const LayerParams& layer, const Tensor& hidden) {
  return std::visit([&](const auto& p) { return prob_visible(p, hidden); }, layer);
}

std::vector<double> layer_free_energy(const LayerParams& layer, const Tensor& visible) {
  return std::visit([&](const auto& p) { return free_energy(p, visible); }, layer);
}

std::vector<double> layer_energy(const LayerParams& layer, const Tensor& visible,
                                 const Tensor& hidden) {
  return std::visit([&](const auto& p) { return energy(p, visible, hidden); }, layer);
}

ParamGrads layer_free_energy_grad(const LayerParams& layer, const Tensor& visible) {
  return std::visit([&](const auto& p) { return free_energy_grad(p, visible); }, layer);
}

std::array<Tensor*, 3> layer_tensors(LayerParams& layer) {
  return std::visit([](auto& p) { return p.tensors(); }, layer);
}

std::array<const Tensor*, 3> layer_tensors(const LayerParams& layer) {
  return std::visit([](const auto& p) { return p.tensors(); }, layer);
}

Shape layer_visible_shape(const LayerParams& layer) {
  return std::visit(overloaded{[](const RbmParams& p) { return Shape{p.visible_size()}; },
                               [](const ConvRbmParams& p) { return p.visible_shape(); }},
                    layer);
}

Shape layer_hidden_shape(const LayerParams& layer) {
  return std::visit(overloaded{[](const RbmParams& p) { return Shape{p.hidden_size()}; },
                               [](const ConvRbmParams& p) { return p.hidden_shape(); }},
                    layer);
}

// ---------------------------------------------------------------------------

Drbn::Drbn(Shape input_shape, std::vector<LayerParams> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  validate();
}

Drbn Drbn::initialize(const NetworkSpec& spec, Rng& rng, double stddev) {
  spec.validate();
  std::vector<LayerParams> layers;
  for (const auto& l : spec.layers) {
    if (l.kind == LayerKind::conv) {
      layers.emplace_back(ConvRbmParams::gaussian(l.conv, rng, stddev));
    } else {
      layers.emplace_back(RbmParams::gaussian(l.visible_size(), l.hidden_size(), rng, stddev));
    }
  }
  return Drbn(spec.input_shape, std::move(layers));
}

Drbn Drbn::zeros(const NetworkSpec& spec) {
  spec.validate();
  std::vector<LayerParams> layers;
  for (const auto& l : spec.layers) {
    if (l.kind == LayerKind::conv) {
      layers.emplace_back(ConvRbmParams::zeros(l.conv));
    } else {
      layers.emplace_back(RbmParams::zeros(l.visible_size(), l.hidden_size()));
    }
  }
  return Drbn(spec.input_shape, std::move(layers));
}

Shape Drbn::state_shape(std::size_t l) const {
  if (l == 0) return input_shape_;
  return layer_hidden_shape(layers_.at(l - 1));
}

NetworkSpec Drbn::spec() const {
  NetworkSpec spec = NetworkSpec::input(input_shape_);
  for (const auto& layer : layers_) {
    if (const auto* conv = std::get_if<ConvRbmParams>(&layer)) {
      spec.conv(conv->geometry.filters, conv->geometry.kernel, conv->geometry.stride);
    } else {
      spec.dense(std::get<RbmParams>(layer).hidden_size());
    }
  }
  return spec;
}

void Drbn::validate() const {
  if (layers_.empty()) throw ShapeError("DRBN needs at least one layer");
  if (input_shape_.empty()) throw ShapeError("DRBN input shape is empty");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    std::visit([](const auto& p) { p.validate(); }, layers_[l]);
    const Shape below = state_shape(l);
    const Shape visible = layer_visible_shape(layers_[l]);
    const bool ok = std::holds_alternative<ConvRbmParams>(layers_[l])
                        ? visible == below
                        : shape_size(visible) == shape_size(below);
    if (!ok) {
      throw ShapeError("layer " + std::to_string(l) + " expects visible " + to_string(visible) +
                       " but receives " + to_string(below));
    }
  }
}

// ---------------------------------------------------------------------------

PassRecord upward_pass(const Drbn& net, const Tensor& input, std::span<Rng> chains) {
  require_batched(input, net.input_shape(), "upward_pass");
  const std::size_t L = net.depth();
  PassRecord rec;
  rec.states.reserve(L + 1);
  rec.probs.reserve(L + 1);
  rec.states.push_back(input);
  rec.probs.push_back(input);
  for (std::size_t l = 0; l < L; ++l) {
    Tensor p = layer_prob_hidden(net.layer(l), rec.states[l]);
    p.reshape(batched(input.dim(0), net.state_shape(l + 1)));
    rec.states.push_back(bernoulli_sample(p, chains));
    rec.probs.push_back(std::move(p));
  }
  return rec;
}

PassRecord downward_pass(const Drbn& net, const Tensor& top, std::span<Rng> chains) {
  const std::size_t L = net.depth();
  require_batched(top, net.state_shape(L), "downward_pass");
  PassRecord rec;
  rec.states.resize(L + 1);
  rec.probs.resize(L + 1);
  rec.states[L] = top;
  rec.probs[L] = top;
  for (std::size_t l = L; l-- > 0;) {
    Tensor p = layer_prob_visible(net.layer(l), rec.states[l + 1]);
    p.reshape(batched(top.dim(0), net.state_shape(l)));
    rec.states[l] = bernoulli_sample(p, chains);
    rec.probs[l] = std::move(p);
  }
  return rec;
}

GibbsIteration gibbs_iteration(const Drbn& net, const Tensor& visible, std::span<Rng> chains) {
  GibbsIteration it;
  it.up = upward_pass(net, visible, chains);
  it.down = downward_pass(net, it.up.states.back(), chains);
  return it;
}

Tensor generate(const Drbn& net, std::size_t n_images, std::size_t n_steps, std::uint64_t seed) {
  if (n_steps == 0) throw std::invalid_argument("generate: n_steps must be at least 1");
  if (n_images == 0) throw std::invalid_argument("generate: n_images must be at least 1");
  auto chains = Rng::streams(seed, n_images);
  Tensor x = bernoulli_sample(Tensor(batched(n_images, net.input_shape()), 0.5), chains);
  Tensor prob;
  for (std::size_t step = 0; step < n_steps; ++step) {
    auto it = gibbs_iteration(net, x, chains);
    x = std::move(it.down.states.front());
    prob = std::move(it.down.probs.front());
  }
  return prob;
}

}  // namespace drbn
