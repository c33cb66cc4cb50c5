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

#include "drbn/classifier.hpp"

#include "drbn/math.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace drbn {

namespace {

constexpr std::uint64_t kHeadShuffle = 0x68656164ULL;
constexpr std::uint64_t kTuneShuffle = 0x74756e65ULL;
constexpr std::uint64_t kBaselineInit = 0x62617365ULL;

using Map = Eigen::Map<RowMajorMatrix<double>>;
using ConstMap = Eigen::Map<const RowMajorMatrix<double>>;

ConstMap mat(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
Map mat(Tensor& t, std::size_t rows, std::size_t cols) {
  return Map(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Tensor input_batch(const Drbn& net, const Tensor& inputs) {
  const Shape want = batched(inputs.rows(), net.input_shape());
  return inputs.shape() == want ? inputs : inputs.reshaped(want);
}

// Forward activations a_0 = x, a_{l+1} = p(x^(l+1) | a_l).
std::vector<Tensor> forward(const Drbn& net, const Tensor& inputs) {
  std::vector<Tensor> acts;
  acts.reserve(net.depth() + 1);
  acts.push_back(input_batch(net, inputs));
  const std::size_t n = inputs.rows();
  for (std::size_t l = 0; l < net.depth(); ++l) {
    Tensor p = layer_prob_hidden(net.layer(l), acts.back());
    p.reshape(batched(n, net.state_shape(l + 1)));
    acts.push_back(std::move(p));
  }
  return acts;
}

// (P - Y) / n for the mean cross-entropy, P = softmax(F W + b).
Tensor logit_grad(const SoftmaxHead& head, const Tensor& features, const std::vector<int>& labels) {
  Tensor g = head.probabilities(features);
  const std::size_t n = labels.size(), k = head.n_classes();
  for (std::size_t i = 0; i < n; ++i) g[i * k + static_cast<std::size_t>(labels[i])] -= 1.0;
  g *= 1.0 / static_cast<double>(n);
  return g;
}

SoftmaxHead head_grads(const SoftmaxHead& head, const Tensor& features, const Tensor& dlogits) {
  const std::size_t n = features.rows(), d = head.feature_dim(), k = head.n_classes();
  SoftmaxHead g = SoftmaxHead::zeros(d, k);
  mat(g.weights, d, k).noalias() = mat(features, n, d).transpose() * mat(dlogits, n, k);
  mat(g.bias, 1, k) = mat(dlogits, n, k).colwise().sum();
  return g;
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch, Rng rng) {
  const auto perm = random_permutation(n, rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                     perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<int> gather(const std::vector<int>& labels, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(labels[i]);
  return out;
}

}  // namespace

void LabeledSet::validate(std::size_t n_classes) const {
  if (labels.empty()) throw std::invalid_argument("labeled set is empty");
  if (inputs.rows() != labels.size()) throw ShapeError("labeled set: input/label count mismatch");
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= n_classes) {
      throw std::invalid_argument("label " + std::to_string(l) + " outside [0," +
                                  std::to_string(n_classes) + ")");
    }
  }
}

Tensor extract_features(const Drbn& net, const Tensor& inputs) {
  auto acts = forward(net, inputs);
  Tensor top = std::move(acts.back());
  const std::size_t n = inputs.rows();
  top.reshape({n, top.size() / std::max<std::size_t>(n, 1)});
  return top;
}

SoftmaxHead SoftmaxHead::zeros(std::size_t feature_dim, std::size_t n_classes) {
  return {Tensor({feature_dim, n_classes}), Tensor({n_classes})};
}

Tensor SoftmaxHead::probabilities(const Tensor& features) const {
  const std::size_t n = features.rows(), d = feature_dim(), k = n_classes();
  if (features.row_size() != d) {
    throw ShapeError("softmax head: feature size " + std::to_string(features.row_size()) +
                     " != " + std::to_string(d));
  }
  Tensor out({n, k});
  auto logits = mat(out, n, k);
  logits.noalias() = mat(features, n, d) * mat(weights, d, k);
  logits.rowwise() += bias.row_vector();
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - peak).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return out;
}

std::vector<int> SoftmaxHead::predict(const Tensor& features) const {
  const Tensor p = probabilities(features);
  const std::size_t n = p.rows(), k = n_classes();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (p[i * k + j] > p[i * k + best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

double error_rate(const SoftmaxHead& head, const Tensor& features, const std::vector<int>& labels) {
  if (labels.empty()) throw std::invalid_argument("error_rate: no labels");
  const auto pred = head.predict(features);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) wrong += pred[i] != labels[i];
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double cross_entropy(const SoftmaxHead& head, const Tensor& features, const std::vector<int>& labels) {
  const Tensor p = head.probabilities(features);
  const std::size_t k = head.n_classes();
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    acc -= std::log(std::max(p[i * k + static_cast<std::size_t>(labels[i])],
                             std::numeric_limits<double>::min()));
  }
  return acc / static_cast<double>(labels.size());
}

HeadResult train_head(const LabeledSet& train, const LabeledSet* validation,
                      const SupervisedConfig& config, std::optional<SoftmaxHead> init) {
  train.validate(config.n_classes);
  if (validation) validation->validate(config.n_classes);
  SoftmaxHead head = init.value_or(SoftmaxHead::zeros(train.inputs.row_size(), config.n_classes));
  if (head.feature_dim() != train.inputs.row_size()) {
    throw ShapeError("train_head: head feature size differs from features");
  }
  const Tensor features = train.inputs.reshaped({train.size(), train.inputs.row_size()});
  std::array<Tensor*, 2> params{&head.weights, &head.bias};
  AdamState adam = AdamState::for_parameters(std::array<const Tensor*, 2>{&head.weights, &head.bias},
                                             config.adam);

  HeadResult best{head, {}};
  double best_val = validation ? error_rate(head, validation->inputs, validation->labels)
                               : std::numeric_limits<double>::quiet_NaN();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (const auto& idx : minibatches(train.size(), config.batch_size,
                                       Rng(mix_seed(config.seed, kHeadShuffle, epoch)))) {
      const Tensor f = features.gather_rows(idx);
      const auto y = gather(train.labels, idx);
      const SoftmaxHead g = head_grads(head, f, logit_grad(head, f, y));
      adam_step(params, std::array<const Tensor*, 2>{&g.weights, &g.bias}, adam);
    }
    if (validation) {
      const double v = error_rate(head, validation->inputs, validation->labels);
      if (v < best_val) {
        best_val = v;
        best.head = head;
        best.metrics.best_epoch = epoch;
      }
    }
  }
  if (!validation) {
    best.head = head;
    best.metrics.best_epoch = config.epochs;
  }
  best.metrics.validation_error = best_val;
  best.metrics.train_error = error_rate(best.head, features, train.labels);
  return best;
}

double classifier_loss(const Drbn& net, const SoftmaxHead& head, const Tensor& inputs,
                       const std::vector<int>& labels) {
  return cross_entropy(head, extract_features(net, inputs), labels);
}

ClassifierGrads classifier_grads(const Drbn& net, const SoftmaxHead& head, const Tensor& inputs,
                                 const std::vector<int>& labels) {
  const std::size_t n = inputs.rows();
  if (labels.size() != n) throw ShapeError("classifier_grads: label count mismatch");
  const auto acts = forward(net, inputs);
  const Tensor features = acts.back().reshaped({n, acts.back().size() / n});
  const Tensor dlogits = logit_grad(head, features, labels);

  ClassifierGrads out;
  out.head = head_grads(head, features, dlogits);

  // dL/d(top activations)
  const std::size_t d = head.feature_dim(), k = head.n_classes();
  Tensor upstream(acts.back().shape());
  mat(upstream, n, d).noalias() = mat(dlogits, n, k) * mat(head.weights, d, k).transpose();

  out.layers.resize(net.depth());
  for (std::size_t l = net.depth(); l-- > 0;) {
    const Tensor& a_out = acts[l + 1];
    const Tensor& a_in = acts[l];
    Tensor dalpha = upstream;
    for (std::size_t i = 0; i < dalpha.size(); ++i) dalpha[i] *= a_out[i] * (1.0 - a_out[i]);

    ParamGrads& g = out.layers[l];
    if (const auto* dense = std::get_if<RbmParams>(&net.layer(l))) {
      const std::size_t D = dense->visible_size(), P = dense->hidden_size();
      g.weights = Tensor({D, P});
      mat(g.weights, D, P).noalias() = mat(a_in, n, D).transpose() * mat(dalpha, n, P);
      g.visible_bias = Tensor({D});
      g.hidden_bias = Tensor({P});
      mat(g.hidden_bias, 1, P) = mat(dalpha, n, P).colwise().sum();
      if (l > 0) {
        upstream = Tensor(a_in.shape());
        mat(upstream, n, D).noalias() = mat(dalpha, n, P) * mat(dense->weights, D, P).transpose();
      }
    } else {
      const auto& conv = std::get<ConvRbmParams>(net.layer(l));
      const std::size_t K = conv.geometry.filters;
      g.weights = conv_filter_correlation(a_in, dalpha, conv.geometry);
      g.visible_bias = Tensor({1});
      g.hidden_bias = Tensor({K});
      for (std::size_t i = 0; i < dalpha.size(); ++i) g.hidden_bias[i % K] += dalpha[i];
      if (l > 0) upstream = conv_transpose(dalpha, conv.filters, conv.geometry.stride);
    }
  }
  return out;
}

double network_error(const Drbn& net, const SoftmaxHead& head, const LabeledSet& data) {
  return error_rate(head, extract_features(net, data.inputs), data.labels);
}

FineTuneResult fine_tune(Drbn net, SoftmaxHead head, const LabeledSet& train,
                         const LabeledSet* validation, const SupervisedConfig& config) {
  train.validate(config.n_classes);
  if (validation) validation->validate(config.n_classes);
  if (head.feature_dim() != shape_size(net.state_shape(net.depth()))) {
    throw ShapeError("fine_tune: head does not match the network's top layer");
  }

  std::vector<AdamState> layer_opt;
  for (const auto& layer : net.layers()) {
    layer_opt.push_back(AdamState::for_parameters(layer_tensors(layer), config.adam));
  }
  AdamState head_opt = AdamState::for_parameters(
      std::array<const Tensor*, 2>{&head.weights, &head.bias}, config.adam);

  FineTuneResult best{net, head, {}};
  double best_val = validation ? network_error(net, head, *validation)
                               : std::numeric_limits<double>::quiet_NaN();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (const auto& idx : minibatches(train.size(), config.batch_size,
                                       Rng(mix_seed(config.seed, kTuneShuffle, epoch)))) {
      const Tensor x = train.inputs.gather_rows(idx);
      const auto y = gather(train.labels, idx);
      const ClassifierGrads g = classifier_grads(net, head, x, y);
      for (std::size_t l = 0; l < net.depth(); ++l) {
        adam_step(layer_tensors(net.layer(l)), g.layers[l].tensors(), layer_opt[l]);
      }
      adam_step(std::array<Tensor*, 2>{&head.weights, &head.bias},
                std::array<const Tensor*, 2>{&g.head.weights, &g.head.bias}, head_opt);
    }
    if (validation) {
      const double v = network_error(net, head, *validation);
      if (v < best_val) {
        best_val = v;
        best.net = net;
        best.head = head;
        best.metrics.best_epoch = epoch;
      }
    }
  }
  if (!validation) {
    best.net = std::move(net);
    best.head = std::move(head);
    best.metrics.best_epoch = config.epochs;
  }
  best.metrics.validation_error = best_val;
  best.metrics.train_error = network_error(best.net, best.head, train);
  return best;
}

BaselineResult plain_fc_baseline(const LabeledSet& train, const LabeledSet* validation,
                                 const Shape& input_shape, const std::vector<std::size_t>& hidden,
                                 const SupervisedConfig& config) {
  if (hidden.empty()) throw std::invalid_argument("plain_fc_baseline: no hidden layers");
  NetworkSpec spec = NetworkSpec::input(input_shape);
  for (auto h : hidden) spec.dense(h);
  Drbn net = Drbn::zeros(spec);
  Rng rng(mix_seed(config.seed, kBaselineInit));
  for (std::size_t l = 0; l < net.depth(); ++l) {
    auto& p = std::get<RbmParams>(net.layer(l));
    const double limit =
        std::sqrt(6.0 / static_cast<double>(p.visible_size() + p.hidden_size()));
    for (auto& w : p.weights.values()) w = limit * (2.0 * rng.uniform() - 1.0);
  }
  SoftmaxHead head = SoftmaxHead::zeros(hidden.back(), config.n_classes);
  auto tuned = fine_tune(std::move(net), std::move(head), train, validation, config);
  return {std::move(tuned.net), std::move(tuned.head), tuned.metrics};
}

std::string MetricRecord::to_line() const {
  std::ostringstream os;
  os << "labels_used=" << labels_used << " model=" << model << " phase=" << phase
     << " seed=" << seed << " test_error=" << std::setprecision(6) << test_error;
  return os.str();
}

}  // namespace drbn
