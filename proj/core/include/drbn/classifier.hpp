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

#ifndef DRBN_CLASSIFIER_HPP
#define DRBN_CLASSIFIER_HPP

#include "drbn/adam.hpp"
#include "drbn/network.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drbn {

/// Inputs with one class label per row.
struct LabeledSet {
  Tensor inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  void validate(std::size_t n_classes) const;
};

/// Deterministic upward pass through probabilities (no sampling); returns
/// the top-layer activations as {n, top_size}.
Tensor extract_features(const Drbn& net, const Tensor& inputs);

/// Linear softmax layer on top of the network features.
struct SoftmaxHead {
  Tensor weights;  // feature_dim x n_classes
  Tensor bias;     // n_classes

  static SoftmaxHead zeros(std::size_t feature_dim, std::size_t n_classes);
  std::size_t feature_dim() const { return weights.dim(0); }
  std::size_t n_classes() const { return bias.size(); }

  /// Row-wise softmax of features * W + b.
  Tensor probabilities(const Tensor& features) const;
  std::vector<int> predict(const Tensor& features) const;

  friend bool operator==(const SoftmaxHead&, const SoftmaxHead&) = default;
};

/// Fraction of rows whose argmax prediction differs from the label.
double error_rate(const SoftmaxHead& head, const Tensor& features, const std::vector<int>& labels);

/// Mean cross-entropy of labels under the head.
double cross_entropy(const SoftmaxHead& head, const Tensor& features, const std::vector<int>& labels);

struct SupervisedConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 100;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::size_t n_classes = 10;
};

struct SupervisedMetrics {
  double train_error = 0.0;
  double validation_error = 0.0;  // nan without a validation set
  std::size_t best_epoch = 0;     // 0 = the initial parameters were kept
};

struct HeadResult {
  SoftmaxHead head;
  SupervisedMetrics metrics;
};

/// Cross-entropy minimization of the head alone with Adam over seeded
/// minibatches, for a fixed epoch budget. With a validation set the
/// parameters with the lowest validation error (ties keep the earlier epoch,
/// epoch 0 being the starting point) are returned.
HeadResult train_head(const LabeledSet& train, const LabeledSet* validation,
                      const SupervisedConfig& config,
                      std::optional<SoftmaxHead> init = std::nullopt);

/// Gradients of the mean cross-entropy of a network + head treated as a
/// deterministic sigmoid network. Only W and the hidden biases c of each
/// layer enter the upward computation; visible-bias gradients are zero.
struct ClassifierGrads {
  std::vector<ParamGrads> layers;
  SoftmaxHead head;  // gradient tensors in head layout
};

double classifier_loss(const Drbn& net, const SoftmaxHead& head, const Tensor& inputs,
                       const std::vector<int>& labels);
ClassifierGrads classifier_grads(const Drbn& net, const SoftmaxHead& head, const Tensor& inputs,
                                 const std::vector<int>& labels);

struct FineTuneResult {
  Drbn net;
  SoftmaxHead head;
  SupervisedMetrics metrics;
};

/// Joint backpropagation through every layer and the head (Adam; the
/// fine-tune phase uses a smaller learning rate). Best-on-validation
/// selection as in train_head, with epoch 0 = the given net and head.
FineTuneResult fine_tune(Drbn net, SoftmaxHead head, const LabeledSet& train,
                         const LabeledSet* validation, const SupervisedConfig& config);

/// Dense sigmoid stack of the given hidden sizes with a softmax output,
/// Xavier-uniform weights, zero biases, trained from scratch on labels only.
struct BaselineResult {
  Drbn net;
  SoftmaxHead head;
  SupervisedMetrics metrics;
};
BaselineResult plain_fc_baseline(const LabeledSet& train, const LabeledSet* validation,
                                 const Shape& input_shape, const std::vector<std::size_t>& hidden,
                                 const SupervisedConfig& config);

/// Error of net + head on a labeled set, through extract_features.
double network_error(const Drbn& net, const SoftmaxHead& head, const LabeledSet& data);

/// One line of the semi-supervised metrics stream:
///   labels_used=<n> model=<name> phase=<frozen|finetune|scratch> seed=<s> test_error=<e>
struct MetricRecord {
  std::size_t labels_used = 0;
  std::string model;
  std::string phase;
  std::uint64_t seed = 0;
  double test_error = 0.0;

  std::string to_line() const;
};

}  // namespace drbn

#endif  // DRBN_CLASSIFIER_HPP
