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

#ifndef DRBN_TRAINER_HPP
#define DRBN_TRAINER_HPP

#include "drbn/adam.hpp"
#include "drbn/network.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace drbn {

struct TrainConfig {
  std::size_t gibbs_steps = 5;     // k
  std::size_t n_particles = 100;   // N
  std::size_t batch_size = 100;    // M
  std::size_t epochs = 1;
  /// Stop after this many updates in total (0 = run all epochs).
  std::size_t max_steps = 0;
  AdamConfig adam;
  std::uint64_t seed = 0;
  /// Emit a log record every this many updates (0 = only at epoch ends).
  std::size_t log_every = 0;

  void validate() const;
};

/// Persistent fantasy particles at the visible layer; chain j owns chains[j].
struct PcdState {
  Tensor particles;  // {N, input_shape...}, binary
  std::vector<Rng> chains;
  std::uint64_t updates = 0;

  /// Bernoulli(0.5) noise; chain j is Rng::stream(seed, j) for a stream
  /// family reserved for particles.
  static PcdState initialize(const Drbn& net, std::size_t n_particles, std::uint64_t seed);

  friend bool operator==(const PcdState&, const PcdState&) = default;
};

/// Everything a run mutates: model, particles, optimizer moments, progress.
/// Minibatch order and data-term sampling are derived from (seed, step), so
/// this struct is a complete resume point.
struct TrainingState {
  Drbn net;
  PcdState pcd;
  std::vector<AdamState> optimizers;  // one per layer
  std::uint64_t step = 0;
  std::uint64_t seed = 0;

  static TrainingState start(Drbn net, const TrainConfig& config);

  friend bool operator==(const TrainingState&, const TrainingState&) = default;
};

/// Visible-side inputs x^(l), l = 0..L-1, of every layer's data term: the
/// minibatch itself and the sampled states of a single upward pass.
std::vector<Tensor> collect_data_terms(const Drbn& net, const Tensor& batch, std::span<Rng> chains);

/// k Gibbs iterations on every particle. The new visible states replace the
/// particles; returns the visible-side states x_pcd^(l), l = 0..L-1, of the
/// last downward pass.
std::vector<Tensor> advance_particles(PcdState& pcd, const Drbn& net, std::size_t k);

/// mean F(data) - mean F(particles) on one layer.
double layer_loss(const LayerParams& layer, const Tensor& data_states, const Tensor& particle_states);

/// Gradient of layer_loss: mean dF(data) - mean dF(particles).
ParamGrads layer_loss_grad(const LayerParams& layer, const Tensor& data_states,
                           const Tensor& particle_states);

/// Per-layer gradients, every one computed from the same (unmodified) net.
std::vector<ParamGrads> layer_gradients(const Drbn& net, const std::vector<Tensor>& data_terms,
                                        const std::vector<Tensor>& model_terms);

struct StepResult {
  std::vector<double> layer_losses;
};

/// One joint PCD update of all layers. Data terms and particle terms are
/// gathered with the pre-step parameters, then every layer takes its Adam
/// step.
StepResult train_step(const Tensor& batch, TrainingState& state, const TrainConfig& config);

/// One line of the training log.
///
/// Text form (space separated key=value, one record per line):
///   step=<u> epoch=<u> loss=<l0>,<l1>,... fe_gap=<g|nan> elapsed_s=<t>
/// fe_gap is mean F0(particles) - mean F0(held-out) at the bottom layer, or
/// nan when no held-out set was supplied.
struct TrainRecord {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::vector<double> layer_losses;
  double free_energy_gap = 0.0;
  double elapsed_seconds = 0.0;

  std::string to_line() const;
};

struct FitOptions {
  const Tensor* heldout = nullptr;
  std::vector<std::function<void(const TrainRecord&, const Drbn&)>> callbacks;
  std::ostream* log = nullptr;
  /// Called after each completed epoch with its index.
  std::function<void(std::uint64_t, const TrainingState&)> on_epoch_end;
};

struct TrainLog {
  std::vector<TrainRecord> records;
};

/// Runs epochs of seeded-shuffle minibatches from state.step onward. Each
/// epoch is floor(n / M) updates (the ragged tail is skipped); the
/// permutation of epoch e depends only on (seed, e), so a resumed state
/// continues on exactly the same minibatch sequence.
TrainLog fit(const Tensor& data, TrainingState& state, const TrainConfig& config,
             const FitOptions& options = {});

/// Epoch permutation used by fit.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

/// Per-row streams used for the data-term upward pass of a given update.
std::vector<Rng> data_chains(std::uint64_t seed, std::uint64_t step, std::size_t rows);

}  // namespace drbn

#endif  // DRBN_TRAINER_HPP
