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

#include "drbn/trainer.hpp"

#include "drbn/math.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace drbn {

namespace {

// Stream families; every random decision in a run is a pure function of
// (seed, family, index).
constexpr std::uint64_t kParticleStreams = 0x7061727469636c65ULL;
constexpr std::uint64_t kDataStreams = 0x6461746174657273ULL;
constexpr std::uint64_t kShuffleStreams = 0x73687566666c6521ULL;

double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

Tensor as_input_batch(const Tensor& batch, const Drbn& net) {
  const Shape want = batched(batch.rows(), net.input_shape());
  if (batch.shape() == want) return batch;
  return batch.reshaped(want);
}

}  // namespace

void TrainConfig::validate() const {
  if (gibbs_steps == 0) throw std::invalid_argument("TrainConfig: k must be >= 1");
  if (n_particles == 0) throw std::invalid_argument("TrainConfig: N must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: minibatch size must be >= 1");
}

PcdState PcdState::initialize(const Drbn& net, std::size_t n_particles, std::uint64_t seed) {
  PcdState pcd;
  pcd.chains = Rng::streams(mix_seed(seed, kParticleStreams), n_particles);
  pcd.particles =
      bernoulli_sample(Tensor(batched(n_particles, net.input_shape()), 0.5), pcd.chains);
  return pcd;
}

TrainingState TrainingState::start(Drbn net, const TrainConfig& config) {
  config.validate();
  net.validate();
  TrainingState state;
  state.seed = config.seed;
  state.pcd = PcdState::initialize(net, config.n_particles, config.seed);
  for (const auto& layer : net.layers()) {
    const auto t = layer_tensors(layer);
    state.optimizers.push_back(AdamState::for_parameters(t, config.adam));
  }
  state.net = std::move(net);
  return state;
}

std::vector<Tensor> collect_data_terms(const Drbn& net, const Tensor& batch, std::span<Rng> chains) {
  if (batch.rows() == 0) throw std::invalid_argument("collect_data_terms: empty minibatch");
  auto rec = upward_pass(net, as_input_batch(batch, net), chains);
  rec.states.pop_back();
  return std::move(rec.states);
}

std::vector<Tensor> advance_particles(PcdState& pcd, const Drbn& net, std::size_t k) {
  if (k == 0) throw std::invalid_argument("advance_particles: k must be >= 1");
  GibbsIteration it;
  for (std::size_t i = 0; i < k; ++i) {
    it = gibbs_iteration(net, pcd.particles, pcd.chains);
    pcd.particles = it.down.states.front();
  }
  ++pcd.updates;
  auto states = std::move(it.down.states);
  states.pop_back();
  return states;
}

double layer_loss(const LayerParams& layer, const Tensor& data_states, const Tensor& particle_states) {
  if (data_states.rows() == 0 || particle_states.rows() == 0) {
    throw std::invalid_argument("layer_loss: empty batch");
  }
  return mean(layer_free_energy(layer, data_states)) - mean(layer_free_energy(layer, particle_states));
}

ParamGrads layer_loss_grad(const LayerParams& layer, const Tensor& data_states,
                           const Tensor& particle_states) {
  ParamGrads g = layer_free_energy_grad(layer, data_states);
  g -= layer_free_energy_grad(layer, particle_states);
  return g;
}

std::vector<ParamGrads> layer_gradients(const Drbn& net, const std::vector<Tensor>& data_terms,
                                        const std::vector<Tensor>& model_terms) {
  if (data_terms.size() != net.depth() || model_terms.size() != net.depth()) {
    throw ShapeError("layer_gradients: need one data and one model term per layer");
  }
  std::vector<ParamGrads> grads;
  grads.reserve(net.depth());
  for (std::size_t l = 0; l < net.depth(); ++l) {
    grads.push_back(layer_loss_grad(net.layer(l), data_terms[l], model_terms[l]));
  }
  return grads;
}

StepResult train_step(const Tensor& batch, TrainingState& state, const TrainConfig& config) {
  auto chains = data_chains(state.seed, state.step, batch.rows());
  const auto data_terms = collect_data_terms(state.net, batch, chains);
  const auto model_terms = advance_particles(state.pcd, state.net, config.gibbs_steps);
  auto grads = layer_gradients(state.net, data_terms, model_terms);

  StepResult result;
  for (std::size_t l = 0; l < state.net.depth(); ++l) {
    result.layer_losses.push_back(layer_loss(state.net.layer(l), data_terms[l], model_terms[l]));
  }
  // Every gradient above was taken at the pre-step parameters.
  for (std::size_t l = 0; l < state.net.depth(); ++l) {
    const auto params = layer_tensors(state.net.layer(l));
    const auto g = std::as_const(grads[l]).tensors();
    adam_step(params, g, state.optimizers[l]);
  }
  ++state.step;
  return result;
}

std::string TrainRecord::to_line() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "step=" << step << " epoch=" << epoch << " loss=";
  for (std::size_t i = 0; i < layer_losses.size(); ++i) os << (i ? "," : "") << layer_losses[i];
  os << " fe_gap=";
  if (std::isnan(free_energy_gap)) {
    os << "nan";
  } else {
    os << free_energy_gap;
  }
  os << " elapsed_s=" << std::setprecision(6) << elapsed_seconds;
  return os.str();
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  Rng rng(mix_seed(seed, kShuffleStreams, epoch));
  return random_permutation(n, rng);
}

std::vector<Rng> data_chains(std::uint64_t seed, std::uint64_t step, std::size_t rows) {
  return Rng::streams(mix_seed(seed, kDataStreams, step), rows);
}

TrainLog fit(const Tensor& data, TrainingState& state, const TrainConfig& config,
             const FitOptions& options) {
  config.validate();
  if (data.rank() < 2 || data.rows() == 0) throw std::invalid_argument("fit: empty dataset");
  if (data.row_size() != shape_size(state.net.input_shape())) {
    throw ShapeError("fit: sample size " + std::to_string(data.row_size()) +
                     " does not match network input " + to_string(state.net.input_shape()));
  }
  const std::size_t M = config.batch_size;
  const std::size_t steps_per_epoch = data.rows() / M;
  if (steps_per_epoch == 0) {
    throw std::invalid_argument("fit: dataset smaller than one minibatch");
  }
  std::uint64_t total = config.epochs * steps_per_epoch;
  if (config.max_steps > 0) total = std::min<std::uint64_t>(total, config.max_steps);

  std::optional<Tensor> heldout;
  if (options.heldout) heldout = as_input_batch(*options.heldout, state.net);

  const auto t0 = std::chrono::steady_clock::now();
  TrainLog log;
  std::vector<std::size_t> order;
  std::uint64_t order_epoch = std::numeric_limits<std::uint64_t>::max();

  while (state.step < total) {
    const std::uint64_t epoch = state.step / steps_per_epoch;
    const std::size_t pos = state.step % steps_per_epoch;
    if (epoch != order_epoch) {
      order = epoch_order(data.rows(), state.seed, epoch);
      order_epoch = epoch;
    }
    const Tensor batch = data.gather_rows(std::span(order).subspan(pos * M, M));
    const StepResult result = train_step(batch, state, config);

    const bool epoch_end = state.step % steps_per_epoch == 0;
    const bool log_now = epoch_end || (config.log_every > 0 && state.step % config.log_every == 0);
    if (log_now) {
      TrainRecord rec;
      rec.step = state.step;
      rec.epoch = epoch;
      rec.layer_losses = result.layer_losses;
      rec.free_energy_gap = std::numeric_limits<double>::quiet_NaN();
      if (heldout) {
        rec.free_energy_gap = mean(layer_free_energy(state.net.layer(0), state.pcd.particles)) -
                              mean(layer_free_energy(state.net.layer(0), *heldout));
      }
      rec.elapsed_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (options.log) *options.log << rec.to_line() << '\n' << std::flush;
      for (const auto& cb : options.callbacks) cb(rec, state.net);
      log.records.push_back(std::move(rec));
    }
    if (epoch_end && options.on_epoch_end) options.on_epoch_end(epoch, state);
  }
  return log;
}

}  // namespace drbn
