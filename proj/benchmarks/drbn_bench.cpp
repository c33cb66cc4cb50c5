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

#include "drbn/math.hpp"
#include "drbn/network.hpp"
#include "drbn/trainer.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace drbn;

Tensor noise(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(shape);
  for (double& x : t.values()) x = rng.uniform() < 0.5 ? 0.0 : 1.0;
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = noise({100, 784}, 1), b = noise({784, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * 100 * 784 * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Matmul)->Arg(500)->Arg(1000);

void BM_ConvValid(benchmark::State& state) {
  const Tensor input = noise({100, 28, 28, 1}, 3);
  Rng rng(4);
  Tensor filters({64, 12, 12, 1});
  for (double& x : filters.values()) x = 0.01 * rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(conv_valid(input, filters, 2));
}
BENCHMARK(BM_ConvValid);

void BM_ConvTranspose(benchmark::State& state) {
  const Tensor hidden = noise({100, 9, 9, 64}, 5);
  Rng rng(6);
  Tensor filters({64, 12, 12, 1});
  for (double& x : filters.values()) x = 0.01 * rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(conv_transpose(hidden, filters, 2));
}
BENCHMARK(BM_ConvTranspose);

void BM_GibbsIteration(benchmark::State& state) {
  Rng rng(7);
  const Drbn net = Drbn::initialize(NetworkSpec::input({784}).dense(500).dense(1000), rng);
  const Tensor v = noise({100, 784}, 8);
  std::vector<Rng> chains{Rng(9)};
  for (auto _ : state) benchmark::DoNotOptimize(gibbs_iteration(net, v, chains));
}
BENCHMARK(BM_GibbsIteration)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  Rng rng(10);
  const Drbn net = Drbn::initialize(NetworkSpec::input({784}).dense(500).dense(1000), rng);
  TrainConfig config;
  TrainingState s = TrainingState::start(net, config);
  const Tensor batch = noise({100, 784}, 11);
  for (auto _ : state) benchmark::DoNotOptimize(train_step(batch, s, config));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
