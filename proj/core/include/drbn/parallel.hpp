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

#ifndef DRBN_PARALLEL_HPP
#define DRBN_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace drbn {

/// Worker budget: DRBN_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_budget();

/// Applies the budget to Eigen's internal GEMM parallelism (when built with
/// OpenMP). Called once by the CLI; the library never changes it implicitly.
void configure_threads();

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunks cover
/// disjoint index ranges, so bodies that write only their own rows stay
/// deterministic regardless of the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1);

}  // namespace drbn

#endif  // DRBN_PARALLEL_HPP
