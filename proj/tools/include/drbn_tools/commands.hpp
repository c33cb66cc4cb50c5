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

#ifndef DRBN_TOOLS_COMMANDS_HPP
#define DRBN_TOOLS_COMMANDS_HPP

#include "drbn/network.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace drbn::tools {

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Network `train` starts from: Gaussian weights drawn from a stream derived
/// from the run seed.
Drbn initial_network(const NetworkSpec& spec, std::uint64_t seed, double init_std = 0.01);

/// Runs the drbn command line. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace drbn::tools

#endif  // DRBN_TOOLS_COMMANDS_HPP
