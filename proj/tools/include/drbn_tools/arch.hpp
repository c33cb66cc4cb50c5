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

#ifndef DRBN_TOOLS_ARCH_HPP
#define DRBN_TOOLS_ARCH_HPP

#include "drbn/network.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drbn::tools {

// Architecture strings, comma separated, left to right from the input:
//   dense:<hidden>
//   conv:<filters>x<kernel>[s<stride>]      stride defaults to 1
// e.g. "dense:500,dense:1000" or "conv:64x12s2,conv:128x5s2,dense:512".
class ArchParseError : public std::invalid_argument {
 public:
  ArchParseError(std::size_t position, const std::string& message, const std::string& text);
  /// 0-based character offset into the architecture string.
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Builds the NetworkSpec for height x width images. The input is {H, W, 1} when
/// the first layer is convolutional and {H, W} otherwise.
NetworkSpec parse_architecture(const std::string& text, std::size_t height, std::size_t width);

/// Inverse of parse_architecture for the layer list of a spec.
std::string format_architecture(const NetworkSpec& spec);

}  // namespace drbn::tools

#endif  // DRBN_TOOLS_ARCH_HPP
