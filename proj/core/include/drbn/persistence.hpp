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

#ifndef DRBN_PERSISTENCE_HPP
#define DRBN_PERSISTENCE_HPP

#include "drbn/network.hpp"
#include "drbn/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drbn {

// Model file, all integers little-endian:
//
//   "DRBN"                       4 bytes
//   version                      u32 (kModelFormatVersion)
//   layer count L                u32
//   input rank R, dims[R]        u32, u32 x R
//   L times:
//     kind                       u32 (0 dense, 1 conv)
//     dense header               u32 D, u32 P
//     conv header                u32 H, W, C, K, Nw, stride
//     W, b, c                    each: u64 element count, then f64 values
//   crc32                        u32, zlib CRC-32 of every preceding byte
//
// Dense W is D x P row-major, b has D entries and c has P. Conv W is
// K x Nw x Nw x C row-major, b is the single shared visible bias and c has
// K entries.
inline constexpr std::uint32_t kModelFormatVersion = 1;

// Checkpoint file: "DRCK", u32 version, u32 section count, then tagged
// sections (4-byte tag, u64 payload length, payload) and a trailing crc32.
// Sections: MODL (a full model file), PCD_ (particles, chain states,
// update count), ADAM (per-layer optimizer state), TRNR (seed, step).
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

enum class PersistenceErrorKind {
  io,
  bad_magic,
  unsupported_version,
  checksum_mismatch,
  shape_inconsistency,
  truncated,
  missing_section,
  empty_model,
};

std::string to_string(PersistenceErrorKind kind);

class PersistenceError : public std::runtime_error {
 public:
  PersistenceError(PersistenceErrorKind kind, const std::string& message);
  PersistenceErrorKind kind() const noexcept { return kind_; }

 private:
  PersistenceErrorKind kind_;
};

std::vector<std::uint8_t> serialize_model(const Drbn& net);
Drbn deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const Drbn& net, const std::filesystem::path& path);
Drbn load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_checkpoint(const TrainingState& state);
TrainingState deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const TrainingState& state, const std::filesystem::path& path);
TrainingState load_checkpoint(const std::filesystem::path& path);

}  // namespace drbn

#endif  // DRBN_PERSISTENCE_HPP
