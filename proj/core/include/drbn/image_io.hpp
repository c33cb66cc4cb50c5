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

#ifndef DRBN_IMAGE_IO_HPP
#define DRBN_IMAGE_IO_HPP

#include "drbn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drbn {

class ImageFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-channel image with values in [0, 1], stored H x W.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;
};

/// Parses PGM (P2/P5) and PBM (P1/P4). PGM values are scaled by maxval;
/// PBM bits map 1 -> 1.0 (foreground) and 0 -> 0.0. 16-bit P5 is big-endian.
GrayImage decode_pnm(std::span<const std::uint8_t> bytes);
GrayImage read_pnm(const std::filesystem::path& path);

/// 8-bit binary PGM (P5, maxval 255), value v -> round(255 * clamp(v, 0, 1)).
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);

/// Tiles n images (n x H x W, values in [0, 1]) row-major into a grid with
/// `cols` columns and 1-pixel separators of value 128 between tiles. The
/// canvas is (rows*H + rows-1) x (cols*W + cols-1); unused tiles stay 0.
GrayImage tile_grid(const Tensor& images, std::size_t cols);

/// tile_grid + encode_pgm, written atomically.
void export_grid(const Tensor& images, std::size_t cols, const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a partial file at `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace drbn

#endif  // DRBN_IMAGE_IO_HPP
