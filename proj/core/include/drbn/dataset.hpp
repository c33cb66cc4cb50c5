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

#ifndef DRBN_DATASET_HPP
#define DRBN_DATASET_HPP

#include "drbn/rng.hpp"
#include "drbn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drbn {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n x H x W images with values in [0, 1] and optional class labels.
struct Dataset {
  Tensor images;
  std::optional<std::vector<int>> labels;
  std::string split;

  std::size_t size() const { return images.rank() == 0 ? 0 : images.dim(0); }
  std::size_t height() const { return images.dim(1); }
  std::size_t width() const { return images.dim(2); }

  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset head(std::size_t n) const;
  /// Images as {n, H*W} rows, the input layout of a dense network.
  Tensor flat() const;

  void validate() const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;  // 2051
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;  // 2049

/// Big-endian IDX images (u8, n x rows x cols, scaled by 1/255) and labels.
Dataset parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::optional<std::span<const std::uint8_t>> label_bytes = std::nullopt);
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::optional<std::filesystem::path>& labels_path = std::nullopt);

/// Loads `<dir>/<prefix>-images-idx3-ubyte` plus the matching labels file
/// when present; prefix is "train" or "t10k".
Dataset load_mnist_split(const std::filesystem::path& dir, const std::string& prefix);

/// 1 iff pixel > threshold; threshold must lie in [0, 1].
Tensor binarize_threshold(const Tensor& images, double threshold = 0.5);
/// Pixel-wise Bernoulli sampling with a seeded stream.
Tensor binarize_bernoulli(const Tensor& images, std::uint64_t seed);

enum class BinarizeMode { threshold, bernoulli };

struct Binarization {
  BinarizeMode mode = BinarizeMode::threshold;
  double threshold = 0.5;
  std::uint64_t seed = 0;
};

Tensor binarize(const Tensor& images, const Binarization& how = {});

/// Crops the largest centered square (odd excess drops the extra row/column
/// at the bottom/right) and nearest-neighbour resizes it to out x out:
/// output (y, x) samples the crop at floor((y + 0.5) * side / out). Accepts
/// n x H x W or a single H x W image.
Tensor center_crop_resize(const Tensor& images, std::size_t out_size);

/// Every .pgm/.pbm file directly in `dir`, sorted by filename, cropped and
/// resized to out x out, then thresholded at 0.5.
Dataset load_image_directory(const std::filesystem::path& dir, std::size_t out_size);

/// One split ("train" or "test") of a data root. Resolution order:
///   <root>/<split>/images-idx3-ubyte (+ labels-idx1-ubyte)   IDX pair
///   <root>/<split>/*.pgm|*.pbm                               image directory
///   <root>/<train|t10k>-images-idx3-ubyte (+ labels)          MNIST names
/// Image directories are cropped and resized to image_size.
Dataset load_dataset_split(const std::filesystem::path& root, const std::string& split,
                           std::size_t image_size = 28);

}  // namespace drbn

#endif  // DRBN_DATASET_HPP
