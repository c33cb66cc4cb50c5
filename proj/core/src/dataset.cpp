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

#include "drbn/dataset.hpp"

#include "drbn/image_io.hpp"
#include "drbn/math.hpp"

#include <algorithm>
#include <cctype>

namespace drbn {

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
  if (offset + 4 > bytes.size()) {
    throw DatasetError(std::string(what) + ": truncated header at offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string hex32(std::uint32_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xF];
  return s;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.images = images.gather_rows(indices);
  out.split = split;
  if (labels) {
    std::vector<int> l;
    l.reserve(indices.size());
    for (auto i : indices) l.push_back(labels->at(i));
    out.labels = std::move(l);
  }
  return out;
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return subset(idx);
}

Tensor Dataset::flat() const { return images.reshaped({size(), height() * width()}); }

void Dataset::validate() const {
  if (images.rank() != 3) throw DatasetError("dataset images must be n x H x W");
  for (double v : images.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw DatasetError("dataset pixel outside [0,1]");
  }
  if (labels && labels->size() != size()) {
    throw DatasetError("dataset has " + std::to_string(labels->size()) + " labels for " +
                       std::to_string(size()) + " images");
  }
}

Dataset parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::optional<std::span<const std::uint8_t>> label_bytes) {
  const auto magic = read_be32(image_bytes, 0, "IDX images");
  if (magic != kIdxImageMagic) {
    throw DatasetError("IDX images: bad magic " + hex32(magic) + " at offset 0 (expected " +
                       hex32(kIdxImageMagic) + ")");
  }
  const std::size_t n = read_be32(image_bytes, 4, "IDX images");
  const std::size_t rows = read_be32(image_bytes, 8, "IDX images");
  const std::size_t cols = read_be32(image_bytes, 12, "IDX images");
  if (rows == 0 || cols == 0) throw DatasetError("IDX images: zero image extent");
  const std::size_t expected = 16 + n * rows * cols;
  if (image_bytes.size() < expected) {
    throw DatasetError("IDX images: truncated, need " + std::to_string(expected) + " bytes, have " +
                       std::to_string(image_bytes.size()));
  }
  Dataset ds;
  ds.images = Tensor({n, rows, cols});
  for (std::size_t i = 0; i < n * rows * cols; ++i) ds.images[i] = image_bytes[16 + i] / 255.0;

  if (label_bytes) {
    const auto lm = read_be32(*label_bytes, 0, "IDX labels");
    if (lm != kIdxLabelMagic) {
      throw DatasetError("IDX labels: bad magic " + hex32(lm) + " at offset 0 (expected " +
                         hex32(kIdxLabelMagic) + ")");
    }
    const std::size_t ln = read_be32(*label_bytes, 4, "IDX labels");
    if (ln != n) {
      throw DatasetError("IDX labels: count " + std::to_string(ln) + " != image count " +
                         std::to_string(n));
    }
    if (label_bytes->size() < 8 + n) throw DatasetError("IDX labels: truncated");
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = (*label_bytes)[8 + i];
    ds.labels = std::move(labels);
  }
  return ds;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::optional<std::filesystem::path>& labels_path) {
  const auto images = read_file(images_path);
  try {
    if (labels_path) {
      const auto labels = read_file(*labels_path);
      return parse_idx(images, std::span<const std::uint8_t>(labels));
    }
    return parse_idx(images);
  } catch (const DatasetError& e) {
    throw DatasetError(images_path.string() + ": " + e.what());
  }
}

Dataset load_mnist_split(const std::filesystem::path& dir, const std::string& prefix) {
  const auto images = dir / (prefix + "-images-idx3-ubyte");
  const auto labels = dir / (prefix + "-labels-idx1-ubyte");
  if (!std::filesystem::exists(images)) throw DatasetError("missing " + images.string());
  Dataset ds = load_idx(images, std::filesystem::exists(labels)
                                    ? std::optional<std::filesystem::path>(labels)
                                    : std::nullopt);
  ds.split = prefix == "t10k" ? "test" : prefix;
  return ds;
}

Tensor binarize_threshold(const Tensor& images, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("binarize: threshold must lie in [0,1]");
  }
  Tensor out = images;
  for (auto& v : out.values()) v = v > threshold ? 1.0 : 0.0;
  return out;
}

Tensor binarize_bernoulli(const Tensor& images, std::uint64_t seed) {
  Rng rng(seed);
  return bernoulli_sample(images, rng);
}

Tensor binarize(const Tensor& images, const Binarization& how) {
  return how.mode == BinarizeMode::threshold ? binarize_threshold(images, how.threshold)
                                             : binarize_bernoulli(images, how.seed);
}

Tensor center_crop_resize(const Tensor& images, std::size_t out_size) {
  if (out_size == 0) throw std::invalid_argument("center_crop_resize: out_size must be >= 1");
  const bool single = images.rank() == 2;
  if (!single && images.rank() != 3) {
    throw ShapeError("center_crop_resize: expected H x W or n x H x W, got " +
                     to_string(images.shape()));
  }
  const std::size_t n = single ? 1 : images.dim(0);
  const std::size_t h = images.dim(single ? 0 : 1), w = images.dim(single ? 1 : 2);
  if (h == 0 || w == 0) throw ShapeError("center_crop_resize: zero-area image");
  const std::size_t side = std::min(h, w);
  const std::size_t top = (h - side) / 2, left = (w - side) / 2;

  Tensor out(single ? Shape{out_size, out_size} : Shape{n, out_size, out_size});
  std::vector<std::size_t> src(out_size);
  for (std::size_t i = 0; i < out_size; ++i) {
    // floor((i + 0.5) * side / out) in integer arithmetic
    src[i] = std::min(side - 1, ((2 * i + 1) * side) / (2 * out_size));
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t y = 0; y < out_size; ++y) {
      for (std::size_t x = 0; x < out_size; ++x) {
        out[(k * out_size + y) * out_size + x] =
            images[(k * h + top + src[y]) * w + left + src[x]];
      }
    }
  }
  return out;
}

Dataset load_image_directory(const std::filesystem::path& dir, std::size_t out_size) {
  if (!std::filesystem::is_directory(dir)) throw DatasetError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".pbm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DatasetError("no .pgm/.pbm images in " + dir.string());

  Dataset ds;
  ds.split = dir.filename().string();
  ds.images = Tensor({files.size(), out_size, out_size});
  for (std::size_t i = 0; i < files.size(); ++i) {
    const GrayImage img = read_pnm(files[i]);
    const Tensor t({img.height, img.width}, img.pixels);
    const Tensor r = binarize_threshold(center_crop_resize(t, out_size), 0.5);
    std::copy(r.values().begin(), r.values().end(),
              ds.images.values().begin() + static_cast<std::ptrdiff_t>(i * out_size * out_size));
  }
  return ds;
}

Dataset load_dataset_split(const std::filesystem::path& root, const std::string& split,
                           std::size_t image_size) {
  if (split != "train" && split != "test") {
    throw std::invalid_argument("dataset split must be train or test, got " + split);
  }
  const auto sub = root / split;
  if (std::filesystem::is_directory(sub)) {
    const auto images = sub / "images-idx3-ubyte";
    if (std::filesystem::exists(images)) {
      const auto labels = sub / "labels-idx1-ubyte";
      Dataset ds = load_idx(images, std::filesystem::exists(labels)
                                        ? std::optional<std::filesystem::path>(labels)
                                        : std::nullopt);
      ds.split = split;
      return ds;
    }
    Dataset ds = load_image_directory(sub, image_size);
    ds.split = split;
    return ds;
  }
  if (!std::filesystem::is_directory(root)) throw DatasetError("not a directory: " + root.string());
  return load_mnist_split(root, split == "test" ? "t10k" : "train");
}

}  // namespace drbn
