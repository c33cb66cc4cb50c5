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

#include "drbn/persistence.hpp"

#include "drbn/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <limits>
#include <map>
#include <system_error>

namespace drbn {

namespace {

using Kind = PersistenceErrorKind;

constexpr std::array<char, 4> kModelMagic{'D', 'R', 'B', 'N'};
constexpr std::array<char, 4> kCheckpointMagic{'D', 'R', 'C', 'K'};
constexpr std::array<char, 4> kTagModel{'M', 'O', 'D', 'L'};
constexpr std::array<char, 4> kTagPcd{'P', 'C', 'D', '_'};
constexpr std::array<char, 4> kTagAdam{'A', 'D', 'A', 'M'};
constexpr std::array<char, 4> kTagTrainer{'T', 'R', 'N', 'R'};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  constexpr std::size_t kChunk = 1U << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const auto len = static_cast<uInt>(std::min(kChunk, bytes.size() - off));
    crc = crc32(crc, bytes.data() + off, len);
  }
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void magic(const std::array<char, 4>& m) {
    for (char c : m) out_.push_back(static_cast<std::uint8_t>(c));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void dim(std::size_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
      throw PersistenceError(Kind::shape_inconsistency, "dimension does not fit in u32");
    }
    u32(static_cast<std::uint32_t>(v));
  }
  void array(std::span<const double> values) {
    u64(values.size());
    for (double v : values) f64(v);
  }
  void shaped(const Tensor& t) {
    dim(t.rank());
    for (auto d : t.shape()) u64(d);
    for (double v : t.values()) f64(v);
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void crc() { u32(crc32_of(out_)); }

  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

  bool magic(const std::array<char, 4>& m) {
    need(4);
    const bool ok = std::equal(m.begin(), m.end(), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                               [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; });
    pos_ += 4;
    return ok;
  }
  std::array<char, 4> tag() {
    need(4);
    std::array<char, 4> t{};
    for (auto& c : t) c = static_cast<char>(bytes_[pos_++]);
    return t;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

  // Reads a length-prefixed array into t, whose shape fixes the length.
  void array_into(Tensor& t, const char* name) {
    const std::uint64_t n = u64();
    if (n != t.size()) {
      throw PersistenceError(Kind::shape_inconsistency,
                             std::string(what_) + ": array " + name + " holds " + std::to_string(n) +
                                 " values, header implies " + std::to_string(t.size()));
    }
    need_elements(n);
    for (auto& v : t.values()) v = f64();
  }
  Tensor shaped() {
    const std::uint32_t rank = u32();
    Shape shape(rank);
    std::uint64_t total = 1;
    for (auto& d : shape) {
      d = u64();
      if (d != 0 && total > std::numeric_limits<std::uint64_t>::max() / d) {
        throw PersistenceError(Kind::shape_inconsistency, std::string(what_) + ": shape overflow");
      }
      total *= d;
    }
    need_elements(total);
    Tensor t(shape);
    for (auto& v : t.values()) v = f64();
    return t;
  }
  std::span<const std::uint8_t> take(std::uint64_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > remaining()) {
      throw PersistenceError(Kind::truncated, std::string(what_) + ": truncated at offset " +
                                                  std::to_string(pos_) + " (need " + std::to_string(n) +
                                                  " more bytes, have " + std::to_string(remaining()) + ")");
    }
  }
  void need_elements(std::uint64_t n) const {
    if (n > remaining() / 8) need(std::numeric_limits<std::uint64_t>::max());
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  const char* what_;
};

// Checks magic and version, then the checksum. When the checksum fails the
// payload is parsed anyway: running out of bytes is reported as truncation,
// anything else as a checksum mismatch.
template <class Parse>
auto read_checked(std::span<const std::uint8_t> bytes, const std::array<char, 4>& magic,
                  std::uint32_t version, const char* what, Parse parse) {
  Reader r(bytes, what);
  if (bytes.size() < 4) {
    throw PersistenceError(Kind::truncated, std::string(what) + ": file shorter than its magic");
  }
  if (!r.magic(magic)) {
    throw PersistenceError(Kind::bad_magic, std::string(what) + ": bad magic at offset 0 (expected \"" +
                                                std::string(magic.begin(), magic.end()) + "\")");
  }
  const std::uint32_t v = r.u32();
  if (v != version) {
    throw PersistenceError(Kind::unsupported_version, std::string(what) + ": format version " +
                                                          std::to_string(v) + " is not supported (expected " +
                                                          std::to_string(version) + ")");
  }
  bool intact = bytes.size() >= 12;
  if (intact) {
    const auto body = bytes.first(bytes.size() - 4);
    Reader tail(bytes.last(4), what);
    intact = crc32_of(body) == tail.u32();
  }
  if (!intact) {
    try {
      Reader probe(bytes.first(std::max<std::size_t>(bytes.size(), 4) - 4), what);
      probe.take(8);
      parse(probe);
    } catch (const PersistenceError& e) {
      if (e.kind() == Kind::truncated) throw;
    } catch (const std::exception&) {
    }
    throw PersistenceError(Kind::checksum_mismatch, std::string(what) + ": checksum mismatch");
  }
  Reader body(bytes.first(bytes.size() - 4), what);
  body.take(8);
  auto result = parse(body);
  if (body.remaining() != 0) {
    throw PersistenceError(Kind::shape_inconsistency,
                           std::string(what) + ": " + std::to_string(body.remaining()) +
                               " unexpected bytes before the checksum");
  }
  return result;
}

void write_model_body(Writer& w, const Drbn& net) {
  w.dim(net.depth());
  w.dim(net.input_shape().size());
  for (auto d : net.input_shape()) w.dim(d);
  for (const auto& layer : net.layers()) {
    if (const auto* dense = std::get_if<RbmParams>(&layer)) {
      w.u32(static_cast<std::uint32_t>(LayerKind::dense));
      w.dim(dense->visible_size());
      w.dim(dense->hidden_size());
    } else {
      const auto& g = std::get<ConvRbmParams>(layer).geometry;
      w.u32(static_cast<std::uint32_t>(LayerKind::conv));
      for (auto v : {g.height, g.width, g.channels, g.filters, g.kernel, g.stride}) w.dim(v);
    }
    for (const Tensor* t : layer_tensors(layer)) w.array(t->values());
  }
}

Drbn parse_model_body(Reader& r) {
  const std::uint32_t depth = r.u32();
  const std::uint32_t rank = r.u32();
  Shape input(rank);
  for (auto& d : input) d = r.u32();
  std::vector<LayerParams> layers;
  for (std::uint32_t l = 0; l < depth; ++l) {
    const std::uint32_t kind = r.u32();
    LayerParams params;
    try {
      if (kind == static_cast<std::uint32_t>(LayerKind::dense)) {
        const std::size_t D = r.u32(), P = r.u32();
        if (std::uint64_t{D} * P > r.remaining() / 8) r.take(r.remaining() + 1);
        params = RbmParams::zeros(D, P);
      } else if (kind == static_cast<std::uint32_t>(LayerKind::conv)) {
        ConvGeometry g;
        g.height = r.u32();
        g.width = r.u32();
        g.channels = r.u32();
        g.filters = r.u32();
        g.kernel = r.u32();
        g.stride = r.u32();
        g.validate();
        if (std::uint64_t{g.filters} * g.patch_size() > r.remaining() / 8) r.take(r.remaining() + 1);
        params = ConvRbmParams::zeros(g);
      } else {
        throw PersistenceError(Kind::shape_inconsistency,
                               "model file: layer " + std::to_string(l) + " has unknown kind " +
                                   std::to_string(kind));
      }
    } catch (const ShapeError& e) {
      throw PersistenceError(Kind::shape_inconsistency,
                             "model file: layer " + std::to_string(l) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw PersistenceError(Kind::shape_inconsistency,
                             "model file: layer " + std::to_string(l) + ": " + e.what());
    }
    const char* names[] = {"W", "b", "c"};
    std::size_t i = 0;
    for (Tensor* t : layer_tensors(params)) r.array_into(*t, names[i++]);
    layers.push_back(std::move(params));
  }
  if (layers.empty()) throw PersistenceError(Kind::empty_model, "model file: no layers");
  try {
    return Drbn(std::move(input), std::move(layers));
  } catch (const std::invalid_argument& e) {
    throw PersistenceError(Kind::shape_inconsistency, std::string("model file: ") + e.what());
  }
}

void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  try {
    write_file_atomic(path, bytes);
  } catch (const std::system_error& e) {
    throw PersistenceError(Kind::io, e.what());
  }
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  try {
    return read_file(path);
  } catch (const std::system_error& e) {
    throw PersistenceError(Kind::io, e.what());
  }
}

template <class F>
auto with_path(const std::filesystem::path& path, F f) {
  try {
    return f();
  } catch (const PersistenceError& e) {
    throw PersistenceError(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace

std::string to_string(PersistenceErrorKind kind) {
  switch (kind) {
    case Kind::io: return "io";
    case Kind::bad_magic: return "bad_magic";
    case Kind::unsupported_version: return "unsupported_version";
    case Kind::checksum_mismatch: return "checksum_mismatch";
    case Kind::shape_inconsistency: return "shape_inconsistency";
    case Kind::truncated: return "truncated";
    case Kind::missing_section: return "missing_section";
    case Kind::empty_model: return "empty_model";
  }
  return "unknown";
}

PersistenceError::PersistenceError(PersistenceErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

std::vector<std::uint8_t> serialize_model(const Drbn& net) {
  if (net.empty()) throw PersistenceError(Kind::empty_model, "cannot save a network without layers");
  net.validate();
  Writer w;
  w.magic(kModelMagic);
  w.u32(kModelFormatVersion);
  write_model_body(w, net);
  w.crc();
  return std::move(w.buffer());
}

Drbn deserialize_model(std::span<const std::uint8_t> bytes) {
  return read_checked(bytes, kModelMagic, kModelFormatVersion, "model file", parse_model_body);
}

void save_model(const Drbn& net, const std::filesystem::path& path) {
  write_atomic(path, serialize_model(net));
}

Drbn load_model(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  return with_path(path, [&] { return deserialize_model(bytes); });
}

std::vector<std::uint8_t> serialize_checkpoint(const TrainingState& state) {
  if (state.optimizers.size() != state.net.depth()) {
    throw PersistenceError(Kind::shape_inconsistency, "checkpoint: one optimizer per layer expected");
  }
  Writer w;
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointFormatVersion);
  w.u32(4);

  auto section = [&w](const std::array<char, 4>& tag, Writer& payload) {
    w.magic(tag);
    w.u64(payload.buffer().size());
    w.bytes(payload.buffer());
  };

  Writer model;
  model.bytes(serialize_model(state.net));
  section(kTagModel, model);

  Writer pcd;
  pcd.shaped(state.pcd.particles);
  pcd.u64(state.pcd.chains.size());
  for (const Rng& c : state.pcd.chains) {
    for (auto word : c.state()) pcd.u64(word);
  }
  pcd.u64(state.pcd.updates);
  section(kTagPcd, pcd);

  Writer adam;
  adam.u64(state.optimizers.size());
  for (const AdamState& a : state.optimizers) {
    adam.f64(a.config.learning_rate);
    adam.f64(a.config.beta1);
    adam.f64(a.config.beta2);
    adam.f64(a.config.epsilon);
    adam.u64(a.step);
    adam.u64(a.first_moment.size());
    for (const Tensor& t : a.first_moment) adam.shaped(t);
    adam.u64(a.second_moment.size());
    for (const Tensor& t : a.second_moment) adam.shaped(t);
  }
  section(kTagAdam, adam);

  Writer trainer;
  trainer.u64(state.seed);
  trainer.u64(state.step);
  section(kTagTrainer, trainer);

  w.crc();
  return std::move(w.buffer());
}

TrainingState deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  auto parse = [](Reader& r) {
    const std::uint32_t count = r.u32();
    std::map<std::string, std::span<const std::uint8_t>> sections;
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto tag = r.tag();
      const std::uint64_t len = r.u64();
      sections[std::string(tag.begin(), tag.end())] = r.take(len);
    }
    auto get = [&sections](const std::array<char, 4>& tag) {
      const std::string name(tag.begin(), tag.end());
      auto it = sections.find(name);
      if (it == sections.end()) {
        throw PersistenceError(Kind::missing_section, "checkpoint: missing " + name + " section");
      }
      return it->second;
    };

    TrainingState state;
    state.net = deserialize_model(get(kTagModel));

    Reader pcd(get(kTagPcd), "checkpoint PCD_ section");
    state.pcd.particles = pcd.shaped();
    const std::uint64_t n_chains = pcd.u64();
    if (n_chains > pcd.remaining() / 32) pcd.take(pcd.remaining() + 1);
    state.pcd.chains.reserve(n_chains);
    for (std::uint64_t i = 0; i < n_chains; ++i) {
      Rng::State s{};
      for (auto& word : s) word = pcd.u64();
      state.pcd.chains.push_back(Rng::from_state(s));
    }
    state.pcd.updates = pcd.u64();
    const Shape want = batched(state.pcd.particles.rows(), state.net.input_shape());
    if (state.pcd.particles.shape() != want || state.pcd.chains.size() != state.pcd.particles.rows()) {
      throw PersistenceError(Kind::shape_inconsistency,
                             "checkpoint: particles " + to_string(state.pcd.particles.shape()) +
                                 " do not match the model input or chain count");
    }

    Reader adam(get(kTagAdam), "checkpoint ADAM section");
    const std::uint64_t n_opt = adam.u64();
    if (n_opt != state.net.depth()) {
      throw PersistenceError(Kind::shape_inconsistency, "checkpoint: optimizer count " +
                                                            std::to_string(n_opt) + " != layer count");
    }
    for (std::uint64_t l = 0; l < n_opt; ++l) {
      AdamState a;
      a.config.learning_rate = adam.f64();
      a.config.beta1 = adam.f64();
      a.config.beta2 = adam.f64();
      a.config.epsilon = adam.f64();
      a.step = adam.u64();
      const auto params = layer_tensors(state.net.layer(l));
      for (auto* moments : {&a.first_moment, &a.second_moment}) {
        const std::uint64_t n = adam.u64();
        if (n != params.size()) {
          throw PersistenceError(Kind::shape_inconsistency, "checkpoint: optimizer tensor count mismatch");
        }
        for (std::uint64_t i = 0; i < n; ++i) {
          moments->push_back(adam.shaped());
          if (moments->back().shape() != params[i]->shape()) {
            throw PersistenceError(Kind::shape_inconsistency,
                                   "checkpoint: optimizer moment shape mismatch at layer " +
                                       std::to_string(l));
          }
        }
      }
      state.optimizers.push_back(std::move(a));
    }

    Reader trainer(get(kTagTrainer), "checkpoint TRNR section");
    state.seed = trainer.u64();
    state.step = trainer.u64();
    return state;
  };
  return read_checked(bytes, kCheckpointMagic, kCheckpointFormatVersion, "checkpoint", parse);
}

void save_checkpoint(const TrainingState& state, const std::filesystem::path& path) {
  write_atomic(path, serialize_checkpoint(state));
}

TrainingState load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  return with_path(path, [&] { return deserialize_checkpoint(bytes); });
}

}  // namespace drbn
