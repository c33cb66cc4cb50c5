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
#include "oracles.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>
#include <zlib.h>

#include <bit>
#include <cstring>

namespace drbn {
namespace {

using namespace drbn::testing;
using Kind = PersistenceErrorKind;

template <class F>
Kind error_kind(F f) {
  try {
    f();
  } catch (const PersistenceError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no PersistenceError thrown";
  return Kind::io;
}

std::uint32_t crc(std::span<const std::uint8_t> b) {
  return static_cast<std::uint32_t>(::crc32(0L, b.data(), static_cast<uInt>(b.size())));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<std::uint8_t>& b, double v) { put_u64(b, std::bit_cast<std::uint64_t>(v)); }
void put_array(std::vector<std::uint8_t>& b, std::initializer_list<double> vs) {
  put_u64(b, vs.size());
  for (double v : vs) put_f64(b, v);
}
void seal(std::vector<std::uint8_t>& b) { put_u32(b, crc(b)); }

Drbn dense_net(Rng& rng) { return random_network(NetworkSpec::input({28, 28}).dense(7).dense(5), rng); }
Drbn conv_net(Rng& rng) {
  return random_network(NetworkSpec::input({10, 10, 1}).conv(3, 4, 2).conv(2, 2, 2).dense(4), rng);
}

TEST(ModelFile, HandBuiltFixtureMatchesByteForByte) {
  const RbmParams p{Tensor({2, 1}, {0.5, -1.25}), Tensor({2}, {0.125, 2.0}), Tensor({1}, {-3.0})};
  const Drbn net(Shape{2}, {p});
  std::vector<std::uint8_t> want{'D', 'R', 'B', 'N'};
  put_u32(want, 1);  // version
  put_u32(want, 1);  // layers
  put_u32(want, 1);  // input rank
  put_u32(want, 2);
  put_u32(want, 0);  // dense
  put_u32(want, 2);
  put_u32(want, 1);
  put_array(want, {0.5, -1.25});
  put_array(want, {0.125, 2.0});
  put_array(want, {-3.0});
  seal(want);
  EXPECT_EQ(serialize_model(net), want);
  EXPECT_EQ(deserialize_model(want), net);
}

TEST(ModelFile, ConvFixtureLayout) {
  ConvRbmParams p = ConvRbmParams::zeros({4, 4, 1, 1, 2, 2});
  p.filters = Tensor({1, 2, 2, 1}, {1, 2, 3, 4});
  p.visible_bias[0] = 0.5;
  p.hidden_bias[0] = -0.5;
  std::vector<std::uint8_t> want{'D', 'R', 'B', 'N'};
  for (std::uint32_t v : {1u, 1u, 3u, 4u, 4u, 1u, 1u, 4u, 4u, 1u, 1u, 2u, 2u}) put_u32(want, v);
  put_array(want, {1, 2, 3, 4});
  put_array(want, {0.5});
  put_array(want, {-0.5});
  seal(want);
  const Drbn net(Shape{4, 4, 1}, {p});
  EXPECT_EQ(serialize_model(net), want);
}

TEST(ModelFile, BitwiseRoundTripProperty) {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    for (const Drbn& net : {dense_net(rng), conv_net(rng)}) {
      const auto bytes = serialize_model(net);
      const Drbn back = deserialize_model(bytes);
      EXPECT_EQ(back, net);
      EXPECT_EQ(serialize_model(back), bytes);
    }
  }
}

TEST(ModelFile, SpecialValuesSurvive) {
  RbmParams p = RbmParams::zeros(2, 2);
  p.weights = Tensor({2, 2}, {-0.0, 1e-310, 1.7976931348623157e308, -5e-324});
  const Drbn net(Shape{2}, {p});
  const Drbn back = deserialize_model(serialize_model(net));
  const auto& q = std::get<RbmParams>(back.layer(0));
  EXPECT_EQ(std::memcmp(q.weights.data(), p.weights.data(), 4 * sizeof(double)), 0);
}

TEST(ModelFile, DistinctErrorKinds) {
  Rng rng(2);
  const auto good = serialize_model(dense_net(rng));

  auto flipped = good;
  flipped[good.size() / 2] ^= 0x40;
  EXPECT_EQ(error_kind([&] { deserialize_model(flipped); }), Kind::checksum_mismatch);
  auto bad_crc = good;
  bad_crc.back() ^= 1;
  EXPECT_EQ(error_kind([&] { deserialize_model(bad_crc); }), Kind::checksum_mismatch);

  for (std::size_t len : {std::size_t{0}, std::size_t{3}, std::size_t{40}, good.size() / 2, good.size() - 1}) {
    const std::vector<std::uint8_t> cut(good.begin(), good.begin() + static_cast<long>(len));
    EXPECT_EQ(error_kind([&] { deserialize_model(cut); }), Kind::truncated) << len;
  }

  auto version = good;
  version[4] += 1;
  EXPECT_EQ(error_kind([&] { deserialize_model(version); }), Kind::unsupported_version);

  auto magic = good;
  magic[0] = 'X';
  EXPECT_EQ(error_kind([&] { deserialize_model(magic); }), Kind::bad_magic);
}

TEST(ModelFile, EmptyNetworkRejectedBothWays) {
  EXPECT_EQ(error_kind([] { serialize_model(Drbn()); }), Kind::empty_model);
  std::vector<std::uint8_t> b{'D', 'R', 'B', 'N'};
  for (std::uint32_t v : {1u, 0u, 1u, 4u}) put_u32(b, v);
  seal(b);
  EXPECT_EQ(error_kind([&] { deserialize_model(b); }), Kind::empty_model);
}

TEST(ModelFile, ShapeInconsistencies) {
  // Header says 2x1 but W carries 3 values (checksum recomputed).
  std::vector<std::uint8_t> b{'D', 'R', 'B', 'N'};
  for (std::uint32_t v : {1u, 1u, 1u, 2u, 0u, 2u, 1u}) put_u32(b, v);
  put_array(b, {1, 2, 3});
  put_array(b, {0, 0});
  put_array(b, {0});
  seal(b);
  EXPECT_EQ(error_kind([&] { deserialize_model(b); }), Kind::shape_inconsistency);

  // Two layers whose sizes do not chain: 2 -> 1 then 3 -> 1.
  std::vector<std::uint8_t> c{'D', 'R', 'B', 'N'};
  for (std::uint32_t v : {1u, 2u, 1u, 2u}) put_u32(c, v);
  put_u32(c, 0), put_u32(c, 2), put_u32(c, 1);
  put_array(c, {1, 2}), put_array(c, {0, 0}), put_array(c, {0});
  put_u32(c, 0), put_u32(c, 3), put_u32(c, 1);
  put_array(c, {1, 2, 3}), put_array(c, {0, 0, 0}), put_array(c, {0});
  seal(c);
  EXPECT_EQ(error_kind([&] { deserialize_model(c); }), Kind::shape_inconsistency);

  // Unknown layer kind and stride that does not tile.
  std::vector<std::uint8_t> d{'D', 'R', 'B', 'N'};
  for (std::uint32_t v : {1u, 1u, 3u, 5u, 5u, 1u, 1u, 5u, 5u, 1u, 1u, 2u, 2u}) put_u32(d, v);
  seal(d);
  EXPECT_EQ(error_kind([&] { deserialize_model(d); }), Kind::shape_inconsistency);
  std::vector<std::uint8_t> e{'D', 'R', 'B', 'N'};
  for (std::uint32_t v : {1u, 1u, 1u, 2u, 7u}) put_u32(e, v);
  seal(e);
  EXPECT_EQ(error_kind([&] { deserialize_model(e); }), Kind::shape_inconsistency);

  // Trailing garbage inside the checksummed region.
  Rng rng(3);
  auto extra = serialize_model(dense_net(rng));
  extra.resize(extra.size() - 4);
  extra.push_back(0);
  seal(extra);
  EXPECT_EQ(error_kind([&] { deserialize_model(extra); }), Kind::shape_inconsistency);
}

TEST(ModelFile, SaveIsIdempotentAndLoadReportsPath) {
  TempDir dir;
  Rng rng(4);
  const Drbn net = conv_net(rng);
  save_model(net, dir / "a.drbn");
  const auto first = read_file(dir / "a.drbn");
  save_model(load_model(dir / "a.drbn"), dir / "a.drbn");
  EXPECT_EQ(read_file(dir / "a.drbn"), first);
  EXPECT_EQ(load_model(dir / "a.drbn"), net);
  EXPECT_EQ(error_kind([&] { load_model(dir / "missing.drbn"); }), Kind::io);
  EXPECT_EQ(error_kind([&] { save_model(net, dir / "no" / "dir" / "x.drbn"); }), Kind::io);
  write_file_atomic(dir / "bad.drbn", std::vector<std::uint8_t>{'D', 'R', 'B', 'N', 1});
  try {
    load_model(dir / "bad.drbn");
    FAIL();
  } catch (const PersistenceError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.drbn"), std::string::npos);
  }
}

TEST(ErrorKinds, Names) {
  EXPECT_EQ(to_string(Kind::checksum_mismatch), "checksum_mismatch");
  EXPECT_EQ(to_string(Kind::missing_section), "missing_section");
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.gibbs_steps = 2;
  c.n_particles = 6;
  c.batch_size = 4;
  c.seed = 11;
  c.adam.learning_rate = 0.01;
  return c;
}

TEST(Checkpoint, RoundTripsEveryField) {
  Rng rng(5);
  const TrainConfig c = tiny_config();
  TrainingState s = TrainingState::start(conv_net(rng), c);
  const Tensor data = random_binary({12, 10, 10, 1}, rng);
  TrainConfig run = c;
  run.max_steps = 4;
  fit(data, s, run);
  const auto bytes = serialize_checkpoint(s);
  const TrainingState back = deserialize_checkpoint(bytes);
  EXPECT_EQ(back, s);
  EXPECT_EQ(serialize_checkpoint(back), bytes);

  auto flipped = bytes;
  flipped[bytes.size() / 3] ^= 1;
  EXPECT_EQ(error_kind([&] { deserialize_checkpoint(flipped); }), Kind::checksum_mismatch);
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 100);
  EXPECT_EQ(error_kind([&] { deserialize_checkpoint(cut); }), Kind::truncated);
  EXPECT_EQ(error_kind([&] { deserialize_checkpoint(serialize_model(s.net)); }), Kind::bad_magic);
}

TEST(Checkpoint, MissingSectionIsReported) {
  Rng rng(6);
  const TrainingState s = TrainingState::start(dense_net(rng), tiny_config());
  const auto bytes = serialize_checkpoint(s);
  // Rebuild the file without its PCD_ section.
  std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + 8);
  put_u32(out, 3);
  std::size_t pos = 12;
  while (pos < bytes.size() - 4) {
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= std::uint64_t{bytes[pos + 4 + i]} << (8 * i);
    const std::size_t end = pos + 12 + len;
    if (std::string(bytes.begin() + static_cast<long>(pos), bytes.begin() + static_cast<long>(pos) + 4) != "PCD_") {
      out.insert(out.end(), bytes.begin() + static_cast<long>(pos), bytes.begin() + static_cast<long>(end));
    }
    pos = end;
  }
  seal(out);
  EXPECT_EQ(error_kind([&] { deserialize_checkpoint(out); }), Kind::missing_section);
}

TEST(Checkpoint, ResumeAtStepFiftyMatchesStraightRun) {
  Rng rng(7);
  const Drbn net = random_network(NetworkSpec::input({5, 5}).dense(6).dense(4), rng, 0.1);
  const Tensor data = random_binary({40, 5, 5}, rng);
  TrainConfig c = tiny_config();
  c.epochs = 10;  // 10 updates per epoch

  TrainingState straight = TrainingState::start(net, c);
  fit(data, straight, c);
  ASSERT_EQ(straight.step, 100u);

  TempDir dir;
  TrainingState first = TrainingState::start(net, c);
  TrainConfig half = c;
  half.max_steps = 50;
  fit(data, first, half);
  save_checkpoint(first, dir / "ck");
  TrainingState resumed = load_checkpoint(dir / "ck");
  ASSERT_EQ(resumed.step, 50u);
  fit(data, resumed, c);
  EXPECT_EQ(resumed, straight);
  EXPECT_EQ(serialize_model(resumed.net), serialize_model(straight.net));
}

}  // namespace
}  // namespace drbn
