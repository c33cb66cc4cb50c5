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

#include "drbn_tools/arch.hpp"
#include "drbn_tools/commands.hpp"

#include "drbn/image_io.hpp"
#include "drbn/persistence.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace drbn::tools {
namespace {

using drbn::testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

// Small labeled IDX pair of 8x8 digits-like noise under <dir>/<prefix>-*.
void write_split(const std::filesystem::path& dir, const std::string& prefix, std::size_t n,
                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> img{0, 0, 8, 3}, lab{0, 0, 8, 1};
  put_u32(img, static_cast<std::uint32_t>(n));
  put_u32(img, 8);
  put_u32(img, 8);
  put_u32(lab, static_cast<std::uint32_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 3);
    lab.push_back(static_cast<std::uint8_t>(y));
    for (int p = 0; p < 64; ++p) {
      const bool on = (p % 3 == y) ? rng.uniform() < 0.9 : rng.uniform() < 0.1;
      img.push_back(on ? 255 : 0);
    }
  }
  write_file_atomic(dir / (prefix + "-images-idx3-ubyte"), img);
  write_file_atomic(dir / (prefix + "-labels-idx1-ubyte"), lab);
}

class CliData : public ::testing::Test {
 protected:
  void SetUp() override {
    write_split(dir.path(), "train", 60, 1);
    write_split(dir.path(), "t10k", 30, 2);
  }
  std::string data() const { return dir.path().string(); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  TempDir dir;
};

TEST(Arch, ParsesReferenceArchitectures) {
  EXPECT_EQ(parse_architecture("dense:500,dense:1000", 28, 28),
            NetworkSpec::input({28, 28}).dense(500).dense(1000));
  const NetworkSpec conv = parse_architecture("conv:64x12s2,conv:128x5s2,dense:512", 28, 28);
  EXPECT_EQ(conv, NetworkSpec::input({28, 28, 1}).conv(64, 12, 2).conv(128, 5, 2).dense(512));
  EXPECT_EQ(format_architecture(conv), "conv:64x12s2,conv:128x5s2,dense:512");
  EXPECT_EQ(parse_architecture("conv:2x3", 5, 5).layers[0].conv.stride, 1u);
  EXPECT_EQ(network_weight_count(parse_architecture("dense:500,dense:1000", 28, 28)), 892000u);
}

TEST(Arch, RoundTripProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    const std::size_t n = 1 + rng.next() % 4;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) text += ",";
      text += "dense:" + std::to_string(1 + rng.next() % 900);
    }
    EXPECT_EQ(format_architecture(parse_architecture(text, 28, 28)), text);
  }
}

std::size_t error_position(const std::string& text, std::size_t h = 28, std::size_t w = 28) {
  try {
    parse_architecture(text, h, w);
  } catch (const ArchParseError& e) {
    return e.position();
  }
  ADD_FAILURE() << "accepted " << text;
  return 0;
}

TEST(Arch, ErrorPositions) {
  EXPECT_EQ(error_position(""), 0u);
  EXPECT_EQ(error_position("dens:5"), 0u);
  EXPECT_EQ(error_position("dense5"), 5u);
  EXPECT_EQ(error_position("dense:"), 6u);
  EXPECT_EQ(error_position("dense:0"), 6u);
  EXPECT_EQ(error_position("dense:5,"), 8u);
  EXPECT_EQ(error_position("dense:5;dense:3"), 7u);
  EXPECT_EQ(error_position("dense:500,conv:2x3"), 10u);    // conv after a flat layer
  EXPECT_EQ(error_position("conv:64x12s3"), 0u);           // 28 - 12 not divisible by 3
  EXPECT_EQ(error_position("conv:64x12s"), 11u);
  EXPECT_EQ(error_position("conv:64y12"), 7u);
  EXPECT_EQ(error_position("dense:99999999999"), 6u);
  try {
    parse_architecture("dense:5,bogus:3", 28, 28);
  } catch (const ArchParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("unknown layer kind 'bogus'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("\n          ^"), std::string::npos) << msg;
  }
}

TEST(Cli, HelpAndUsageExitCodes) {
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
  for (const char* sub : {"train", "generate", "semisup", "inspect"}) {
    const Result r = cli({sub, "--help"});
    EXPECT_EQ(r.code, kExitOk) << sub;
    EXPECT_NE(r.out.find("--config"), std::string::npos) << sub;
  }
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--arch", "dense:5", "--seed", "1"}).code, kExitUsage);  // no --data
  EXPECT_EQ(cli({"generate", "--model", "m", "--out", "x"}).code, kExitUsage);      // no --seed
  EXPECT_EQ(cli({"train", "--data", "x", "--seed", "1", "--k", "0"}).code, kExitUsage);
}

TEST(Cli, MissingDatasetIsUsageError) {
  const Result r = cli({"train", "--data", "/no/such/dataset", "--arch", "dense:5", "--seed", "1"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("dataset path does not exist"), std::string::npos);
  EXPECT_NE(r.err.find("--data"), std::string::npos);  // usage follows
}

TEST_F(CliData, BadArchitectureIsUsageError) {
  const Result r = cli({"train", "--data", data(), "--arch", "dense:5,", "--seed", "1", "--out", path("o")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("position 8"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"train", "--data", data(), "--seed", "1"}).code, kExitUsage);  // no --arch
}

TEST_F(CliData, ZeroEpochsSavesInitialization) {
  const Result r = cli({"train", "--data", data(), "--arch", "dense:6,dense:4", "--seed", "9", "--epochs", "0",
                        "--batch", "20", "--out", path("run"), "--quiet"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Drbn saved = load_model(path("run/model.drbn"));
  EXPECT_EQ(saved, initial_network(parse_architecture("dense:6,dense:4", 8, 8), 9));
  EXPECT_TRUE(std::filesystem::exists(path("run/train.log")));
}

TEST_F(CliData, TrainWritesArtifactsAndIsDeterministic) {
  std::vector<std::string> args{"train", "--data", data(), "--arch", "dense:6", "--seed", "4", "--epochs", "2",
                                "--particles", "10", "--batch", "20", "--sample-count", "4", "--sample-steps", "3",
                                "--checkpoint", path("ck")};
  auto a = args, b = args;
  a.insert(a.end(), {"--out", path("a")});
  b.insert(b.end(), {"--out", path("b")});
  const Result ra = cli(a);
  ASSERT_EQ(ra.code, kExitOk) << ra.err;
  ASSERT_EQ(cli(b).code, kExitOk);
  EXPECT_EQ(read_file(path("a/model.drbn")), read_file(path("b/model.drbn")));
  EXPECT_EQ(read_file(path("a/samples_epoch2.pgm")), read_file(path("b/samples_epoch2.pgm")));
  const GrayImage grid = read_pnm(path("a/samples_epoch1.pgm"));
  EXPECT_EQ(grid.height, 17u);
  EXPECT_EQ(grid.width, 17u);
  EXPECT_NE(ra.out.find("architecture: 8x8 -> flatten 64 -> dense 6"), std::string::npos) << ra.out;

  std::ifstream log(path("a/train.log"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    EXPECT_EQ(line.rfind("step=", 0), 0u);
    EXPECT_EQ(line.find("fe_gap=nan"), std::string::npos);  // t10k split supplies held-out data
    ++lines;
  }
  EXPECT_EQ(lines, 2u);

  // Resuming a finished checkpoint with more epochs continues from it.
  const Result rc = cli({"train", "--data", data(), "--resume", path("ck"), "--seed", "4", "--epochs", "3",
                         "--particles", "10", "--batch", "20", "--out", path("c"), "--checkpoint", path("ck"),
                         "--quiet"});
  ASSERT_EQ(rc.code, kExitOk) << rc.err;
  EXPECT_EQ(load_checkpoint(path("ck")).step, 9u);
  EXPECT_EQ(cli({"train", "--data", data(), "--resume", path("ck"), "--seed", "5", "--out", path("d")}).code,
            kExitUsage);
}

TEST_F(CliData, ConfigFileValuesYieldToFlags) {
  {
    std::ofstream cfg(path("train.ini"));
    cfg << "arch=dense:5\nseed=3\nepochs=4\nbatch=20\nparticles=7\n";
  }
  const Result r = cli({"train", "--config", path("train.ini"), "--data", data(), "--epochs", "0",
                        "--out", path("cfg"), "--quiet"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(load_model(path("cfg/model.drbn")), initial_network(parse_architecture("dense:5", 8, 8), 3));
  const Result r2 = cli({"train", "--config", path("train.ini"), "--data", data(), "--max-steps", "2",
                         "--out", path("cfg2"), "--checkpoint", path("cfg2.ck"), "--quiet"});
  ASSERT_EQ(r2.code, kExitOk) << r2.err;
  const TrainingState s = load_checkpoint(path("cfg2.ck"));
  EXPECT_EQ(s.step, 2u);
  EXPECT_EQ(s.pcd.particles.rows(), 7u);
  EXPECT_EQ(s.seed, 3u);
}

TEST_F(CliData, GenerateIsSeededAndValidates) {
  ASSERT_EQ(cli({"train", "--data", data(), "--arch", "dense:6", "--seed", "1", "--epochs", "1", "--batch", "20",
                 "--out", path("m"), "--quiet", "--sample-every", "0"})
                .code,
            kExitOk);
  const std::string model = path("m/model.drbn");
  for (const char* out : {"g1.pgm", "g2.pgm"}) {
    const Result r = cli({"generate", "--model", model, "--steps", "5", "--count", "6", "--seed", "3",
                          "--out", path(out)});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  EXPECT_EQ(read_file(path("g1.pgm")), read_file(path("g2.pgm")));
  ASSERT_EQ(cli({"generate", "--model", model, "--steps", "1", "--count", "6", "--seed", "4", "--cols", "6",
                 "--out", path("g3.pgm")})
                .code,
            kExitOk);
  EXPECT_NE(read_file(path("g3.pgm")), read_file(path("g1.pgm")));
  const GrayImage g = read_pnm(path("g3.pgm"));
  EXPECT_EQ(g.height, 8u);
  EXPECT_EQ(g.width, 6u * 8 + 5);
  EXPECT_EQ(cli({"generate", "--model", path("none.drbn"), "--seed", "1", "--out", path("x.pgm")}).code,
            kExitRuntime);
}

TEST_F(CliData, InspectReportsCountsAndShapes) {
  save_model(Drbn::zeros(NetworkSpec::input({784}).dense(500).dense(1000)), path("two.drbn"));
  const Result two = cli({"inspect", "--model", path("two.drbn"), "--probe", "2"});
  ASSERT_EQ(two.code, kExitOk) << two.err;
  EXPECT_NE(two.out.find("weights: 892000"), std::string::npos) << two.out;
  EXPECT_NE(two.out.find("probe_free_energy: layer0="), std::string::npos);

  save_model(Drbn::zeros(NetworkSpec::input({28, 28, 1}).conv(64, 12, 2).conv(128, 5, 2).dense(512)),
             path("conv.drbn"));
  const Result conv = cli({"inspect", "--model", path("conv.drbn"), "--probe", "0"});
  ASSERT_EQ(conv.code, kExitOk) << conv.err;
  EXPECT_NE(conv.out.find("layer 0: conv visible=(28x28x1) hidden=(9x9x64)"), std::string::npos) << conv.out;
  EXPECT_NE(conv.out.find("layer 1: conv visible=(9x9x64) hidden=(3x3x128)"), std::string::npos);
  EXPECT_NE(conv.out.find("layer 2: dense visible=(1152) hidden=(512) weights=589824 flattened_from=(3x3x128)"), std::string::npos);
  EXPECT_NE(conv.out.find("architecture: conv:64x12s2,conv:128x5s2,dense:512"), std::string::npos);

  auto bytes = read_file(path("two.drbn"));
  bytes[100] ^= 0xFF;
  write_file_atomic(path("corrupt.drbn"), bytes);
  const Result bad = cli({"inspect", "--model", path("corrupt.drbn")});
  EXPECT_EQ(bad.code, kExitRuntime);
  EXPECT_NE(bad.err.find("checksum_mismatch"), std::string::npos) << bad.err;
}

TEST_F(CliData, SemisupPhasesAndRecords) {
  ASSERT_EQ(cli({"train", "--data", data(), "--arch", "dense:6", "--seed", "1", "--epochs", "1", "--batch", "20",
                 "--out", path("m"), "--quiet", "--sample-every", "0"})
                .code,
            kExitOk);
  const std::string model = path("m/model.drbn");
  EXPECT_EQ(cli({"semisup", "--data", data(), "--model", model, "--labels", "0"}).code, kExitUsage);
  EXPECT_EQ(cli({"semisup", "--data", data(), "--model", model, "--labels", "61"}).code, kExitUsage);
  EXPECT_EQ(cli({"semisup", "--data", data(), "--labels", "10"}).code, kExitUsage);  // frozen needs --model

  const Result f = cli({"semisup", "--data", data(), "--model", model, "--labels", "12", "--runs", "2",
                        "--validation", "6", "--epochs", "3", "--phase", "finetune", "--finetune-epochs", "2",
                        "--metrics", path("metrics.txt")});
  ASSERT_EQ(f.code, kExitOk) << f.err;
  EXPECT_NE(f.out.find("labels_used=12 model=model phase=frozen seed=0 test_error="), std::string::npos) << f.out;
  EXPECT_NE(f.out.find("phase=finetune seed=1 test_error="), std::string::npos);
  EXPECT_NE(f.out.find("labels_used=12 model=model phase=finetune runs=2 mean_test_error="), std::string::npos);
  const auto text = read_file(path("metrics.txt"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);

  const Result s = cli({"semisup", "--data", data(), "--arch", "dense:4", "--phase", "scratch", "--labels", "12",
                        "--runs", "1", "--epochs", "2", "--seed", "5"});
  ASSERT_EQ(s.code, kExitOk) << s.err;
  EXPECT_NE(s.out.find("model=plain_fc phase=scratch seed=5"), std::string::npos) << s.out;
  const Result s2 = cli({"semisup", "--data", data(), "--arch", "dense:4", "--phase", "scratch", "--labels", "12",
                         "--runs", "1", "--epochs", "2", "--seed", "5"});
  EXPECT_EQ(s2.out, s.out);
}

}  // namespace
}  // namespace drbn::tools
