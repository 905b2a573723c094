// Copyright 2026 The flashdev Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flashdev/cli.h"

#include <bit>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace flashdev {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome Invoke(std::vector<std::string> args, const CliHooks& hooks = {}) {
  args.insert(args.begin(), "flashdev");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err, hooks);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("flashdev_cli_" + std::string(::testing::UnitTest::GetInstance()
                                              ->current_test_info()
                                              ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string WriteConfig(const std::string& text) {
    const fs::path p = dir_ / "exp.conf";
    std::ofstream(p) << text;
    return p.string();
  }

  fs::path dir_;
};

constexpr const char* kSmallSweep =
    "seq_len = 32\nhead_dim = 8\nsram_elems = 256\n"
    "[seqlen]\npoints = [8, 16, 32]\n"
    "[blocks]\nareas = [16, 64]\nsram_elems = 256\nformats = [\"bf16\"]\n";

TEST_F(CliTest, ValidateListPrintsNamesOnly) {
  const Outcome r = Invoke({"validate", "--list"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out,
            "quantize-conformance\nsingle-tile-reduction\nwasserstein-oracle\n"
            "gradient-check\n");
}

TEST_F(CliTest, ValidateSelectedChecksPass) {
  const Outcome r = Invoke({"validate", "--check", "quantize-conformance", "--check",
                         "wasserstein-oracle", "--check", "gradient-check"});
  EXPECT_EQ(r.code, kExitOk) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, CorruptedQuantizeFailsConformance) {
  CliHooks hooks;
  // Off by one in the last mantissa place whenever rounding moved the value.
  hooks.quantize = [](double x, const FloatFormat& f) {
    const double q = Quantize(x, f);
    if (q == x || !std::isfinite(q) || q == 0) return q;
    return std::bit_cast<double>(std::bit_cast<uint64_t>(q) +
                                 (uint64_t{1} << (52 - f.mantissa_bits())));
  };
  const Outcome r = Invoke({"validate", "--check", "quantize-conformance"}, hooks);
  EXPECT_EQ(r.code, kExitNumerical);
  EXPECT_NE(r.out.find("FAIL quantize-conformance"), std::string::npos);
}

TEST_F(CliTest, SingleTileCheckPassesWithCarrierAccumulation) {
  const Outcome r = Invoke({"validate", "--check", "single-tile-reduction", "--config",
                         WriteConfig("accumulation = \"carrier\"\n")});
  EXPECT_EQ(r.code, kExitOk) << r.out;
}

TEST_F(CliTest, PrintConfigShowsResolvedForm) {
  const Outcome r = Invoke({"sweep-precision", "--config",
                         WriteConfig("format = \"e5m10\"\n"), "--seeds", "3",
                         "--out", dir_.string(), "--print-config"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("format = \"fp16\""), std::string::npos);
  EXPECT_NE(r.out.find("seeds = 3\n"), std::string::npos);
  EXPECT_EQ(r.out.rfind("# config_hash=", 0), 0u);
  EXPECT_FALSE(fs::exists(dir_ / "precision.csv"));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Invoke({}).code, kExitConfig);
  EXPECT_EQ(Invoke({"sweep-everything"}).code, kExitConfig);
  EXPECT_EQ(Invoke({"sweep-precision", "--threads", "0"}).code, kExitConfig);
  EXPECT_EQ(Invoke({"sweep-precision", "--config", WriteConfig("bogus = 1")}).code,
            kExitConfig);
  EXPECT_EQ(Invoke({"sweep-precision", "--config", WriteConfig("seeds = ")}).code,
            kExitConfig);
  EXPECT_EQ(Invoke({"sweep-precision", "--config", WriteConfig("seq_len = 0")}).code,
            kExitConfig);
  EXPECT_EQ(Invoke({"sweep-precision", "--config", (dir_ / "missing.conf").string()}).code,
            kExitIo);
  // Output directory path blocked by a regular file.
  std::ofstream(dir_ / "blocker") << "x";
  EXPECT_EQ(Invoke({"sweep-seqlen", "--config", WriteConfig(kSmallSweep), "--seeds",
                 "1", "--out", (dir_ / "blocker" / "sub").string()})
                .code,
            kExitIo);
  EXPECT_EQ(Invoke({"--help"}).code, kExitOk);
}

TEST_F(CliTest, SweepOutputsAreByteIdenticalAcrossThreadCounts) {
  const std::string cfg = WriteConfig(kSmallSweep);
  for (const char* cmd : {"sweep-precision", "sweep-seqlen", "sweep-blocks"}) {
    const fs::path a = dir_ / (std::string(cmd) + "_1");
    const fs::path b = dir_ / (std::string(cmd) + "_4");
    ASSERT_EQ(Invoke({cmd, "--config", cfg, "--seeds", "2", "--threads", "1",
                   "--out", a.string()}).code, kExitOk);
    ASSERT_EQ(Invoke({cmd, "--config", cfg, "--seeds", "2", "--threads", "4",
                   "--out", b.string()}).code, kExitOk);
    size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      EXPECT_EQ(Slurp(e.path()), Slurp(b / e.path().filename()))
          << cmd << " " << e.path().filename();
    }
    EXPECT_GE(files, 2u);
  }
  EXPECT_TRUE(fs::exists(dir_ / "sweep-blocks_1" / "blocks_none.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "sweep-blocks_1" / "blocks_swap_dims.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "sweep-blocks_1" / "blocks_square_of_equal_area.csv"));
}

TEST_F(CliTest, TrainCompareWritesPerSeedCsvAndSummary) {
  const std::string cfg = WriteConfig(
      "[train]\nsteps = 4\ncheckpoint_every = 2\nvocab = 6\nseq_len = 4\n"
      "head_dim = 4\nclasses = 2\nbatch = 2\n");
  ASSERT_EQ(Invoke({"train-compare", "--config", cfg, "--seeds", "2", "--out",
                 dir_.string()}).code, kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "train_seed0.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "train_seed1.csv"));
  const std::string json = Slurp(dir_ / "train.json");
  EXPECT_NE(json.find("wasserstein_normalized"), std::string::npos);
  EXPECT_NE(json.find("config_hash"), std::string::npos);
  const std::string csv = Slurp(dir_ / "train_seed0.csv");
  EXPECT_EQ(csv.rfind("# flashdev config_hash=", 0), 0u);
  // 3 scenarios x 3 checkpoints x (aggregate + 5 tensors), plus 2 header lines.
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3 * 3 * 6 + 2);
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  const fs::path env_dir = dir_ / "from_env";
  ::setenv(kOutDirEnv, env_dir.string().c_str(), 1);
  const Outcome r = Invoke({"sweep-seqlen", "--config", WriteConfig(kSmallSweep),
                         "--seeds", "1"});
  ::unsetenv(kOutDirEnv);
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(env_dir / "seqlen.csv"));
}

}  // namespace
}  // namespace flashdev
