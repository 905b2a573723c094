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

#include "flashdev/config.h"

#include <charconv>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "flashdev/output.h"

namespace flashdev {
namespace {

TEST(ConfigTest, EmptyDocumentIsAllDefaults) {
  const ExperimentConfig c = ParseConfig("");
  const ExperimentConfig d;
  EXPECT_EQ(FormatConfig(c), FormatConfig(d));
  EXPECT_EQ(c.attention.seq_len, 512u);
  EXPECT_EQ(c.attention.head_dim, 64u);
  EXPECT_EQ(c.attention.geometry(), (BlockGeometry{64, 64}));
  EXPECT_EQ(c.seeds, 10u);
  EXPECT_EQ(c.train_seeds, 5u);
  EXPECT_EQ(c.train.steps, 2000u);
}

TEST(ConfigTest, FormatPresetAndExplicitLayout) {
  const ExperimentConfig a = ParseConfig("format = \"bf16\"\n");
  EXPECT_EQ(a.attention.format, FloatFormat::BF16());
  const ExperimentConfig b = ParseConfig("format = \"e8m7\"\n");
  EXPECT_EQ(b.attention.format, FloatFormat::BF16());
  EXPECT_EQ(b.attention.format.name(), "bf16");
  const ExperimentConfig c = ParseConfig("format = \"e6m9\"");
  EXPECT_EQ(c.attention.format.mantissa_bits(), 9);
}

TEST(ConfigTest, SectionsListsAndComments) {
  const ExperimentConfig c = ParseConfig(R"(
# base
seq_len = 256   ; trailing comment
seeds = 3
accumulation = "carrier"

[precision]
formats = ["bf16", "fp32"]

[seqlen]
points = [32, 64]

[blocks]
areas = [64, 256]
perturbations = ["swap_dims"]

[train]
learning_rate = 0.1
steps = 100
checkpoint_every = 25
format = "fp16"
)");
  EXPECT_EQ(c.attention.seq_len, 256u);
  EXPECT_EQ(c.seeds, 3u);
  EXPECT_EQ(c.attention.accumulation, Accumulation::kCarrier);
  EXPECT_EQ(c.train.accumulation, Accumulation::kCarrier);
  EXPECT_EQ(c.precision_formats.size(), 2u);
  EXPECT_EQ(c.seqlen_points, (std::vector<size_t>{32, 64}));
  EXPECT_EQ(c.block_areas, (std::vector<size_t>{64, 256}));
  EXPECT_EQ(c.block_perturbations.size(), 1u);
  EXPECT_EQ(c.train.learning_rate, 0.1);
  EXPECT_EQ(c.train.train_format, FloatFormat::FP16());
}

TEST(ConfigTest, SyntaxErrorsReportLineAndColumn) {
  try {
    ParseConfig("seeds = 3\nseq_len 5\n");
    FAIL() << "expected a syntax error";
  } catch (const ConfigSyntaxError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 9u);
  }
  EXPECT_THROW(ParseConfig("format = bf16"), ConfigSyntaxError);
  EXPECT_THROW(ParseConfig("format = \"bf16"), ConfigSyntaxError);
  EXPECT_THROW(ParseConfig("[train"), ConfigSyntaxError);
  EXPECT_THROW(ParseConfig("seeds = 3 4"), ConfigSyntaxError);
  EXPECT_THROW(ParseConfig("seeds = 3\nseeds = 4"), ConfigSyntaxError);
  EXPECT_THROW(ParseConfig("[precision]\nformats = [\"bf16\" \"fp16\"]"),
               ConfigSyntaxError);
}

TEST(ConfigTest, UnknownKeysAndSections) {
  EXPECT_THROW(ParseConfig("sequence_length = 5"), UnknownKeyError);
  EXPECT_THROW(ParseConfig("[train]\nformats = [\"bf16\"]"), UnknownKeyError);
  EXPECT_THROW(ParseConfig("[model]\nd = 4"), UnknownKeyError);
}

TEST(ConfigTest, RangeErrors) {
  EXPECT_THROW(ParseConfig("seq_len = 0"), ConfigRangeError);
  EXPECT_THROW(ParseConfig("seeds = -1"), ConfigRangeError);
  EXPECT_THROW(ParseConfig("seeds = 1.5"), ConfigRangeError);
  EXPECT_THROW(ParseConfig("format = \"fp8\""), ConfigRangeError);
  EXPECT_THROW(ParseConfig("format = 16"), ConfigRangeError);
  EXPECT_THROW(ParseConfig("accumulation = \"fast\""), ConfigRangeError);
  EXPECT_THROW(ParseConfig("threads = 0"), ConfigRangeError);
  EXPECT_THROW(ParseConfig("sram_elems = 100"), ConfigRangeError);  // < 4d
  EXPECT_THROW(ParseConfig("[precision]\nformats = [\"fp32\", \"bf16\"]"),
               ConfigRangeError);
  EXPECT_THROW(ParseConfig("[seqlen]\npoints = []"), ConfigRangeError);
  EXPECT_THROW(ParseConfig("[seqlen]\npoints = [64, 32]"), ConfigRangeError);
  EXPECT_THROW(ParseConfig("[blocks]\nperturbations = [\"scale_area\"]"),
               ConfigRangeError);
  EXPECT_THROW(ParseConfig("[train]\nlearning_rate = -0.1"), ConfigRangeError);
  EXPECT_THROW(ParseConfig("[train]\ncheckpoint_every = 300"), ConfigRangeError);
  EXPECT_THROW(ParseConfig("[train]\nclasses = 1"), ConfigRangeError);
}

TEST(ConfigTest, ErrorClassesShareABase) {
  EXPECT_THROW(ParseConfig("x = 1"), ConfigError);
  EXPECT_THROW(ParseConfig("x 1"), ConfigError);
  EXPECT_THROW(ParseConfig("seeds = 0"), ConfigError);
}

TEST(ConfigTest, CanonicalFormRoundTrips) {
  ExperimentConfig c = ParseConfig(
      "format = \"e6m9\"\nseeds = 4\nout = \"a \\\"q\\\" dir\"\n[train]\n"
      "learning_rate = 0.030000000000000002\n");
  const std::string text = FormatConfig(c);
  EXPECT_EQ(FormatConfig(ParseConfig(text)), text);
  EXPECT_EQ(ParseConfig(text).out, "a \"q\" dir");
  EXPECT_EQ(ParseConfig(text).train.learning_rate, 0.030000000000000002);
}

TEST(ConfigTest, HashIgnoresExecutionOnlyKeys) {
  const ExperimentConfig a = ParseConfig("threads = 1");
  const ExperimentConfig b = ParseConfig("threads = 8\nout = \"elsewhere\"");
  const ExperimentConfig c = ParseConfig("seeds = 9");
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  EXPECT_NE(ConfigHash(a), ConfigHash(c));
  EXPECT_EQ(ConfigHash(a).size(), 16u);
}

TEST(ConfigTest, SpecsFollowConfig) {
  const ExperimentConfig c = ParseConfig("seeds = 2\nseed_base = 10\n");
  const SweepSpec p = PrecisionSpec(c);
  EXPECT_EQ(p.seeds, (std::vector<uint64_t>{10, 11}));
  EXPECT_EQ(p.formats.size(), 4u);
  const SweepSpec b = BlockSpec(c, PerturbationKind::kSwapDims);
  EXPECT_EQ(b.base.geometry(), (BlockGeometry{64, 256}));
  EXPECT_EQ(b.perturbation, PerturbationKind::kSwapDims);
  EXPECT_EQ(SeqLenSpec(c).points, (std::vector<size_t>{64, 128, 256, 512}));
}

TEST(OutputTest, ShortestRoundTripDoubles) {
  EXPECT_EQ(FormatDouble(0.1), "0.1");
  EXPECT_EQ(FormatDouble(1.0), "1");
  EXPECT_EQ(FormatDouble(-2.5e-10), "-2.5e-10");
  EXPECT_EQ(FormatDouble(std::nan("")), "nan");
  for (double x : {1.0 / 3.0, 6.02214076e23, 5e-324, 0.333984375}) {
    const std::string s = FormatDouble(x);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, x);
  }
}

TEST(OutputTest, EmptySweepIsHeaderOnly) {
  const std::string csv = SweepCsv(SweepResult{}, "abc");
  EXPECT_EQ(csv, "# flashdev config_hash=abc\n" + std::string(kSweepCsvHeader) + "\n");
}

TEST(OutputTest, OneRowHasElevenFields) {
  SweepResult r;
  SweepRow row;
  row.value = "bf16";
  row.format = FloatFormat::BF16();
  row.geometry = {4, 8};
  row.report.max_abs_diff = 0.125;
  r.rows.push_back(row);
  std::istringstream in(SweepCsv(r, "h"));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10);
  std::getline(in, line);
  EXPECT_EQ(line, "precision,bf16,0,flash,bf16,4,8,0.125,0,0,golden");
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10);
  EXPECT_FALSE(std::getline(in, line));
}

TEST(OutputTest, TrainingCsvRows) {
  ScenarioSuite s;
  s.scenarios[0].name = "flash_vs_baseline";
  CheckpointDelta d;
  d.step = 100;
  d.max_difference = 0.5;
  d.wasserstein = 0.25;
  d.per_tensor = {{"embed", 0.5, 0.3}, {"head", 0.1, 0.05}};
  s.scenarios[0].deltas = {d};
  const std::string csv = TrainingCsv(s, "h");
  EXPECT_NE(csv.find("\nscenario,step,max_difference,wasserstein,tensor\n"),
            std::string::npos);
  EXPECT_NE(csv.find("flash_vs_baseline,100,0.5,0.25,aggregate\n"), std::string::npos);
  EXPECT_NE(csv.find("flash_vs_baseline,100,0.1,0.05,head\n"), std::string::npos);
}

TEST(OutputTest, SweepSummaryGroupsSeeds) {
  SweepResult r;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    SweepRow row;
    row.value = "64";
    row.seed = seed;
    row.report.max_abs_diff = static_cast<double>(seed + 1);
    r.rows.push_back(row);
  }
  const auto j = SweepSummary(r);
  ASSERT_EQ(j["points"].size(), 1u);
  EXPECT_EQ(j["points"][0]["seeds"], 3);
  EXPECT_EQ(j["points"][0]["max_abs_diff"]["median"], 2.0);
}

}  // namespace
}  // namespace flashdev
