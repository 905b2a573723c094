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

// Experiment configuration files.
//
// Syntax, one statement per line:
//
//   # comment            (';' also starts a comment)
//   [section]
//   key = value
//
// A value is an integer, a real, a double-quoted string, true/false, or a
// bracketed list of those: `formats = ["bf16", "e5m10"]`. Keys before the
// first section header belong to the top-level section. Every key has a
// default, so an empty document is a complete config. See README.md for the
// key reference, or run any subcommand with --print-config.

#ifndef FLASHDEV_CONFIG_H_
#define FLASHDEV_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flashdev/attention.h"
#include "flashdev/random.h"
#include "flashdev/sweeps.h"
#include "flashdev/trainer.h"

namespace flashdev {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigSyntaxError : public ConfigError {
 public:
  ConfigSyntaxError(size_t line, size_t column, const std::string& what);
  size_t line() const { return line_; }
  size_t column() const { return column_; }

 private:
  size_t line_;
  size_t column_;
};

class UnknownKeyError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Wrong type, unparseable name, or a value outside its allowed range.
class ConfigRangeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct ExperimentConfig {
  // Top level: shared attention base and run control.
  AttentionConfig attention;
  Distribution distribution = Distribution::kNormal;
  size_t seeds = 10;
  uint64_t seed_base = 0;
  int threads = 1;
  std::string out;  // empty: $FLASHDEV_OUT, then "."

  // [precision]
  std::vector<FloatFormat> precision_formats = {
      FloatFormat::BF16(), FloatFormat::FP16(), FloatFormat::FP32(),
      FloatFormat::FP64()};

  // [seqlen]; blocks come from the top-level attention geometry.
  std::vector<size_t> seqlen_points = {64, 128, 256, 512};

  // [blocks]
  std::vector<size_t> block_areas = {256, 1024, 4096, 16384, 65536};
  size_t block_base_sram_elems = 65536;
  std::vector<PerturbationKind> block_perturbations = {
      PerturbationKind::kNone, PerturbationKind::kSwapDims,
      PerturbationKind::kSquareOfEqualArea};
  std::vector<FloatFormat> block_formats = {
      FloatFormat::BF16(), FloatFormat::FP16(), FloatFormat::FP32(),
      FloatFormat::FP64()};

  // [train]; train.seed is overwritten by each base seed.
  TrainRunConfig train;
  size_t train_seeds = 5;
};

// Throws ConfigSyntaxError, UnknownKeyError or ConfigRangeError.
ExperimentConfig ParseConfig(std::string_view text);
// Reads and parses a file; an unreadable file throws std::ios_base::failure.
ExperimentConfig LoadConfig(const std::string& path);

// Canonical text form: every key, fixed order, shortest round-trip numbers.
// ParseConfig(FormatConfig(c)) reproduces c.
std::string FormatConfig(const ExperimentConfig& cfg);

// The config with execution-only keys (threads, out) reset to defaults. They
// cannot change any result, so outputs embed this form and its hash, which
// keeps files byte-identical across thread counts and output directories.
ExperimentConfig ExperimentIdentity(const ExperimentConfig& cfg);

// FNV-1a 64 of FormatConfig(ExperimentIdentity(cfg)), as 16 hex digits.
std::string ConfigHash(const ExperimentConfig& cfg);

// Sweep specs the CLI runs; `seeds` comes from cfg.seeds.
SweepSpec PrecisionSpec(const ExperimentConfig& cfg);
SweepSpec SeqLenSpec(const ExperimentConfig& cfg);
SweepSpec BlockSpec(const ExperimentConfig& cfg, PerturbationKind kind);

}  // namespace flashdev

#endif  // FLASHDEV_CONFIG_H_
