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

// Microbenchmark sweeps over identical inputs: number format, sequence
// length, and tile geometry. Each axis point and seed yields three rows:
// baseline vs golden, flash vs golden, and flash vs baseline ("paired"),
// where golden is baseline attention at FP64 on the unquantized draw.

#ifndef FLASHDEV_SWEEPS_H_
#define FLASHDEV_SWEEPS_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flashdev/attention.h"
#include "flashdev/metrics.h"
#include "flashdev/random.h"

namespace flashdev {

enum class SweepAxis { kPrecision, kSeqLen, kBlockArea };
std::string_view AxisName(SweepAxis axis);

enum class Reference { kGolden, kPaired };
std::string_view ReferenceName(Reference ref);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kPrecision;
  // kPrecision: the axis values. kBlockArea: formats evaluated at every
  // area. Unused by kSeqLen, which runs at base.format.
  std::vector<FloatFormat> formats;
  // kSeqLen: sequence lengths. kBlockArea: target tile areas Br * Bc.
  std::vector<size_t> points;
  AttentionConfig base;
  std::vector<uint64_t> seeds;
  PerturbationKind perturbation = PerturbationKind::kNone;  // kBlockArea only
  Distribution distribution = Distribution::kNormal;
  int threads = 1;
};

struct SweepRow {
  std::string value;  // axis value as printed: format name or integer
  uint64_t seed = 0;
  Variant variant = Variant::kFlash;
  FloatFormat format = FloatFormat::FP64();
  BlockGeometry geometry;
  Reference vs = Reference::kGolden;
  DeviationReport report;
  bool clamped = false;  // requested geometry exceeded N
};

struct SweepResult {
  SweepAxis axis = SweepAxis::kPrecision;
  PerturbationKind perturbation = PerturbationKind::kNone;
  Distribution distribution = Distribution::kNormal;
  Accumulation accumulation = Accumulation::kPerOp;
  std::vector<SweepRow> rows;
};

// Kernel failure at a specific axis point.
class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws std::invalid_argument if the spec is malformed for its axis:
// empty or non-increasing values, no seeds, zero sequence length.
void ValidateSweepSpec(const SweepSpec& spec);

SweepResult RunPrecisionSweep(const SweepSpec& spec);
SweepResult RunSeqLenSweep(const SweepSpec& spec);
SweepResult RunBlockSweep(const SweepSpec& spec);
SweepResult RunSweep(const SweepSpec& spec);  // dispatch on spec.axis

// Inputs shared by every format at one seed: three independent streams of
// the carrier-precision draw.
struct AttentionInputs {
  Matrix q, k, v;
};
AttentionInputs DrawInputs(size_t seq_len, size_t head_dim, uint64_t seed,
                           Distribution dist);

// Seeds base, base + 1, ..., base + count - 1.
std::vector<uint64_t> SeedRange(uint64_t base, size_t count);

}  // namespace flashdev

#endif  // FLASHDEV_SWEEPS_H_
