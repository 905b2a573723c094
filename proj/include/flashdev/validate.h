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

// Independent oracles and the fast self-check suite behind `validate`.

#ifndef FLASHDEV_VALIDATE_H_
#define FLASHDEV_VALIDATE_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flashdev/numerics.h"

namespace flashdev {

// --- Oracles -------------------------------------------------------------------

// Round-trip through IEEE binary16 with round-to-nearest-even, written with
// integer operations only (no shared code with Quantize).
double HalfRoundTrip(double x);
// Round-trip through the hardware float type.
double SingleRoundTrip(double x);

// Test doubles for format `fmt`: random sign, exponents spanning the
// subnormal range to just past overflow, random mantissas, and one in eight
// draws placed exactly on a rounding tie.
double ConformanceSample(uint64_t seed, uint64_t index, const FloatFormat& fmt);

// Minimum over all n! pairings of mean |a_i - b_pi(i)|; n <= 10.
double BruteForceWasserstein(std::span<const double> a,
                             std::span<const double> b);

// --- Single-tile reduction -----------------------------------------------------

struct SingleTileReport {
  size_t configs = 0;
  // max |flash - baseline| / ulp_fmt(sum_j P_ij |V_jk|) over all elements.
  double worst_ulps = 0;
  // max |flash - baseline|; the gate at FP64.
  double worst_abs = 0;
  std::string worst_config;
};

// Random (N, d, Br, Bc, seed) with N <= 64 and Br, Bc >= N, inputs quantized
// to fmt, both kernels run at fmt.
SingleTileReport SingleTileReduction(size_t configs, const FloatFormat& fmt,
                                     Accumulation acc, uint64_t seed = 0);

// --- Check suite -------------------------------------------------------------------

using QuantizeFn = std::function<double(double, const FloatFormat&)>;

struct ValidateOptions {
  QuantizeFn quantize;  // empty: flashdev::Quantize
  size_t conformance_samples = 200000;
  size_t single_tile_configs = 100;
  Accumulation accumulation = Accumulation::kPerOp;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// quantize-conformance, single-tile-reduction, wasserstein-oracle,
// gradient-check.
std::vector<std::string_view> ValidationCheckNames();

// Throws std::invalid_argument for an unknown name.
CheckResult RunValidationCheck(std::string_view name,
                               const ValidateOptions& options);
std::vector<CheckResult> RunValidation(const ValidateOptions& options);

}  // namespace flashdev

#endif  // FLASHDEV_VALIDATE_H_
