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

// Deviation metrics. Everything here is computed in the 64-bit carrier,
// whatever format the inputs were produced at.

#ifndef FLASHDEV_METRICS_H_
#define FLASHDEV_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "flashdev/matrix.h"

namespace flashdev {

// max |a - b| over all elements; 0 for identical matrices, NaN if any
// element of either input is NaN. Throws std::invalid_argument on a shape
// mismatch.
double MaxDifference(const Matrix& a, const Matrix& b);
double MaxDifference(std::span<const double> a, std::span<const double> b);

struct DiffStats {
  double mean = 0;  // mean of a - b (signed)
  double std = 0;   // population standard deviation of a - b
};
DiffStats ComputeDiffStats(const Matrix& a, const Matrix& b);

// 1-D Wasserstein-1 distance between the empirical distributions of xs and
// ys. Equal sizes reduce to the mean absolute difference of sorted samples;
// otherwise the integral of |F_x - F_y| over the merged support. Throws
// std::invalid_argument if either sample is empty.
double Wasserstein1D(std::span<const double> xs, std::span<const double> ys);

struct DeviationReport {
  double max_abs_diff = 0;
  double mean_diff = 0;
  double std_diff = 0;
  size_t n_elements = 0;
  bool nan_poisoned = false;  // some element compared was NaN
  std::string context;
};

DeviationReport CompareOutputs(const Matrix& output, const Matrix& reference,
                               std::string context = {});
// `golden` is baseline attention at FP64 on the same inputs.
inline DeviationReport GoldenDeviation(const Matrix& output,
                                       const Matrix& golden,
                                       std::string context = {}) {
  return CompareOutputs(output, golden, std::move(context));
}

// Median and quartiles with linear interpolation between order statistics.
struct Quartiles {
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double iqr() const { return q3 - q1; }
};
Quartiles ComputeQuartiles(std::vector<double> xs);
double Median(std::vector<double> xs);

}  // namespace flashdev

#endif  // FLASHDEV_METRICS_H_
