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

#include "flashdev/metrics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flashdev {
namespace {

void CheckSameShape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(
        "metric inputs differ in shape: " + std::to_string(a.rows()) + "x" +
        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
        std::to_string(b.cols()));
  }
}

}  // namespace

double MaxDifference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("MaxDifference: size mismatch");
  }
  double best = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double diff = std::fabs(a[i] - b[i]);
    if (std::isnan(diff)) return diff;
    best = std::max(best, diff);
  }
  return best;
}

double MaxDifference(const Matrix& a, const Matrix& b) {
  CheckSameShape(a, b);
  return MaxDifference(a.data(), b.data());
}

// Welford's update.
DiffStats ComputeDiffStats(const Matrix& a, const Matrix& b) {
  CheckSameShape(a, b);
  const auto x = a.data();
  const auto y = b.data();
  double mean = 0;
  double m2 = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    const double delta = d - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (d - mean);
  }
  return {.mean = mean,
          .std = std::sqrt(std::max(0.0, m2 / static_cast<double>(x.size())))};
}

double Wasserstein1D(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) {
    throw std::invalid_argument("Wasserstein1D: samples must be nonempty");
  }
  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  if (a.size() == b.size()) {
    double total = 0;
    for (size_t i = 0; i < a.size(); ++i) total += std::fabs(a[i] - b[i]);
    return total / static_cast<double>(a.size());
  }

  // Sweep the merged breakpoints; between consecutive breakpoints both CDFs
  // are constant.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  size_t i = 0;
  size_t j = 0;
  double total = 0;
  double prev = std::min(a[0], b[0]);
  while (i < a.size() || j < b.size()) {
    double next;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j])) {
      next = a[i];
    } else {
      next = b[j];
    }
    total += std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb) *
             (next - prev);
    while (i < a.size() && a[i] == next) ++i;
    while (j < b.size() && b[j] == next) ++j;
    prev = next;
  }
  return total;
}

DeviationReport CompareOutputs(const Matrix& output, const Matrix& reference,
                               std::string context) {
  DeviationReport r;
  r.max_abs_diff = MaxDifference(output, reference);
  const DiffStats s = ComputeDiffStats(output, reference);
  r.mean_diff = s.mean;
  r.std_diff = s.std;
  r.n_elements = output.size();
  r.nan_poisoned = std::isnan(r.max_abs_diff);
  r.context = std::move(context);
  return r;
}

Quartiles ComputeQuartiles(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("quartiles of empty sample");
  std::sort(xs.begin(), xs.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(xs.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
  };
  return {.q1 = at(0.25), .median = at(0.5), .q3 = at(0.75)};
}

double Median(std::vector<double> xs) {
  return ComputeQuartiles(std::move(xs)).median;
}

}  // namespace flashdev
