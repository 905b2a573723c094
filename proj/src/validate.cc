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

#include "flashdev/validate.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "flashdev/attention.h"
#include "flashdev/metrics.h"
#include "flashdev/random.h"
#include "flashdev/sweeps.h"
#include "flashdev/trainer.h"

namespace flashdev {
namespace {

bool SameBits(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return std::bit_cast<uint64_t>(a) == std::bit_cast<uint64_t>(b);
}

std::string Hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", x);
  return buf;
}

CheckResult QuantizeConformance(const ValidateOptions& opt) {
  const QuantizeFn q = opt.quantize
                           ? opt.quantize
                           : [](double x, const FloatFormat& f) { return Quantize(x, f); };
  struct Target {
    FloatFormat fmt;
    double (*oracle)(double);
  };
  const Target targets[] = {{FloatFormat::FP32(), SingleRoundTrip},
                            {FloatFormat::FP16(), HalfRoundTrip}};
  std::ostringstream detail;
  bool ok = true;
  for (const Target& t : targets) {
    size_t mismatches = 0;
    size_t idempotence = 0;
    size_t monotonicity = 0;
    double first_bad = 0;
    double prev_x = 0, prev_q = 0;
    for (size_t i = 0; i < opt.conformance_samples; ++i) {
      const double x = ConformanceSample(1, i, t.fmt);
      const double got = q(x, t.fmt);
      if (!SameBits(got, t.oracle(x))) {
        if (mismatches++ == 0) first_bad = x;
      }
      if (!SameBits(q(got, t.fmt), got)) ++idempotence;
      // Pairs of consecutive samples, ordered.
      if (i % 2 == 1 && !std::isnan(x) && !std::isnan(prev_x)) {
        const bool fwd = prev_x <= x;
        const double lo = fwd ? prev_q : got;
        const double hi = fwd ? got : prev_q;
        if (lo > hi) ++monotonicity;
      }
      prev_x = x;
      prev_q = got;
    }
    detail << t.fmt.name() << ": " << mismatches << " oracle mismatches";
    if (mismatches) detail << " (first at " << Hex(first_bad) << ")";
    detail << ", " << idempotence << " idempotence, " << monotonicity
           << " monotonicity violations over " << opt.conformance_samples
           << " samples; ";
    ok = ok && mismatches == 0 && idempotence == 0 && monotonicity == 0;
  }
  return {"quantize-conformance", ok, detail.str()};
}

CheckResult SingleTile(const ValidateOptions& opt) {
  std::ostringstream detail;
  bool ok = true;
  for (const FloatFormat& f : {FloatFormat::BF16(), FloatFormat::FP16(),
                               FloatFormat::FP32(), FloatFormat::FP64()}) {
    const SingleTileReport r =
        SingleTileReduction(opt.single_tile_configs, f, opt.accumulation);
    const bool pass = f.is_carrier() ? r.worst_abs <= 1e-12 : r.worst_ulps <= 2.0;
    ok = ok && pass;
    detail << f.name() << ": ";
    if (f.is_carrier()) {
      detail << "max abs " << r.worst_abs << " (<= 1e-12)";
    } else {
      detail << "worst " << r.worst_ulps << " ulp (<= 2)";
    }
    if (!pass) detail << " at " << r.worst_config;
    detail << "; ";
  }
  detail << AccumulationName(opt.accumulation) << " accumulation";
  return {"single-tile-reduction", ok, detail.str()};
}

CheckResult WassersteinOracle(const ValidateOptions&) {
  double worst = 0;
  size_t cases = 0;
  for (size_t n = 1; n <= 7; ++n) {
    for (uint64_t s = 0; s < 20; ++s) {
      std::vector<double> a(n), b(n);
      for (size_t i = 0; i < n; ++i) {
        a[i] = CounterDraw(s, 10 + n, i, Distribution::kNormal);
        b[i] = 3.0 * CounterDraw(s, 40 + n, i, Distribution::kUniform);
      }
      worst = std::max(worst, std::fabs(Wasserstein1D(a, b) -
                                        BruteForceWasserstein(a, b)));
      ++cases;
    }
  }
  std::ostringstream detail;
  detail << cases << " cases, max |sorted - brute force| = " << worst
         << " (<= 1e-12)";
  return {"wasserstein-oracle", worst <= 1e-12, detail.str()};
}

CheckResult GradientCheckSuite(const ValidateOptions&) {
  TaskSpec task;
  task.vocab = 8;
  task.seq_len = 6;
  task.head_dim = 8;
  task.classes = 3;
  task.batch = 3;
  double worst = 0;
  std::string where = "none";
  size_t checked = 0;
  for (uint64_t seed = 0; seed < 2; ++seed) {
    for (Variant v : {Variant::kBaseline, Variant::kFlash}) {
      task.data_seed = seed;
      const ToyModel model = InitModel(task, 100 + seed, FloatFormat::FP64());
      const GradientCheck g =
          CheckGradients(model, MakeBatch(task, seed), v, {2, 3});
      checked += g.checked;
      if (g.max_relative_error >= worst) {
        worst = g.max_relative_error;
        where = std::string(VariantName(v)) + " " + g.worst_tensor + "[" +
                std::to_string(g.worst_index) + "]";
      }
    }
  }
  std::ostringstream detail;
  detail << checked << " parameters, max relative error " << worst << " at "
         << where << " (< 1e-4)";
  return {"gradient-check", worst < 1e-4, detail.str()};
}

}  // namespace

double HalfRoundTrip(double x) {
  const uint64_t bits = std::bit_cast<uint64_t>(x);
  const bool neg = bits >> 63;
  const int biased = static_cast<int>((bits >> 52) & 0x7FF);
  const uint64_t frac = bits & ((uint64_t{1} << 52) - 1);
  const auto sign = [&](double v) { return neg ? -v : v; };
  if (biased == 0x7FF) return x;             // inf, nan
  if (biased == 0) return sign(0.0);         // far below half's range
  int e = biased - 1023;
  const uint64_t sig = (uint64_t{1} << 52) | frac;
  if (e >= 16) return sign(std::numeric_limits<double>::infinity());
  if (e < -25) return sign(0.0);
  // Keep 10 fraction bits for normals, fewer below 2^-14.
  const int shift = e >= -14 ? 42 : 42 + (-14 - e);
  uint64_t keep = sig >> shift;
  const uint64_t rem = sig & ((uint64_t{1} << shift) - 1);
  const uint64_t half = uint64_t{1} << (shift - 1);
  if (rem > half || (rem == half && (keep & 1))) ++keep;
  if (e >= -14) {
    if (keep == (uint64_t{1} << 11)) {
      keep >>= 1;
      ++e;
    }
    if (e > 15) return sign(std::numeric_limits<double>::infinity());
    return sign(std::ldexp(static_cast<double>(keep), e - 10));
  }
  return sign(std::ldexp(static_cast<double>(keep), -24));
}

double SingleRoundTrip(double x) {
  return static_cast<double>(static_cast<float>(x));
}

double ConformanceSample(uint64_t seed, uint64_t index, const FloatFormat& fmt) {
  const auto r = Philox4x32({static_cast<uint32_t>(index),
                             static_cast<uint32_t>(index >> 32), 0xC0F0u, 0},
                            {static_cast<uint32_t>(seed),
                             static_cast<uint32_t>(seed >> 32)});
  const int lo = std::max(fmt.emin() - fmt.mantissa_bits() - 3, -1022);
  const int hi = std::min(fmt.emax() + 2, 1023);
  const int e = lo + static_cast<int>(r[0] % static_cast<uint32_t>(hi - lo + 1));
  uint64_t frac = ((static_cast<uint64_t>(r[1]) << 32) | r[2]) &
                  ((uint64_t{1} << 52) - 1);
  if (r[3] % 8 == 0 && fmt.mantissa_bits() < 52) {
    // Exactly halfway between two format values, when the value is normal
    // in the format; subnormal ties are covered by the random draws.
    const int drop = 52 - fmt.mantissa_bits();
    frac = (frac >> drop << drop) | (uint64_t{1} << (drop - 1));
  }
  const uint64_t bits = (static_cast<uint64_t>(r[3] & 1) << 63) |
                        (static_cast<uint64_t>(e + 1023) << 52) | frac;
  return std::bit_cast<double>(bits);
}

double BruteForceWasserstein(std::span<const double> a,
                             std::span<const double> b) {
  if (a.size() != b.size() || a.empty() || a.size() > 10) {
    throw std::invalid_argument("brute-force W1 needs equal sizes in [1, 10]");
  }
  std::vector<size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0;
    for (size_t i = 0; i < a.size(); ++i) cost += std::fabs(a[i] - b[perm[i]]);
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.size());
}

SingleTileReport SingleTileReduction(size_t configs, const FloatFormat& fmt,
                                     Accumulation acc, uint64_t seed) {
  const FloatFormat fp64 = FloatFormat::FP64();
  SingleTileReport report;
  report.configs = configs;
  for (size_t c = 0; c < configs; ++c) {
    const auto r = Philox4x32({static_cast<uint32_t>(c), 0x511E, 0, 0},
                              {static_cast<uint32_t>(seed), 0x7113});
    const size_t n = 1 + r[0] % 64;
    const size_t d = 1 + r[1] % 64;
    const BlockGeometry geom{n + r[2] % 8, n + r[3] % 8};
    const AttentionInputs in = DrawInputs(n, d, seed * 1000 + c, Distribution::kNormal);
    const Matrix q = in.q.As(fmt);
    const Matrix k = in.k.As(fmt);
    const Matrix v = in.v.As(fmt);
    const Matrix base = BaselineAttention(q, k, v, fmt, acc);
    const Matrix flash = FlashAttention(
        q, k, v, fmt, geom, {.accumulation = acc, .column_block_order = {}});
    // Reduction magnitude from exact-input probabilities at FP64.
    const Matrix p = SoftmaxRows(
        Scale(MatmulTransposed(q, k, fp64, Accumulation::kCarrier),
              1.0 / std::sqrt(static_cast<double>(d)), fp64),
        fp64, Accumulation::kCarrier);
    for (size_t i = 0; i < n; ++i) {
      for (size_t x = 0; x < d; ++x) {
        const double diff = std::fabs(base(i, x) - flash(i, x));
        double mag = 0;
        for (size_t j = 0; j < n; ++j) mag += p(i, j) * std::fabs(v(j, x));
        const double ulps = diff / Ulp(mag, fmt);
        const bool worse = ulps > report.worst_ulps || std::isnan(diff);
        report.worst_abs = std::max(report.worst_abs, diff);
        if (worse) {
          report.worst_ulps = std::isnan(diff)
                                  ? std::numeric_limits<double>::infinity()
                                  : ulps;
          report.worst_config = "N=" + std::to_string(n) + " d=" +
                                std::to_string(d) + " Br=" +
                                std::to_string(geom.block_rows) + " Bc=" +
                                std::to_string(geom.block_cols) + " config " +
                                std::to_string(c);
        }
      }
    }
  }
  return report;
}

std::vector<std::string_view> ValidationCheckNames() {
  return {"quantize-conformance", "single-tile-reduction", "wasserstein-oracle",
          "gradient-check"};
}

CheckResult RunValidationCheck(std::string_view name,
                               const ValidateOptions& options) {
  if (name == "quantize-conformance") return QuantizeConformance(options);
  if (name == "single-tile-reduction") return SingleTile(options);
  if (name == "wasserstein-oracle") return WassersteinOracle(options);
  if (name == "gradient-check") return GradientCheckSuite(options);
  throw std::invalid_argument("unknown check \"" + std::string(name) + "\"");
}

std::vector<CheckResult> RunValidation(const ValidateOptions& options) {
  std::vector<CheckResult> out;
  for (std::string_view name : ValidationCheckNames()) {
    out.push_back(RunValidationCheck(name, options));
  }
  return out;
}

}  // namespace flashdev
