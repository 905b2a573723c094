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

#include "flashdev/sweeps.h"

#include <optional>

#include "flashdev/parallel.h"

namespace flashdev {
namespace {

std::string PointContext(SweepAxis axis, const std::string& value,
                         uint64_t seed) {
  return "axis=" + std::string(AxisName(axis)) + " value=" + value +
         " seed=" + std::to_string(seed);
}

// Evaluates `fn`, re-raising any failure with the axis point attached.
template <typename Fn>
auto WithContext(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw SweepError(where + ": " + e.what());
  }
}

// The three rows every point reports.
struct PointOutputs {
  SweepRow baseline_golden;
  SweepRow flash_golden;
  SweepRow flash_paired;
};

PointOutputs ComparePoint(SweepAxis axis, const std::string& value,
                          uint64_t seed, const FloatFormat& fmt,
                          const ClampedGeometry& geom, const Matrix& golden,
                          const Matrix& baseline, const Matrix& flash) {
  const std::string where = PointContext(axis, value, seed) +
                            " format=" + fmt.name();
  SweepRow base_row{.value = value,
                    .seed = seed,
                    .variant = Variant::kBaseline,
                    .format = fmt,
                    .geometry = geom.geometry,
                    .vs = Reference::kGolden,
                    .report = GoldenDeviation(baseline, golden,
                                              where + " variant=baseline vs=golden"),
                    .clamped = geom.clamped};
  SweepRow flash_row = base_row;
  flash_row.variant = Variant::kFlash;
  flash_row.report =
      GoldenDeviation(flash, golden, where + " variant=flash vs=golden");
  SweepRow paired_row = flash_row;
  paired_row.vs = Reference::kPaired;
  paired_row.report =
      CompareOutputs(flash, baseline, where + " variant=flash vs=paired");
  return {std::move(base_row), std::move(flash_row), std::move(paired_row)};
}

void Append(std::vector<SweepRow>& rows, PointOutputs&& p) {
  rows.push_back(std::move(p.baseline_golden));
  rows.push_back(std::move(p.flash_golden));
  rows.push_back(std::move(p.flash_paired));
}

SweepResult EmptyResult(const SweepSpec& spec) {
  return {.axis = spec.axis,
          .perturbation = spec.perturbation,
          .distribution = spec.distribution,
          .accumulation = spec.base.accumulation,
          .rows = {}};
}

Matrix Golden(const AttentionInputs& in) {
  return BaselineAttention(in.q, in.k, in.v, FloatFormat::FP64());
}

}  // namespace

std::string_view AxisName(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kPrecision:
      return "precision";
    case SweepAxis::kSeqLen:
      return "seq_len";
    case SweepAxis::kBlockArea:
      return "block_area";
  }
  return "?";
}

std::string_view ReferenceName(Reference ref) {
  return ref == Reference::kGolden ? "golden" : "paired";
}

std::vector<uint64_t> SeedRange(uint64_t base, size_t count) {
  std::vector<uint64_t> seeds(count);
  for (size_t i = 0; i < count; ++i) seeds[i] = base + i;
  return seeds;
}

AttentionInputs DrawInputs(size_t seq_len, size_t head_dim, uint64_t seed,
                           Distribution dist) {
  const FloatFormat fp64 = FloatFormat::FP64();
  return {RandomMatrix(seq_len, head_dim, seed, fp64, dist, 0),
          RandomMatrix(seq_len, head_dim, seed, fp64, dist, 1),
          RandomMatrix(seq_len, head_dim, seed, fp64, dist, 2)};
}

void ValidateSweepSpec(const SweepSpec& spec) {
  if (spec.seeds.empty()) {
    throw std::invalid_argument("sweep needs at least one seed");
  }
  if (spec.base.head_dim == 0) {
    throw std::invalid_argument("head_dim must be >= 1");
  }
  if (spec.axis == SweepAxis::kPrecision || spec.axis == SweepAxis::kBlockArea) {
    if (spec.formats.empty()) {
      throw std::invalid_argument("sweep needs at least one format");
    }
  }
  if (spec.axis == SweepAxis::kPrecision) {
    for (size_t i = 1; i < spec.formats.size(); ++i) {
      if (spec.formats[i].mantissa_bits() <= spec.formats[i - 1].mantissa_bits()) {
        throw std::invalid_argument(
            "precision sweep formats must be strictly ordered by mantissa "
            "bits");
      }
    }
    if (spec.base.seq_len == 0) {
      throw std::invalid_argument("seq_len must be >= 1");
    }
    return;
  }
  if (spec.points.empty()) {
    throw std::invalid_argument("sweep needs at least one axis value");
  }
  for (size_t i = 0; i < spec.points.size(); ++i) {
    if (spec.points[i] == 0) {
      throw std::invalid_argument(std::string(AxisName(spec.axis)) +
                                  " values must be >= 1");
    }
    if (i > 0 && spec.points[i] <= spec.points[i - 1]) {
      throw std::invalid_argument(std::string(AxisName(spec.axis)) +
                                  " values must be strictly increasing");
    }
  }
  if (spec.axis == SweepAxis::kBlockArea && spec.base.seq_len == 0) {
    throw std::invalid_argument("seq_len must be >= 1");
  }
}

SweepResult RunPrecisionSweep(const SweepSpec& spec) {
  if (spec.axis != SweepAxis::kPrecision) {
    throw std::invalid_argument("RunPrecisionSweep needs axis = precision");
  }
  ValidateSweepSpec(spec);
  const size_t n_seeds = spec.seeds.size();
  const size_t n = spec.base.seq_len;
  const size_t d = spec.base.head_dim;
  const ClampedGeometry geom = ClampGeometry(spec.base.geometry(), n);

  std::vector<std::optional<AttentionInputs>> inputs(n_seeds);
  std::vector<std::optional<Matrix>> goldens(n_seeds);
  ParallelFor(n_seeds, spec.threads, [&](size_t s) {
    inputs[s] = DrawInputs(n, d, spec.seeds[s], spec.distribution);
    goldens[s] = Golden(*inputs[s]);
  });

  const size_t n_formats = spec.formats.size();
  std::vector<std::optional<PointOutputs>> points(n_formats * n_seeds);
  ParallelFor(points.size(), spec.threads, [&](size_t task) {
    const size_t f = task / n_seeds;
    const size_t s = task % n_seeds;
    const FloatFormat& fmt = spec.formats[f];
    const AttentionInputs& in = *inputs[s];
    const std::string where =
        PointContext(spec.axis, fmt.name(), spec.seeds[s]);
    points[task] = WithContext(where, [&] {
      const Matrix q = in.q.As(fmt);
      const Matrix k = in.k.As(fmt);
      const Matrix v = in.v.As(fmt);
      const Matrix base = BaselineAttention(q, k, v, fmt, spec.base.accumulation);
      const Matrix flash = FlashAttention(
          q, k, v, fmt, geom.geometry, {.accumulation = spec.base.accumulation, .column_block_order = {}});
      return ComparePoint(spec.axis, fmt.name(), spec.seeds[s], fmt, geom,
                          *goldens[s], base, flash);
    });
  });

  SweepResult result = EmptyResult(spec);
  for (auto& p : points) Append(result.rows, std::move(*p));
  return result;
}

SweepResult RunSeqLenSweep(const SweepSpec& spec) {
  if (spec.axis != SweepAxis::kSeqLen) {
    throw std::invalid_argument("RunSeqLenSweep needs axis = seq_len");
  }
  ValidateSweepSpec(spec);
  const size_t n_seeds = spec.seeds.size();
  const size_t d = spec.base.head_dim;
  const FloatFormat& fmt = spec.base.format;
  const BlockGeometry requested = spec.base.geometry();

  std::vector<std::optional<PointOutputs>> points(spec.points.size() * n_seeds);
  ParallelFor(points.size(), spec.threads, [&](size_t task) {
    const size_t n = spec.points[task / n_seeds];
    const uint64_t seed = spec.seeds[task % n_seeds];
    const std::string value = std::to_string(n);
    points[task] = WithContext(PointContext(spec.axis, value, seed), [&] {
      const AttentionInputs in = DrawInputs(n, d, seed, spec.distribution);
      const Matrix golden = Golden(in);
      const Matrix q = in.q.As(fmt);
      const Matrix k = in.k.As(fmt);
      const Matrix v = in.v.As(fmt);
      const ClampedGeometry geom = ClampGeometry(requested, n);
      const Matrix base = BaselineAttention(q, k, v, fmt, spec.base.accumulation);
      const Matrix flash = FlashAttention(
          q, k, v, fmt, geom.geometry, {.accumulation = spec.base.accumulation, .column_block_order = {}});
      return ComparePoint(spec.axis, value, seed, fmt, geom, golden, base,
                          flash);
    });
  });

  SweepResult result = EmptyResult(spec);
  for (auto& p : points) Append(result.rows, std::move(*p));
  return result;
}

SweepResult RunBlockSweep(const SweepSpec& spec) {
  if (spec.axis != SweepAxis::kBlockArea) {
    throw std::invalid_argument("RunBlockSweep needs axis = block_area");
  }
  if (spec.perturbation == PerturbationKind::kScaleArea) {
    throw std::invalid_argument(
        "block sweep perturbation must be none, swap_dims or "
        "square_of_equal_area");
  }
  ValidateSweepSpec(spec);
  const size_t n_seeds = spec.seeds.size();
  const size_t n_formats = spec.formats.size();
  const size_t n = spec.base.seq_len;
  const size_t d = spec.base.head_dim;
  const BlockGeometry base_geom = spec.base.geometry();

  // Inputs, golden and baseline depend only on (seed, format).
  struct Cached {
    Matrix q, k, v, baseline;
  };
  std::vector<std::optional<AttentionInputs>> inputs(n_seeds);
  std::vector<std::optional<Matrix>> goldens(n_seeds);
  ParallelFor(n_seeds, spec.threads, [&](size_t s) {
    inputs[s] = DrawInputs(n, d, spec.seeds[s], spec.distribution);
    goldens[s] = Golden(*inputs[s]);
  });
  std::vector<std::optional<Cached>> cache(n_seeds * n_formats);
  ParallelFor(cache.size(), spec.threads, [&](size_t task) {
    const FloatFormat& fmt = spec.formats[task % n_formats];
    const AttentionInputs& in = *inputs[task / n_formats];
    Matrix q = in.q.As(fmt);
    Matrix k = in.k.As(fmt);
    Matrix v = in.v.As(fmt);
    Matrix base = BaselineAttention(q, k, v, fmt, spec.base.accumulation);
    cache[task] = Cached{std::move(q), std::move(k), std::move(v),
                         std::move(base)};
  });

  // Task order: (area, seed, format).
  const size_t per_area = n_seeds * n_formats;
  std::vector<std::optional<PointOutputs>> points(spec.points.size() * per_area);
  ParallelFor(points.size(), spec.threads, [&](size_t task) {
    const size_t area = spec.points[task / per_area];
    const size_t s = (task % per_area) / n_formats;
    const size_t f = task % n_formats;
    const FloatFormat& fmt = spec.formats[f];
    const Cached& c = *cache[s * n_formats + f];
    const std::string value = std::to_string(area);
    points[task] =
        WithContext(PointContext(spec.axis, value, spec.seeds[s]), [&] {
          const double factor = static_cast<double>(area) /
                                static_cast<double>(base_geom.area());
          BlockGeometry g = PerturbGeometry(
              base_geom, {.kind = PerturbationKind::kScaleArea, .factor = factor});
          g = PerturbGeometry(g, {.kind = spec.perturbation});
          const ClampedGeometry geom = ClampGeometry(g, n);
          const Matrix flash =
              FlashAttention(c.q, c.k, c.v, fmt, geom.geometry,
                             {.accumulation = spec.base.accumulation, .column_block_order = {}});
          return ComparePoint(spec.axis, value, spec.seeds[s], fmt, geom,
                              *goldens[s], c.baseline, flash);
        });
  });

  SweepResult result = EmptyResult(spec);
  for (auto& p : points) Append(result.rows, std::move(*p));
  return result;
}

SweepResult RunSweep(const SweepSpec& spec) {
  switch (spec.axis) {
    case SweepAxis::kPrecision:
      return RunPrecisionSweep(spec);
    case SweepAxis::kSeqLen:
      return RunSeqLenSweep(spec);
    case SweepAxis::kBlockArea:
      return RunBlockSweep(spec);
  }
  throw std::invalid_argument("unknown sweep axis");
}

}  // namespace flashdev
