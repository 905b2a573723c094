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

// Baseline (materialized) and Flash (tiled, online-softmax) attention over
// emulated arithmetic. No masking, no dropout, single head.

#ifndef FLASHDEV_ATTENTION_H_
#define FLASHDEV_ATTENTION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "flashdev/matrix.h"
#include "flashdev/numerics.h"

namespace flashdev {

enum class Variant { kBaseline, kFlash };

std::string_view VariantName(Variant v);
Variant ParseVariant(std::string_view name);

// Tile shape: block_rows query rows by block_cols key/value rows.
struct BlockGeometry {
  size_t block_rows = 1;
  size_t block_cols = 1;

  size_t area() const { return block_rows * block_cols; }
  friend bool operator==(const BlockGeometry&, const BlockGeometry&) = default;
};

// Bc = ceil(M / 4d), Br = min(ceil(M / 4d), d) for an on-chip buffer of M
// elements. Throws std::invalid_argument if M < 4d.
BlockGeometry DefaultBlockGeometry(size_t sram_elems, size_t head_dim);

enum class PerturbationKind { kNone, kSwapDims, kSquareOfEqualArea, kScaleArea };

struct Perturbation {
  PerturbationKind kind = PerturbationKind::kNone;
  double factor = 1.0;  // kScaleArea only
};

std::string_view PerturbationName(PerturbationKind kind);
PerturbationKind ParsePerturbation(std::string_view name);

// kSwapDims exchanges the two values; kSquareOfEqualArea gives a square of
// side round(sqrt(Br * Bc)); kScaleArea multiplies both sides by
// sqrt(factor) and rounds. Every side is at least 1.
BlockGeometry PerturbGeometry(const BlockGeometry& geom, Perturbation p);

struct ClampedGeometry {
  BlockGeometry geometry;
  bool clamped = false;
};
// Clamp both sides into [1, seq_len].
ClampedGeometry ClampGeometry(const BlockGeometry& geom, size_t seq_len);

struct AttentionConfig {
  size_t seq_len = 512;
  size_t head_dim = 64;
  FloatFormat format = FloatFormat::BF16();
  Variant variant = Variant::kFlash;
  // Zero block sides mean "derive from sram_elems".
  size_t block_rows = 0;
  size_t block_cols = 0;
  size_t sram_elems = 16384;
  Accumulation accumulation = Accumulation::kPerOp;

  double scale() const;  // 1 / sqrt(head_dim), recomputed on every call
  BlockGeometry geometry() const;
};

// Order in which a flash kernel visits column blocks; empty means ascending.
struct FlashOptions {
  Accumulation accumulation = Accumulation::kPerOp;
  std::vector<size_t> column_block_order;
};

// softmax(Q K^T / sqrt(d)) V with the N x N score matrix materialized. The
// scale multiplies S after the product, each multiply rounded.
Matrix BaselineAttention(const Matrix& q, const Matrix& k, const Matrix& v,
                         const FloatFormat& fmt,
                         Accumulation acc = Accumulation::kPerOp);

// Tiled attention with running (max, denominator, output) per query row.
// Block sides larger than N behave as N; ragged tail blocks are processed at
// their natural size. Throws std::invalid_argument on shape mismatch, a zero
// block side, or a malformed column_block_order.
Matrix FlashAttention(const Matrix& q, const Matrix& k, const Matrix& v,
                      const FloatFormat& fmt, const BlockGeometry& geom,
                      const FlashOptions& options = {});

// Dispatch on cfg.variant. Inputs are used as given (not requantized).
Matrix RunAttention(const AttentionConfig& cfg, const Matrix& q,
                    const Matrix& k, const Matrix& v);

}  // namespace flashdev

#endif  // FLASHDEV_ATTENTION_H_
