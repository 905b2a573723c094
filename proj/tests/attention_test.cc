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

#include "flashdev/attention.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gtest/gtest.h"
#include "flashdev/metrics.h"
#include "flashdev/sweeps.h"

namespace flashdev {
namespace {

const FloatFormat kBF16 = FloatFormat::BF16();
const FloatFormat kFP64 = FloatFormat::FP64();

FlashOptions Opts(Accumulation acc = Accumulation::kPerOp,
                  std::vector<size_t> order = {}) {
  return {.accumulation = acc, .column_block_order = std::move(order)};
}

// Two-pass softmax attention in long double, written independently of the
// library kernels.
std::vector<long double> ReferenceAttention(const Matrix& q, const Matrix& k,
                                            const Matrix& v) {
  const size_t n = q.rows(), d = q.cols();
  const long double scale = 1.0L / std::sqrt(static_cast<long double>(d));
  std::vector<long double> out(n * d, 0.0L);
  std::vector<long double> s(n);
  for (size_t i = 0; i < n; ++i) {
    long double m = -INFINITY;
    for (size_t j = 0; j < n; ++j) {
      long double dot = 0;
      for (size_t x = 0; x < d; ++x) {
        dot += static_cast<long double>(q(i, x)) * k(j, x);
      }
      s[j] = dot * scale;
      m = std::max(m, s[j]);
    }
    long double l = 0;
    for (size_t j = 0; j < n; ++j) l += (s[j] = std::exp(s[j] - m));
    for (size_t j = 0; j < n; ++j) {
      for (size_t x = 0; x < d; ++x) out[i * d + x] += s[j] / l * v(j, x);
    }
  }
  return out;
}

TEST(AttentionTest, ScalarInputReturnsValue) {
  const Matrix q = Matrix::FromValues(1, 1, {0.7}, kBF16);
  const Matrix k = Matrix::FromValues(1, 1, {-1.3}, kBF16);
  const Matrix v = Matrix::FromValues(1, 1, {2.5}, kBF16);
  EXPECT_EQ(BaselineAttention(q, k, v, kBF16)(0, 0), 2.5);
  EXPECT_EQ(FlashAttention(q, k, v, kBF16, {1, 1}, Opts())(0, 0), 2.5);
}

TEST(AttentionTest, IdenticalKeysAverageValues) {
  const size_t n = 9, d = 4;
  const Matrix q = RandomMatrix(n, d, 1, kFP64);
  const Matrix krow = RandomMatrix(1, d, 2, kFP64);
  std::vector<double> kv;
  for (size_t i = 0; i < n; ++i) kv.insert(kv.end(), krow.data().begin(), krow.data().end());
  const Matrix k = Matrix::FromValues(n, d, kv, kFP64);
  const Matrix v = RandomMatrix(n, d, 3, kFP64);
  for (const Matrix& o : {BaselineAttention(q, k, v, kFP64),
                          FlashAttention(q, k, v, kFP64, {2, 4}, Opts())}) {
    for (size_t x = 0; x < d; ++x) {
      double mean = 0;
      for (size_t j = 0; j < n; ++j) mean += v(j, x);
      mean /= n;
      for (size_t i = 0; i < n; ++i) EXPECT_NEAR(o(i, x), mean, 1e-14);
    }
  }
}

TEST(AttentionTest, Fp64MatchesExtendedPrecisionReference) {
  const AttentionInputs in = DrawInputs(64, 16, 17, Distribution::kNormal);
  const std::vector<long double> ref = ReferenceAttention(in.q, in.k, in.v);
  const Matrix base = BaselineAttention(in.q, in.k, in.v, kFP64);
  const Matrix flash = FlashAttention(in.q, in.k, in.v, kFP64, {8, 16}, Opts());
  for (size_t i = 0; i < ref.size(); ++i) {
    EXPECT_NEAR(base.data()[i], static_cast<double>(ref[i]), 1e-13);
    EXPECT_NEAR(flash.data()[i], static_cast<double>(ref[i]), 1e-13);
  }
}

TEST(AttentionTest, FlashMatchesBaselineAtFp64ForAnyGeometry) {
  for (size_t n : {1u, 7u, 64u, 200u, 256u}) {
    const AttentionInputs in = DrawInputs(n, 32, n, Distribution::kNormal);
    const Matrix base = BaselineAttention(in.q, in.k, in.v, kFP64);
    for (BlockGeometry g : {BlockGeometry{1, 1}, BlockGeometry{3, 5},
                            BlockGeometry{64, 16}, BlockGeometry{n, n}}) {
      const Matrix flash = FlashAttention(in.q, in.k, in.v, kFP64, g, Opts());
      EXPECT_LE(MaxDifference(base, flash), 1e-12)
          << "N=" << n << " Br=" << g.block_rows << " Bc=" << g.block_cols;
    }
  }
}

TEST(AttentionTest, OutputRowsInValueBoundingBoxAtFp64) {
  const AttentionInputs in = DrawInputs(40, 8, 5, Distribution::kUniform);
  const Matrix o = FlashAttention(in.q, in.k, in.v, kFP64, {4, 6}, Opts());
  for (size_t x = 0; x < 8; ++x) {
    double lo = INFINITY, hi = -INFINITY;
    for (size_t j = 0; j < 40; ++j) {
      lo = std::min(lo, in.v(j, x));
      hi = std::max(hi, in.v(j, x));
    }
    for (size_t i = 0; i < 40; ++i) {
      EXPECT_GE(o(i, x), lo - 1e-12);
      EXPECT_LE(o(i, x), hi + 1e-12);
    }
  }
}

TEST(AttentionTest, ColumnBlockOrderOnlyChangesRounding) {
  const AttentionInputs in = DrawInputs(50, 8, 8, Distribution::kNormal);
  const BlockGeometry g{5, 7};  // 8 column blocks, ragged tail
  const Matrix ascending = FlashAttention(in.q, in.k, in.v, kFP64, g, Opts());
  std::vector<size_t> order(8);
  std::iota(order.begin(), order.end(), 0);
  for (int r = 0; r < 5; ++r) {
    std::rotate(order.begin(), order.begin() + 3, order.end());
    std::swap(order[1], order[6]);
    const Matrix permuted = FlashAttention(in.q, in.k, in.v, kFP64, g,
                                           Opts(Accumulation::kPerOp, order));
    EXPECT_LE(MaxDifference(ascending, permuted), 1e-12);
  }
  EXPECT_THROW(FlashAttention(in.q, in.k, in.v, kFP64, g,
                              Opts(Accumulation::kPerOp, {0, 1, 2})),
               std::invalid_argument);
  EXPECT_THROW(FlashAttention(in.q, in.k, in.v, kFP64, g,
                              Opts(Accumulation::kPerOp, {0, 0, 1, 2, 3, 4, 5, 6})),
               std::invalid_argument);
}

TEST(AttentionTest, FlashRowsDependOnlyOnColumnBlocking) {
  const AttentionInputs in = DrawInputs(48, 16, 2, Distribution::kNormal);
  const Matrix q = in.q.As(kBF16), k = in.k.As(kBF16), v = in.v.As(kBF16);
  const Matrix a = FlashAttention(q, k, v, kBF16, {4, 12}, Opts());
  const Matrix b = FlashAttention(q, k, v, kBF16, {48, 12}, Opts());
  EXPECT_TRUE(a.BitEqual(b));
}

TEST(AttentionTest, OutputsAreRepresentable) {
  const AttentionInputs in = DrawInputs(33, 8, 4, Distribution::kNormal);
  const Matrix q = in.q.As(kBF16), k = in.k.As(kBF16), v = in.v.As(kBF16);
  const Matrix o = FlashAttention(q, k, v, kBF16, {4, 4}, Opts());
  for (double x : o.data()) {
    EXPECT_TRUE(IsRepresentable(x, kBF16));
  }
}

TEST(AttentionTest, RejectsBadShapes) {
  const Matrix q = RandomMatrix(4, 3, 1, kFP64);
  const Matrix k5 = RandomMatrix(5, 3, 2, kFP64);
  EXPECT_THROW(BaselineAttention(q, k5, q, kFP64), std::invalid_argument);
  EXPECT_THROW(FlashAttention(q, q, q, kFP64, {0, 2}, Opts()),
               std::invalid_argument);
}

TEST(AttentionTest, RunAttentionDispatches) {
  const AttentionInputs in = DrawInputs(16, 8, 3, Distribution::kNormal);
  AttentionConfig cfg;
  cfg.seq_len = 16;
  cfg.head_dim = 8;
  cfg.format = kFP64;
  cfg.block_rows = 4;
  cfg.block_cols = 4;
  cfg.variant = Variant::kBaseline;
  EXPECT_TRUE(RunAttention(cfg, in.q, in.k, in.v)
                  .BitEqual(BaselineAttention(in.q, in.k, in.v, kFP64)));
  cfg.variant = Variant::kFlash;
  EXPECT_TRUE(RunAttention(cfg, in.q, in.k, in.v)
                  .BitEqual(FlashAttention(in.q, in.k, in.v, kFP64, {4, 4}, Opts())));
  EXPECT_DOUBLE_EQ(cfg.scale(), 1.0 / std::sqrt(8.0));
}

TEST(BlockGeometryTest, DefaultFormula) {
  EXPECT_EQ(DefaultBlockGeometry(1024, 64), (BlockGeometry{4, 4}));
  EXPECT_EQ(DefaultBlockGeometry(4096, 16), (BlockGeometry{16, 64}));
  EXPECT_EQ(DefaultBlockGeometry(100, 25), (BlockGeometry{1, 1}));
  EXPECT_EQ(DefaultBlockGeometry(16384, 64), (BlockGeometry{64, 64}));
  EXPECT_EQ(DefaultBlockGeometry(65536, 64), (BlockGeometry{64, 256}));
  EXPECT_THROW(DefaultBlockGeometry(255, 64), std::invalid_argument);
}

TEST(BlockGeometryTest, Perturbations) {
  using K = PerturbationKind;
  EXPECT_EQ(PerturbGeometry({4, 64}, {K::kSwapDims, 1}), (BlockGeometry{64, 4}));
  EXPECT_EQ(PerturbGeometry({4, 64}, {K::kSquareOfEqualArea, 1}),
            (BlockGeometry{16, 16}));
  EXPECT_EQ(PerturbGeometry({8, 8}, {K::kScaleArea, 4}), (BlockGeometry{16, 16}));
  EXPECT_EQ(PerturbGeometry({8, 8}, {K::kNone, 1}), (BlockGeometry{8, 8}));
  EXPECT_EQ(ParsePerturbation("swap_dims"), K::kSwapDims);
  EXPECT_EQ(PerturbationName(K::kSquareOfEqualArea), "square_of_equal_area");
  EXPECT_THROW(ParsePerturbation("rotate"), std::invalid_argument);
}

TEST(BlockGeometryTest, ClampFlagsOversizedBlocks) {
  const ClampedGeometry c = ClampGeometry({128, 16}, 64);
  EXPECT_EQ(c.geometry, (BlockGeometry{64, 16}));
  EXPECT_TRUE(c.clamped);
  EXPECT_FALSE(ClampGeometry({64, 16}, 64).clamped);
}

TEST(VariantTest, Names) {
  EXPECT_EQ(ParseVariant("flash"), Variant::kFlash);
  EXPECT_EQ(VariantName(Variant::kBaseline), "baseline");
  EXPECT_THROW(ParseVariant("paged"), std::invalid_argument);
}

}  // namespace
}  // namespace flashdev
