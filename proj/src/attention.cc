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
#include <limits>
#include <stdexcept>
#include <string>

namespace flashdev {
namespace {

void CheckQkv(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (q.cols() != k.cols() || k.rows() != v.rows() || q.rows() != k.rows() ||
      v.cols() != q.cols()) {
    throw std::invalid_argument(
        "attention expects Q, K, V of identical shape N x d, got " +
        std::to_string(q.rows()) + "x" + std::to_string(q.cols()) + ", " +
        std::to_string(k.rows()) + "x" + std::to_string(k.cols()) + ", " +
        std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
  }
}

size_t CeilDiv(size_t a, size_t b) { return (a + b - 1) / b; }

size_t RoundSide(double x) {
  return std::max<size_t>(1, static_cast<size_t>(std::llround(x)));
}

}  // namespace

std::string_view VariantName(Variant v) {
  return v == Variant::kBaseline ? "baseline" : "flash";
}

Variant ParseVariant(std::string_view name) {
  if (name == "baseline") return Variant::kBaseline;
  if (name == "flash") return Variant::kFlash;
  throw std::invalid_argument("unknown attention variant \"" +
                              std::string(name) + "\"");
}

BlockGeometry DefaultBlockGeometry(size_t sram_elems, size_t head_dim) {
  if (head_dim == 0 || sram_elems < 4 * head_dim) {
    throw std::invalid_argument(
        "sram_elems must be at least 4 * head_dim (got M=" +
        std::to_string(sram_elems) + ", d=" + std::to_string(head_dim) + ")");
  }
  const size_t bc = CeilDiv(sram_elems, 4 * head_dim);
  return {.block_rows = std::min(bc, head_dim), .block_cols = bc};
}

std::string_view PerturbationName(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kNone:
      return "none";
    case PerturbationKind::kSwapDims:
      return "swap_dims";
    case PerturbationKind::kSquareOfEqualArea:
      return "square_of_equal_area";
    case PerturbationKind::kScaleArea:
      return "scale_area";
  }
  return "?";
}

PerturbationKind ParsePerturbation(std::string_view name) {
  for (auto k : {PerturbationKind::kNone, PerturbationKind::kSwapDims,
                 PerturbationKind::kSquareOfEqualArea,
                 PerturbationKind::kScaleArea}) {
    if (PerturbationName(k) == name) return k;
  }
  throw std::invalid_argument("unknown geometry perturbation \"" +
                              std::string(name) + "\"");
}

BlockGeometry PerturbGeometry(const BlockGeometry& geom, Perturbation p) {
  switch (p.kind) {
    case PerturbationKind::kNone:
      return geom;
    case PerturbationKind::kSwapDims:
      return {.block_rows = geom.block_cols, .block_cols = geom.block_rows};
    case PerturbationKind::kSquareOfEqualArea: {
      const size_t side = RoundSide(std::sqrt(static_cast<double>(geom.area())));
      return {.block_rows = side, .block_cols = side};
    }
    case PerturbationKind::kScaleArea: {
      const double s = std::sqrt(p.factor);
      return {.block_rows = RoundSide(s * static_cast<double>(geom.block_rows)),
              .block_cols = RoundSide(s * static_cast<double>(geom.block_cols))};
    }
  }
  return geom;
}

ClampedGeometry ClampGeometry(const BlockGeometry& geom, size_t seq_len) {
  ClampedGeometry out{geom, false};
  auto clamp = [&](size_t& side) {
    const size_t c = std::clamp<size_t>(side, 1, std::max<size_t>(seq_len, 1));
    if (c != side) out.clamped = true;
    side = c;
  };
  clamp(out.geometry.block_rows);
  clamp(out.geometry.block_cols);
  return out;
}

double AttentionConfig::scale() const {
  return 1.0 / std::sqrt(static_cast<double>(head_dim));
}

BlockGeometry AttentionConfig::geometry() const {
  if (block_rows != 0 && block_cols != 0) {
    return {.block_rows = block_rows, .block_cols = block_cols};
  }
  BlockGeometry g = DefaultBlockGeometry(sram_elems, head_dim);
  if (block_rows != 0) g.block_rows = block_rows;
  if (block_cols != 0) g.block_cols = block_cols;
  return g;
}

Matrix BaselineAttention(const Matrix& q, const Matrix& k, const Matrix& v,
                         const FloatFormat& fmt, Accumulation acc) {
  CheckQkv(q, k, v);
  const double scale =
      Quantize(1.0 / std::sqrt(static_cast<double>(q.cols())), fmt);
  const Matrix s = Scale(MatmulTransposed(q, k, fmt, acc), scale, fmt);
  const Matrix p = SoftmaxRows(s, fmt, acc);
  return Matmul(p, v, fmt, acc);
}

Matrix FlashAttention(const Matrix& q, const Matrix& k, const Matrix& v,
                      const FloatFormat& fmt, const BlockGeometry& geom,
                      const FlashOptions& options) {
  CheckQkv(q, k, v);
  if (geom.block_rows == 0 || geom.block_cols == 0) {
    throw std::invalid_argument("flash attention block sides must be >= 1");
  }
  const size_t n = q.rows();
  const size_t d = q.cols();
  const size_t br = std::min(geom.block_rows, n);
  const size_t bc = std::min(geom.block_cols, n);
  const size_t n_col_blocks = (n + bc - 1) / bc;
  const Accumulation acc = options.accumulation;
  const bool wide = acc == Accumulation::kCarrier || fmt.is_carrier();

  std::vector<size_t> order = options.column_block_order;
  if (order.empty()) {
    for (size_t j = 0; j < n_col_blocks; ++j) order.push_back(j);
  } else {
    std::vector<size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (size_t j = 0; j < sorted.size(); ++j) {
      if (sorted.size() != n_col_blocks || sorted[j] != j) {
        throw std::invalid_argument(
            "column_block_order must be a permutation of the " +
            std::to_string(n_col_blocks) + " column blocks");
      }
    }
  }

  const double scale = Quantize(1.0 / std::sqrt(static_cast<double>(d)), fmt);
  const double neg_inf = -std::numeric_limits<double>::infinity();

  std::vector<double> out(n * d);
  std::vector<double> m(br), l(br), o(br * d);
  std::vector<double> p(bc), pv(d);

  for (size_t r0 = 0; r0 < n; r0 += br) {
    const size_t rows = std::min(br, n - r0);
    std::fill(m.begin(), m.end(), neg_inf);
    std::fill(l.begin(), l.end(), 0.0);
    std::fill(o.begin(), o.end(), 0.0);

    for (size_t jb : order) {
      const size_t c0 = jb * bc;
      const size_t cols = std::min(bc, n - c0);

      for (size_t r = 0; r < rows; ++r) {
        const auto qr = q.row(r0 + r);
        // Tile scores, then the tile-local max.
        for (size_t c = 0; c < cols; ++c) {
          p[c] = RMul(scale, Dot(qr, k.row(c0 + c), fmt, acc), fmt);
        }
        double m_tile = p[0];
        for (size_t c = 1; c < cols; ++c) m_tile = RMax(m_tile, p[c]);
        for (size_t c = 0; c < cols; ++c) {
          p[c] = RExp(RSub(p[c], m_tile, fmt), fmt);
        }
        const double l_tile = Sum(std::span(p.data(), cols), fmt, acc);

        // Unnormalized P V_j, accumulated over c in ascending order.
        for (size_t x = 0; x < d; ++x) {
          pv[x] = wide ? p[0] * v(c0, x) : RMul(p[0], v(c0, x), fmt);
        }
        for (size_t c = 1; c < cols; ++c) {
          const auto vc = v.row(c0 + c);
          if (wide) {
            for (size_t x = 0; x < d; ++x) pv[x] += p[c] * vc[x];
          } else {
            for (size_t x = 0; x < d; ++x) {
              pv[x] = RAdd(pv[x], RMul(p[c], vc[x], fmt), fmt);
            }
          }
        }
        if (wide) {
          for (size_t x = 0; x < d; ++x) pv[x] = Quantize(pv[x], fmt);
        }

        // Rescale the running state to the new max.
        const double m_new = RMax(m[r], m_tile);
        const double alpha = RExp(RSub(m[r], m_new, fmt), fmt);
        const double beta = RExp(RSub(m_tile, m_new, fmt), fmt);
        const double alpha_l = RMul(alpha, l[r], fmt);
        const double l_new = RAdd(alpha_l, RMul(beta, l_tile, fmt), fmt);
        const double keep = RDiv(alpha_l, l_new, fmt);
        const double add = RDiv(beta, l_new, fmt);
        double* orow = o.data() + r * d;
        for (size_t x = 0; x < d; ++x) {
          orow[x] = RAdd(RMul(keep, orow[x], fmt), RMul(add, pv[x], fmt), fmt);
        }
        m[r] = m_new;
        l[r] = l_new;
      }
    }
    std::copy(o.begin(), o.begin() + rows * d, out.begin() + r0 * d);
  }
  return Matrix::Adopt(n, d, std::move(out), fmt);
}

Matrix RunAttention(const AttentionConfig& cfg, const Matrix& q,
                    const Matrix& k, const Matrix& v) {
  if (cfg.variant == Variant::kBaseline) {
    return BaselineAttention(q, k, v, cfg.format, cfg.accumulation);
  }
  const ClampedGeometry g = ClampGeometry(cfg.geometry(), q.rows());
  return FlashAttention(q, k, v, cfg.format, g.geometry,
                        {.accumulation = cfg.accumulation, .column_block_order = {}});
}

}  // namespace flashdev
