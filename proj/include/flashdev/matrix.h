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

// Dense row-major matrices over an emulated format, plus the handful of
// kernels attention needs. Reductions always run in ascending index order so
// results are bit-reproducible.

#ifndef FLASHDEV_MATRIX_H_
#define FLASHDEV_MATRIX_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flashdev/numerics.h"
#include "flashdev/random.h"

namespace flashdev {

class Matrix {
 public:
  // rows x cols of zeros. Throws std::invalid_argument on a zero dimension.
  Matrix(size_t rows, size_t cols, FloatFormat fmt);

  // Quantizes every element of `values` to fmt.
  static Matrix FromValues(size_t rows, size_t cols,
                           std::vector<double> values, FloatFormat fmt);
  // Kernel output path: caller guarantees every value is already
  // representable in fmt (checked in debug builds).
  static Matrix Adopt(size_t rows, size_t cols, std::vector<double> values,
                      FloatFormat fmt);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  const FloatFormat& format() const { return format_; }

  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> data() const { return data_; }

  Matrix Transposed() const;
  // Requantize into another format.
  Matrix As(const FloatFormat& fmt) const;
  // Rows [begin, begin + count).
  Matrix RowSlice(size_t begin, size_t count) const;

  bool BitEqual(const Matrix& other) const;

 private:
  Matrix(size_t rows, size_t cols, std::vector<double> values,
         FloatFormat fmt);

  size_t rows_;
  size_t cols_;
  std::vector<double> data_;
  FloatFormat format_;
};

// i.i.d. draws from the counter-based generator: element (r, c) is draw
// number r * cols + c of `stream`. Bit-identical for identical arguments.
Matrix RandomMatrix(size_t rows, size_t cols, uint64_t seed,
                    const FloatFormat& fmt,
                    Distribution dist = Distribution::kNormal,
                    uint64_t stream = 0, double scale = 1.0);

// Left-to-right dot product at fmt. Under kPerOp the first product seeds the
// accumulator and every subsequent multiply and add is rounded; under
// kCarrier products and sums stay in the carrier and only the result is
// rounded.
double Dot(std::span<const double> a, std::span<const double> b,
           const FloatFormat& fmt, Accumulation acc);

// Left-to-right sum with the same rounding policy as Dot.
double Sum(std::span<const double> xs, const FloatFormat& fmt,
           Accumulation acc);

// A * B. Throws std::invalid_argument if A.cols() != B.rows().
Matrix Matmul(const Matrix& a, const Matrix& b, const FloatFormat& fmt,
              Accumulation acc = Accumulation::kPerOp);
// A * B^T without materializing the transpose (same rounding as Matmul).
Matrix MatmulTransposed(const Matrix& a, const Matrix& b,
                        const FloatFormat& fmt,
                        Accumulation acc = Accumulation::kPerOp);

// Elementwise s * A, each multiply rounded.
Matrix Scale(const Matrix& a, double s, const FloatFormat& fmt);

// Numerically stable row softmax: subtract the row max, exponentiate, sum left
// to right, divide. A row holding NaN comes out all-NaN.
Matrix SoftmaxRows(const Matrix& a, const FloatFormat& fmt,
                   Accumulation acc = Accumulation::kPerOp);

}  // namespace flashdev

#endif  // FLASHDEV_MATRIX_H_
