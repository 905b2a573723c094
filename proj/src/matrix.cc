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

#include "flashdev/matrix.h"

#include <cassert>
#include <stdexcept>
#include <string>

namespace flashdev {
namespace {

void CheckDims(size_t rows, size_t cols) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("matrix dimensions must be >= 1, got " +
                                std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

std::string Shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(size_t rows, size_t cols, FloatFormat fmt)
    : rows_(rows), cols_(cols), format_(std::move(fmt)) {
  CheckDims(rows, cols);
  data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(size_t rows, size_t cols, std::vector<double> values,
               FloatFormat fmt)
    : rows_(rows), cols_(cols), data_(std::move(values)),
      format_(std::move(fmt)) {
  CheckDims(rows, cols);
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("matrix data has " +
                                std::to_string(data_.size()) +
                                " elements, expected " +
                                std::to_string(rows * cols));
  }
}

Matrix Matrix::FromValues(size_t rows, size_t cols, std::vector<double> values,
                          FloatFormat fmt) {
  for (double& v : values) v = Quantize(v, fmt);
  return Matrix(rows, cols, std::move(values), std::move(fmt));
}

Matrix Matrix::Adopt(size_t rows, size_t cols, std::vector<double> values,
                     FloatFormat fmt) {
#ifndef NDEBUG
  for (double v : values) assert(IsRepresentable(v, fmt));
#endif
  return Matrix(rows, cols, std::move(values), std::move(fmt));
}

Matrix Matrix::Transposed() const {
  std::vector<double> t(data_.size());
  for (size_t r = 0; r < rows_; ++r) {
    for (size_t c = 0; c < cols_; ++c) t[c * rows_ + r] = data_[r * cols_ + c];
  }
  return Matrix(cols_, rows_, std::move(t), format_);
}

Matrix Matrix::As(const FloatFormat& fmt) const {
  return FromValues(rows_, cols_, data_, fmt);
}

Matrix Matrix::RowSlice(size_t begin, size_t count) const {
  if (begin + count > rows_) {
    throw std::invalid_argument("row slice out of range");
  }
  std::vector<double> v(data_.begin() + begin * cols_,
                        data_.begin() + (begin + count) * cols_);
  return Matrix(count, cols_, std::move(v), format_);
}

bool Matrix::BitEqual(const Matrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) return false;
  for (size_t i = 0; i < data_.size(); ++i) {
    if (std::bit_cast<uint64_t>(data_[i]) !=
        std::bit_cast<uint64_t>(other.data_[i])) {
      return false;
    }
  }
  return true;
}

Matrix RandomMatrix(size_t rows, size_t cols, uint64_t seed,
                    const FloatFormat& fmt, Distribution dist,
                    uint64_t stream, double scale) {
  CheckDims(rows, cols);
  std::vector<double> v(rows * cols);
  for (size_t i = 0; i < v.size(); ++i) {
    v[i] = scale * CounterDraw(seed, stream, i, dist);
  }
  return Matrix::FromValues(rows, cols, std::move(v), fmt);
}

double Dot(std::span<const double> a, std::span<const double> b,
           const FloatFormat& fmt, Accumulation acc) {
  assert(a.size() == b.size() && !a.empty());
  const size_t n = a.size();
  if (acc == Accumulation::kCarrier || fmt.is_carrier()) {
    double s = a[0] * b[0];
    for (size_t k = 1; k < n; ++k) s += a[k] * b[k];
    return Quantize(s, fmt);
  }
  double s = RMul(a[0], b[0], fmt);
  for (size_t k = 1; k < n; ++k) s = RAdd(s, RMul(a[k], b[k], fmt), fmt);
  return s;
}

double Sum(std::span<const double> xs, const FloatFormat& fmt,
           Accumulation acc) {
  assert(!xs.empty());
  double s = xs[0];
  if (acc == Accumulation::kCarrier || fmt.is_carrier()) {
    for (size_t k = 1; k < xs.size(); ++k) s += xs[k];
    return Quantize(s, fmt);
  }
  for (size_t k = 1; k < xs.size(); ++k) s = RAdd(s, xs[k], fmt);
  return s;
}

Matrix MatmulTransposed(const Matrix& a, const Matrix& b,
                        const FloatFormat& fmt, Accumulation acc) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul shape mismatch: " + Shape(a) +
                                " times transpose of " + Shape(b));
  }
  std::vector<double> out(a.rows() * b.rows());
  for (size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (size_t j = 0; j < b.rows(); ++j) {
      out[i * b.rows() + j] = Dot(ai, b.row(j), fmt, acc);
    }
  }
  return Matrix::Adopt(a.rows(), b.rows(), std::move(out), fmt);
}

Matrix Matmul(const Matrix& a, const Matrix& b, const FloatFormat& fmt,
              Accumulation acc) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul shape mismatch: " + Shape(a) +
                                " times " + Shape(b));
  }
  return MatmulTransposed(a, b.Transposed(), fmt, acc);
}

Matrix Scale(const Matrix& a, double s, const FloatFormat& fmt) {
  std::vector<double> out(a.size());
  const auto in = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = RMul(s, in[i], fmt);
  return Matrix::Adopt(a.rows(), a.cols(), std::move(out), fmt);
}

Matrix SoftmaxRows(const Matrix& a, const FloatFormat& fmt,
                   Accumulation acc) {
  const size_t n = a.cols();
  std::vector<double> out(a.size());
  std::vector<double> p(n);
  for (size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    double m = row[0];
    for (size_t j = 1; j < n; ++j) m = RMax(m, row[j]);
    for (size_t j = 0; j < n; ++j) p[j] = RExp(RSub(row[j], m, fmt), fmt);
    const double l = Sum(p, fmt, acc);
    for (size_t j = 0; j < n; ++j) out[r * n + j] = RDiv(p[j], l, fmt);
  }
  return Matrix::Adopt(a.rows(), a.cols(), std::move(out), fmt);
}

}  // namespace flashdev
