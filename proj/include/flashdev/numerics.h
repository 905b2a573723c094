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

// Software emulation of reduced-precision binary floating-point formats.
//
// Every emulated value is carried in a 64-bit double. A format is described by
// its exponent width and its explicit fraction width; Quantize() maps any
// double to the nearest value representable in the format (round to nearest,
// ties to even, gradual underflow, overflow to infinity). Arithmetic "at" a
// format evaluates the operation in the carrier and quantizes the result.

#ifndef FLASHDEV_NUMERICS_H_
#define FLASHDEV_NUMERICS_H_

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace flashdev {

class FloatFormat {
 public:
  // Throws std::invalid_argument unless 2 <= exponent_bits <= 11 and
  // 1 <= mantissa_bits <= 52.
  FloatFormat(std::string name, int exponent_bits, int mantissa_bits);
  FloatFormat(int exponent_bits, int mantissa_bits);

  static FloatFormat BF16() { return FloatFormat("bf16", 8, 7); }
  static FloatFormat FP16() { return FloatFormat("fp16", 5, 10); }
  static FloatFormat FP32() { return FloatFormat("fp32", 8, 23); }
  static FloatFormat FP64() { return FloatFormat("fp64", 11, 52); }

  const std::string& name() const { return name_; }
  int exponent_bits() const { return exponent_bits_; }
  int mantissa_bits() const { return mantissa_bits_; }
  int emax() const { return (1 << (exponent_bits_ - 1)) - 1; }
  int emin() const { return 1 - emax(); }
  // True for the 64-bit carrier layout, where quantization is the identity.
  bool is_carrier() const { return is_carrier_; }

  double max_finite() const { return std::bit_cast<double>(max_finite_bits_); }
  double min_normal() const { return std::bit_cast<double>(min_normal_bits_); }
  double min_subnormal() const;

  // "(e<E>m<M>)" spelling, e.g. "(e8m7)".
  std::string Spec() const;

  // Formats compare by layout only; "bf16" == "e8m7".
  friend bool operator==(const FloatFormat& a, const FloatFormat& b) {
    return a.exponent_bits_ == b.exponent_bits_ &&
           a.mantissa_bits_ == b.mantissa_bits_;
  }

 private:
  friend double Quantize(double x, const FloatFormat& fmt);

  std::string name_;
  int exponent_bits_;
  int mantissa_bits_;
  bool is_carrier_;
  int drop_bits_;              // 52 - mantissa_bits
  uint64_t min_normal_bits_;   // magnitude bits of 2^emin
  uint64_t max_finite_bits_;   // magnitude bits of the largest finite value
};

// Accepts "bf16", "fp16", "fp32", "fp64" (case-insensitive) and the explicit
// "e<E>m<M>" / "(e<E>m<M>)" forms. Throws std::invalid_argument otherwise.
FloatFormat ParseFormat(std::string_view text);

namespace internal {
double QuantizeSlow(double x, const FloatFormat& fmt);
}  // namespace internal

inline double Quantize(double x, const FloatFormat& fmt) {
  if (fmt.is_carrier_) return x;
  constexpr uint64_t kSign = uint64_t{1} << 63;
  constexpr uint64_t kInf = 0x7FF0000000000000ull;
  const uint64_t bits = std::bit_cast<uint64_t>(x);
  const uint64_t sign = bits & kSign;
  uint64_t mag = bits & ~kSign;
  if (mag >= kInf) return x;  // inf, nan
  if (mag < fmt.min_normal_bits_) return internal::QuantizeSlow(x, fmt);
  const int shift = fmt.drop_bits_;
  if (shift > 0) {
    const uint64_t lsb = (mag >> shift) & 1;
    const uint64_t bias = (uint64_t{1} << (shift - 1)) - 1 + lsb;
    mag = (mag + bias) & ~((uint64_t{1} << shift) - 1);
  }
  if (mag > fmt.max_finite_bits_) mag = kInf;
  return std::bit_cast<double>(sign | mag);
}

inline bool IsRepresentable(double x, const FloatFormat& fmt) {
  return std::isnan(x) || Quantize(x, fmt) == x;
}

// Unit in the last place of |x| in fmt: spacing of representable values in the
// binade containing x (the subnormal spacing below the normal range).
double Ulp(double x, const FloatFormat& fmt);

enum class Op { kAdd, kSub, kMul, kDiv, kExp, kMax };

// Evaluates op in the carrier and rounds to fmt. Binary ops take two operands,
// kExp takes one. kMax returns an operand unmodified and propagates NaN.
// Throws std::invalid_argument on an operand count mismatch.
double RoundedOp(Op op, std::span<const double> operands,
                 const FloatFormat& fmt);

// Hot-path spellings of RoundedOp used by the kernels.
inline double RAdd(double a, double b, const FloatFormat& f) {
  return Quantize(a + b, f);
}
inline double RSub(double a, double b, const FloatFormat& f) {
  return Quantize(a - b, f);
}
inline double RMul(double a, double b, const FloatFormat& f) {
  return Quantize(a * b, f);
}
inline double RDiv(double a, double b, const FloatFormat& f) {
  return Quantize(a / b, f);
}
inline double RExp(double a, const FloatFormat& f) {
  return Quantize(std::exp(a), f);
}
inline double RMax(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::nan("");
  return a < b ? b : a;
}

// A carrier double paired with the format it is representable in.
class EmulatedValue {
 public:
  EmulatedValue(double x, FloatFormat fmt)
      : value_(Quantize(x, fmt)), format_(std::move(fmt)) {}

  double value() const { return value_; }
  const FloatFormat& format() const { return format_; }

 private:
  double value_;
  FloatFormat format_;
};

// How reductions (dot products and softmax row sums) are rounded.
enum class Accumulation {
  kPerOp,    // every add in the reduction is rounded to the format
  kCarrier,  // accumulate in the 64-bit carrier, round the final sum once
};

std::string_view AccumulationName(Accumulation acc);

}  // namespace flashdev

#endif  // FLASHDEV_NUMERICS_H_
