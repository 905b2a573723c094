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

#include "flashdev/numerics.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <stdexcept>

namespace flashdev {

FloatFormat::FloatFormat(std::string name, int exponent_bits,
                         int mantissa_bits)
    : name_(std::move(name)),
      exponent_bits_(exponent_bits),
      mantissa_bits_(mantissa_bits) {
  if (exponent_bits < 2 || exponent_bits > 11) {
    throw std::invalid_argument("exponent_bits must be in [2, 11], got " +
                                std::to_string(exponent_bits));
  }
  if (mantissa_bits < 1 || mantissa_bits > 52) {
    throw std::invalid_argument("mantissa_bits must be in [1, 52], got " +
                                std::to_string(mantissa_bits));
  }
  is_carrier_ = exponent_bits == 11 && mantissa_bits == 52;
  drop_bits_ = 52 - mantissa_bits;
  min_normal_bits_ = static_cast<uint64_t>(emin() + 1023) << 52;
  const uint64_t frac = ((uint64_t{1} << mantissa_bits) - 1) << drop_bits_;
  max_finite_bits_ = (static_cast<uint64_t>(emax() + 1023) << 52) | frac;
  if (name_.empty()) name_ = Spec();
}

FloatFormat::FloatFormat(int exponent_bits, int mantissa_bits)
    : FloatFormat(std::string(), exponent_bits, mantissa_bits) {}

double FloatFormat::min_subnormal() const {
  return std::ldexp(1.0, emin() - mantissa_bits_);
}

std::string FloatFormat::Spec() const {
  return "(e" + std::to_string(exponent_bits_) + "m" +
         std::to_string(mantissa_bits_) + ")";
}

FloatFormat ParseFormat(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "bf16") return FloatFormat::BF16();
  if (s == "fp16") return FloatFormat::FP16();
  if (s == "fp32") return FloatFormat::FP32();
  if (s == "fp64") return FloatFormat::FP64();

  std::string_view v(s);
  if (v.size() >= 2 && v.front() == '(' && v.back() == ')') {
    v = v.substr(1, v.size() - 2);
  }
  const auto bad = [&] {
    return std::invalid_argument("unrecognized float format \"" +
                                 std::string(text) + "\"");
  };
  if (v.empty() || v.front() != 'e') throw bad();
  int e = 0;
  int m = 0;
  const char* p = v.data() + 1;
  const char* end = v.data() + v.size();
  auto r = std::from_chars(p, end, e);
  if (r.ec != std::errc() || r.ptr == end || *r.ptr != 'm') throw bad();
  r = std::from_chars(r.ptr + 1, end, m);
  if (r.ec != std::errc() || r.ptr != end) throw bad();
  FloatFormat f(e, m);
  // Explicit spellings of a preset layout pick up the preset name.
  for (const FloatFormat& preset :
       {FloatFormat::BF16(), FloatFormat::FP16(), FloatFormat::FP32(),
        FloatFormat::FP64()}) {
    if (preset == f) return preset;
  }
  return f;
}

namespace internal {

// Values below the format's normal range (including zeros). The quantum is
// fixed at 2^(emin - M) there, so round x / quantum to an integer.
double QuantizeSlow(double x, const FloatFormat& fmt) {
  const int scale = fmt.mantissa_bits() - fmt.emin();
  const double scaled = std::ldexp(x, scale);  // exact: |scaled| < 2^M
  return std::ldexp(std::nearbyint(scaled), -scale);
}

}  // namespace internal

double Ulp(double x, const FloatFormat& fmt) {
  const double ax = std::fabs(x);
  int e = fmt.emin();
  if (ax > 0 && std::isfinite(ax)) e = std::max(std::ilogb(ax), fmt.emin());
  if (!std::isfinite(ax)) e = fmt.emax();
  e = std::min(e, fmt.emax());
  return std::ldexp(1.0, e - fmt.mantissa_bits());
}

double RoundedOp(Op op, std::span<const double> operands,
                 const FloatFormat& fmt) {
  const size_t want = op == Op::kExp ? 1 : 2;
  if (operands.size() != want) {
    throw std::invalid_argument("RoundedOp: expected " + std::to_string(want) +
                                " operands, got " +
                                std::to_string(operands.size()));
  }
  const double a = operands[0];
  switch (op) {
    case Op::kAdd:
      return RAdd(a, operands[1], fmt);
    case Op::kSub:
      return RSub(a, operands[1], fmt);
    case Op::kMul:
      return RMul(a, operands[1], fmt);
    case Op::kDiv:
      return RDiv(a, operands[1], fmt);
    case Op::kExp:
      return RExp(a, fmt);
    case Op::kMax:
      return RMax(a, operands[1]);
  }
  return std::nan("");
}

std::string_view AccumulationName(Accumulation acc) {
  return acc == Accumulation::kPerOp ? "per_op" : "carrier";
}

}  // namespace flashdev
