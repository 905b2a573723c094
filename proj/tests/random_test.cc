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

#include "flashdev/random.h"

#include <cmath>
#include <stdexcept>

#include "gtest/gtest.h"

namespace flashdev {
namespace {

using Words = std::array<uint32_t, 4>;

// Known-answer vectors published with Random123 (philox4x32_10).
TEST(PhiloxTest, KnownAnswers) {
  EXPECT_EQ(Philox4x32({0, 0, 0, 0}, {0, 0}),
            (Words{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                       {0xffffffff, 0xffffffff}),
            (Words{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                       {0xa4093822, 0x299f31d0}),
            (Words{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterDrawTest, PureFunctionOfCoordinates) {
  EXPECT_EQ(CounterDraw(1, 2, 3, Distribution::kNormal),
            CounterDraw(1, 2, 3, Distribution::kNormal));
  EXPECT_NE(CounterDraw(1, 2, 3, Distribution::kNormal),
            CounterDraw(2, 2, 3, Distribution::kNormal));
  EXPECT_NE(CounterDraw(1, 2, 3, Distribution::kNormal),
            CounterDraw(1, 3, 3, Distribution::kNormal));
  EXPECT_NE(CounterDraw(1, 2, 3, Distribution::kNormal),
            CounterDraw(1, 2, 4, Distribution::kNormal));
}

TEST(CounterDrawTest, NormalMomentsOverAMillionDraws) {
  double sum = 0, sq = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = CounterDraw(42, 0, i, Distribution::kNormal);
    ASSERT_TRUE(std::isfinite(x));
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sd, 1.0, 0.01);
}

TEST(CounterDrawTest, UniformRangeAndMoments) {
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = CounterDraw(7, 1, i, Distribution::kUniform);
    ASSERT_GT(x, -1.0);
    ASSERT_LE(x, 1.0);
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0 / 3.0, 0.01);
}

TEST(DistributionTest, Names) {
  EXPECT_EQ(ParseDistribution("normal"), Distribution::kNormal);
  EXPECT_EQ(ParseDistribution("uniform"), Distribution::kUniform);
  EXPECT_EQ(DistributionName(Distribution::kUniform), "uniform");
  EXPECT_THROW(ParseDistribution("cauchy"), std::invalid_argument);
}

}  // namespace
}  // namespace flashdev
