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

#ifndef FLASHDEV_RANDOM_H_
#define FLASHDEV_RANDOM_H_

#include <array>
#include <cstdint>
#include <string_view>

namespace flashdev {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2,
// 3"). Stateless: the output block is a pure function of (key, counter), so
// element i of any stream can be drawn independently of all others.
std::array<uint32_t, 4> Philox4x32(std::array<uint32_t, 4> counter,
                                   std::array<uint32_t, 2> key);

enum class Distribution { kNormal, kUniform };

std::string_view DistributionName(Distribution dist);
Distribution ParseDistribution(std::string_view name);

// Draw number `index` of stream `stream` under `seed`.
// kNormal: standard normal (Box-Muller on two 53-bit uniforms).
// kUniform: uniform on (-1, 1].
double CounterDraw(uint64_t seed, uint64_t stream, uint64_t index,
                   Distribution dist);

}  // namespace flashdev

#endif  // FLASHDEV_RANDOM_H_
