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

// Command-line driver, kept in the library so tests can call it in-process.

#ifndef FLASHDEV_CLI_H_
#define FLASHDEV_CLI_H_

#include <ostream>

#include "flashdev/validate.h"

namespace flashdev {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "FLASHDEV_OUT";

struct CliHooks {
  QuantizeFn quantize;  // fault injection for `validate`; empty: Quantize
};

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err, const CliHooks& hooks = {});

}  // namespace flashdev

#endif  // FLASHDEV_CLI_H_
