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

// CSV and JSON artifacts.
//
// Every file starts with a `# flashdev config_hash=<hex>` comment line so a
// result can be matched to the config that produced it; the CSV header row
// follows. Readers that skip '#' lines (pandas `comment="#"`, R
// `comment.char`) see a plain tidy table.

#ifndef FLASHDEV_OUTPUT_H_
#define FLASHDEV_OUTPUT_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "flashdev/sweeps.h"
#include "flashdev/trainer.h"

namespace flashdev {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal that parses back to the same double; "nan", "inf",
// "-inf" for non-finite values.
std::string FormatDouble(double x);

inline constexpr std::string_view kSweepCsvHeader =
    "axis,value,seed,variant,format,Br,Bc,max_abs_diff,mean_diff,std_diff,vs";
inline constexpr std::string_view kTrainCsvHeader =
    "scenario,step,max_difference,wasserstein,tensor";

std::string HashLine(std::string_view config_hash);

std::string SweepCsv(const SweepResult& result, std::string_view config_hash);

// One "aggregate" row per checkpoint, then one row per tensor.
std::string TrainingCsv(const ScenarioSuite& suite,
                        std::string_view config_hash);

// Medians and quartiles over seeds, grouped by (value, variant, format, vs)
// in first-appearance order.
nlohmann::ordered_json SweepSummary(const SweepResult& result);

// Per scenario and checkpoint: medians and quartiles over base seeds, and the
// median Wasserstein divided by its final-checkpoint value.
nlohmann::ordered_json TrainingSummary(
    const std::vector<std::pair<uint64_t, ScenarioSuite>>& suites);

// Writes through a temporary file and renames it into place. Throws
// OutputError on failure.
void WriteTextFile(const std::string& path, std::string_view content);

}  // namespace flashdev

#endif  // FLASHDEV_OUTPUT_H_
