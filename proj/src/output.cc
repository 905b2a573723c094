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

#include "flashdev/output.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "flashdev/metrics.h"

namespace flashdev {
namespace {

using Json = nlohmann::ordered_json;

Json Stats(std::vector<double> xs) {
  const Quartiles q = ComputeQuartiles(std::move(xs));
  return Json{{"median", q.median}, {"q1", q.q1}, {"q3", q.q3}};
}

}  // namespace

std::string FormatDouble(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

std::string HashLine(std::string_view config_hash) {
  return "# flashdev config_hash=" + std::string(config_hash) + "\n";
}

std::string SweepCsv(const SweepResult& result, std::string_view config_hash) {
  std::ostringstream os;
  os << HashLine(config_hash) << kSweepCsvHeader << '\n';
  const std::string_view axis = AxisName(result.axis);
  for (const SweepRow& row : result.rows) {
    os << axis << ',' << row.value << ',' << row.seed << ','
       << VariantName(row.variant) << ',' << row.format.name() << ','
       << row.geometry.block_rows << ',' << row.geometry.block_cols << ','
       << FormatDouble(row.report.max_abs_diff) << ','
       << FormatDouble(row.report.mean_diff) << ','
       << FormatDouble(row.report.std_diff) << ',' << ReferenceName(row.vs)
       << '\n';
  }
  return os.str();
}

std::string TrainingCsv(const ScenarioSuite& suite,
                        std::string_view config_hash) {
  std::ostringstream os;
  os << HashLine(config_hash) << kTrainCsvHeader << '\n';
  for (const Scenario& s : suite.scenarios) {
    for (const CheckpointDelta& d : s.deltas) {
      os << s.name << ',' << d.step << ',' << FormatDouble(d.max_difference)
         << ',' << FormatDouble(d.wasserstein) << ",aggregate\n";
      for (const TensorDelta& t : d.per_tensor) {
        os << s.name << ',' << d.step << ',' << FormatDouble(t.max_difference)
           << ',' << FormatDouble(t.wasserstein) << ',' << t.name << '\n';
      }
    }
  }
  return os.str();
}

Json SweepSummary(const SweepResult& result) {
  struct Group {
    const SweepRow* first;
    std::vector<double> max_abs, mean, stdev;
    bool clamped = false;
  };
  std::vector<Group> groups;
  std::map<std::string, size_t> index;
  for (const SweepRow& row : result.rows) {
    const std::string key = row.value + '|' +
                            std::string(VariantName(row.variant)) + '|' +
                            row.format.name() + '|' +
                            std::string(ReferenceName(row.vs));
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) groups.push_back({&row, {}, {}, {}});
    Group& g = groups[it->second];
    g.max_abs.push_back(row.report.max_abs_diff);
    g.mean.push_back(row.report.mean_diff);
    g.stdev.push_back(row.report.std_diff);
    g.clamped = g.clamped || row.clamped;
  }
  Json points = Json::array();
  for (Group& g : groups) {
    const SweepRow& r = *g.first;
    points.push_back(Json{{"value", r.value},
                          {"variant", VariantName(r.variant)},
                          {"format", r.format.name()},
                          {"vs", ReferenceName(r.vs)},
                          {"Br", r.geometry.block_rows},
                          {"Bc", r.geometry.block_cols},
                          {"clamped", g.clamped},
                          {"seeds", g.max_abs.size()},
                          {"max_abs_diff", Stats(std::move(g.max_abs))},
                          {"mean_diff", Stats(std::move(g.mean))},
                          {"std_diff", Stats(std::move(g.stdev))}});
  }
  return Json{{"axis", AxisName(result.axis)},
              {"perturbation", PerturbationName(result.perturbation)},
              {"distribution", DistributionName(result.distribution)},
              {"accumulation", AccumulationName(result.accumulation)},
              {"points", std::move(points)}};
}

Json TrainingSummary(
    const std::vector<std::pair<uint64_t, ScenarioSuite>>& suites) {
  Json scenarios = Json::array();
  if (suites.empty()) return Json{{"seeds", Json::array()}, {"scenarios", scenarios}};
  Json seeds = Json::array();
  for (const auto& [seed, suite] : suites) seeds.push_back(seed);
  const ScenarioSuite& first = suites.front().second;
  for (size_t s = 0; s < first.scenarios.size(); ++s) {
    const Scenario& proto = first.scenarios[s];
    const size_t checkpoints = proto.deltas.size();
    std::vector<double> medians(checkpoints);
    Json steps = Json::array();
    for (size_t c = 0; c < checkpoints; ++c) {
      std::vector<double> w, m;
      for (const auto& [seed, suite] : suites) {
        w.push_back(suite.scenarios[s].deltas[c].wasserstein);
        m.push_back(suite.scenarios[s].deltas[c].max_difference);
      }
      medians[c] = Median(w);
      steps.push_back(Json{{"step", proto.deltas[c].step},
                           {"wasserstein", Stats(std::move(w))},
                           {"max_difference", Stats(std::move(m))}});
    }
    const double final_median = checkpoints ? medians.back() : 0.0;
    for (size_t c = 0; c < checkpoints; ++c) {
      // Null when the final value is zero; the ratio is undefined there.
      steps[c]["wasserstein_normalized"] =
          final_median > 0 ? Json(medians[c] / final_median) : Json(nullptr);
    }
    scenarios.push_back(Json{{"name", proto.name},
                             {"run_a", proto.run_a},
                             {"run_b", proto.run_b},
                             {"checkpoints", std::move(steps)}});
  }
  return Json{{"seeds", std::move(seeds)}, {"scenarios", std::move(scenarios)}};
}

void WriteTextFile(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec) {
      throw OutputError("cannot create directory " +
                        target.parent_path().string() + ": " + ec.message());
    }
  }
  const fs::path tmp = fs::path(path + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw OutputError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    const std::string why = ec.message();
    fs::remove(tmp, ec);
    throw OutputError("cannot rename into " + path + ": " + why);
  }
}

}  // namespace flashdev
