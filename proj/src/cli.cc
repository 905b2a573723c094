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

#include "flashdev/cli.h"

#include <cstdlib>
#include <filesystem>
#include <ios>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "flashdev/config.h"
#include "flashdev/output.h"
#include "flashdev/parallel.h"

namespace flashdev {
namespace {

using Json = nlohmann::ordered_json;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::optional<size_t> seeds;
  std::optional<int> threads;
  bool print_config = false;
};

void AddCommonFlags(CLI::App* app, CommonFlags* f) {
  app->add_option("--config", f->config_path, "Experiment config file");
  app->add_option("--out", f->out, "Output directory (default: config `out`, "
                                   "then $FLASHDEV_OUT, then .)");
  app->add_option("--seeds", f->seeds, "Number of seeds")
      ->check(CLI::Range(size_t{1}, size_t{1} << 20));
  app->add_option("--threads", f->threads, "Worker threads")
      ->check(CLI::Range(1, 1024));
  app->add_flag("--print-config", f->print_config,
                "Print the resolved config and exit");
}

// Loads the config and applies flag overrides. `train` selects which seed
// count --seeds overrides.
ExperimentConfig Resolve(const CommonFlags& f, bool train) {
  ExperimentConfig cfg = f.config_path.empty() ? ParseConfig("")
                                               : LoadConfig(f.config_path);
  if (f.seeds) (train ? cfg.train_seeds : cfg.seeds) = *f.seeds;
  if (f.threads) cfg.threads = *f.threads;
  if (!f.out.empty()) {
    cfg.out = f.out;
  } else if (cfg.out.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    cfg.out = env && *env ? env : ".";
  }
  return cfg;
}

std::string OutPath(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out) / name).string();
}

Json Metadata(const ExperimentConfig& cfg) {
  return Json{{"config_hash", ConfigHash(cfg)},
              {"config", FormatConfig(ExperimentIdentity(cfg))}};
}

void WriteJson(const ExperimentConfig& cfg, const std::string& name, Json body,
               std::ostream& out) {
  Json doc = Metadata(cfg);
  for (auto& [k, v] : body.items()) doc[k] = std::move(v);
  const std::string path = OutPath(cfg, name);
  WriteTextFile(path, doc.dump(2) + "\n");
  out << "wrote " << path << '\n';
}

void WriteCsv(const ExperimentConfig& cfg, const std::string& name,
              const std::string& content, std::ostream& out) {
  const std::string path = OutPath(cfg, name);
  WriteTextFile(path, content);
  out << "wrote " << path << '\n';
}

void SweepPrecision(const ExperimentConfig& cfg, std::ostream& out) {
  const SweepResult r = RunSweep(PrecisionSpec(cfg));
  WriteCsv(cfg, "precision.csv", SweepCsv(r, ConfigHash(cfg)), out);
  WriteJson(cfg, "precision.json", SweepSummary(r), out);
}

void SweepSeqLen(const ExperimentConfig& cfg, std::ostream& out) {
  const SweepResult r = RunSweep(SeqLenSpec(cfg));
  WriteCsv(cfg, "seqlen.csv", SweepCsv(r, ConfigHash(cfg)), out);
  WriteJson(cfg, "seqlen.json", SweepSummary(r), out);
}

void SweepBlocks(const ExperimentConfig& cfg, std::ostream& out) {
  Json sweeps = Json::array();
  for (PerturbationKind p : cfg.block_perturbations) {
    const SweepResult r = RunSweep(BlockSpec(cfg, p));
    WriteCsv(cfg, "blocks_" + std::string(PerturbationName(p)) + ".csv",
             SweepCsv(r, ConfigHash(cfg)), out);
    sweeps.push_back(SweepSummary(r));
  }
  WriteJson(cfg, "blocks.json", Json{{"sweeps", std::move(sweeps)}}, out);
}

void TrainCompare(const ExperimentConfig& cfg, std::ostream& out) {
  const std::vector<uint64_t> seeds = SeedRange(cfg.seed_base, cfg.train_seeds);
  std::vector<std::pair<uint64_t, ScenarioSuite>> suites(seeds.size());
  ParallelFor(seeds.size(), cfg.threads, [&](size_t i) {
    TrainRunConfig base = cfg.train;
    base.seed = seeds[i];
    suites[i] = {seeds[i], RunScenarioSuite(base, 1)};
  });
  for (const auto& [seed, suite] : suites) {
    for (const auto& [name, run] : suite.runs) {
      if (!run.divergence_steps.empty()) {
        out << "note: seed " << seed << " run " << name << " had "
            << run.divergence_steps.size()
            << " non-finite loss steps (first at step "
            << run.divergence_steps.front() << ")\n";
      }
    }
    WriteCsv(cfg, "train_seed" + std::to_string(seed) + ".csv",
             TrainingCsv(suite, ConfigHash(cfg)), out);
  }
  WriteJson(cfg, "train.json", TrainingSummary(suites), out);
}

int Validate(const ExperimentConfig& cfg, bool list,
             const std::vector<std::string>& checks, const CliHooks& hooks,
             std::ostream& out) {
  const std::vector<std::string_view> names = ValidationCheckNames();
  if (list) {
    for (std::string_view n : names) out << n << '\n';
    return kExitOk;
  }
  ValidateOptions options;
  options.quantize = hooks.quantize;
  options.accumulation = cfg.attention.accumulation;
  std::vector<std::string_view> selected(names);
  if (!checks.empty()) selected.assign(checks.begin(), checks.end());
  bool ok = true;
  for (std::string_view n : selected) {
    const CheckResult r = RunValidationCheck(n, options);
    ok = ok && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
  }
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err, const CliHooks& hooks) {
  CLI::App app{"flashdev: numeric deviation of flash vs baseline attention "
               "over emulated floating-point formats"};
  app.require_subcommand(1);
  CommonFlags flags;
  struct Command {
    const char* name;
    const char* help;
    CLI::App* app = nullptr;
  };
  std::vector<Command> commands = {
      {"sweep-precision", "Deviation from the FP64 golden value per format"},
      {"sweep-seqlen", "Flash vs baseline deviation over sequence length"},
      {"sweep-blocks", "Deviation over block area, one CSV per perturbation"},
      {"train-compare", "Weight-divergence scenario suite on the toy model"},
      {"validate", "Run the internal oracle checks"}};
  for (Command& c : commands) {
    c.app = app.add_subcommand(c.name, c.help);
    AddCommonFlags(c.app, &flags);
  }
  bool list = false;
  std::vector<std::string> checks;
  CLI::App* validate = commands.back().app;
  validate->add_flag("--list", list, "Print check names without running");
  const std::vector<std::string_view> check_names = ValidationCheckNames();
  validate->add_option("--check", checks, "Run only the named check(s)")
      ->check(CLI::IsMember(
          std::vector<std::string>(check_names.begin(), check_names.end())));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help requests exit 0; everything else is a usage error.
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  const Command* chosen = nullptr;
  for (const Command& c : commands) {
    if (c.app->parsed()) chosen = &c;
  }
  const std::string name = chosen->name;
  try {
    const ExperimentConfig cfg = Resolve(flags, name == "train-compare");
    if (flags.print_config) {
      out << "# config_hash=" << ConfigHash(cfg) << '\n' << FormatConfig(cfg);
      return kExitOk;
    }
    if (name == "validate") return Validate(cfg, list, checks, hooks, out);
    if (name == "sweep-precision") SweepPrecision(cfg, out);
    if (name == "sweep-seqlen") SweepSeqLen(cfg, out);
    if (name == "sweep-blocks") SweepBlocks(cfg, out);
    if (name == "train-compare") TrainCompare(cfg, out);
    return kExitOk;
  } catch (const ConfigSyntaxError& e) {
    err << "config syntax error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UnknownKeyError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config value error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const OutputError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace flashdev
