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

// Toy training harness for the weight-divergence proxy.
//
// The model is a single-head attention classifier:
//   X = embed[tokens]; Q, K, V = X Wq, X Wk, X Wv; O = attention(Q, K, V);
//   logits = mean_rows(O) * head; loss = softmax cross-entropy.
// Gradients are written out by hand and evaluated through the emulated
// format. The attention backward uses the full-matrix formulas with P
// recomputed as softmax(scale * Q K^T), for both variants.

#ifndef FLASHDEV_TRAINER_H_
#define FLASHDEV_TRAINER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flashdev/attention.h"
#include "flashdev/matrix.h"

namespace flashdev {

// Synthetic sequence classification: token t belongs to group t % classes,
// and a sequence's label is the group holding the most of its tokens (ties
// go to the lowest group).
struct TaskSpec {
  size_t vocab = 16;
  size_t seq_len = 16;
  size_t head_dim = 8;
  size_t classes = 4;
  size_t batch = 8;
  uint64_t data_seed = 7;
};

struct Batch {
  std::vector<std::vector<size_t>> tokens;  // batch x seq_len
  std::vector<size_t> labels;
};

int LabelFor(const std::vector<size_t>& tokens, size_t classes);
// Training batch for `step`; a pure function of (task, step).
Batch MakeBatch(const TaskSpec& task, uint64_t step);
// Fixed held-out batch used for checkpoint losses.
Batch EvalBatch(const TaskSpec& task);

inline constexpr std::array<std::string_view, 5> kTensorNames = {
    "embed", "wq", "wk", "wv", "head"};

struct ToyModel {
  Matrix embed;  // vocab x d
  Matrix wq;     // d x d
  Matrix wk;
  Matrix wv;
  Matrix head;   // d x classes

  std::array<const Matrix*, 5> tensors() const {
    return {&embed, &wq, &wk, &wv, &head};
  }
  std::array<Matrix*, 5> tensors() { return {&embed, &wq, &wk, &wv, &head}; }
  size_t parameter_count() const;
};

// embed ~ N(0, 1); Wq, Wk, Wv, head ~ N(0, 1/d); drawn in the carrier and
// quantized to fmt, so runs that share a seed start from the same draw.
ToyModel InitModel(const TaskSpec& task, uint64_t seed, const FloatFormat& fmt);

struct KernelSettings {
  Variant variant = Variant::kBaseline;
  FloatFormat format = FloatFormat::FP64();
  Accumulation accumulation = Accumulation::kPerOp;
  BlockGeometry flash_geometry{.block_rows = 4, .block_cols = 4};
};

// Everything the backward pass needs from one sequence.
struct SequenceActivations {
  std::vector<size_t> tokens;
  size_t label = 0;
  Matrix x, q, k, v, o;
  Matrix pooled;  // 1 x d
  Matrix probs;   // 1 x classes
};

struct ForwardResult {
  double loss = 0;      // batch mean, evaluated in the carrier
  bool finite = true;   // false flags a divergence event
  std::vector<SequenceActivations> activations;
};

// Throws std::invalid_argument if a token or label is out of range.
ForwardResult ForwardLoss(const ToyModel& model, const Batch& batch,
                          const KernelSettings& kernel);

// Gradient of ForwardLoss's batch-mean loss with respect to every tensor,
// in the same layout as ToyModel.
ToyModel Backward(const ToyModel& model, const ForwardResult& forward,
                  const KernelSettings& kernel);

struct GradientCheck {
  double max_relative_error = 0;
  std::string worst_tensor;
  size_t worst_index = 0;
  size_t checked = 0;
};
// Central differences of ForwardLoss at FP64 against Backward at FP64, over
// every parameter. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheck CheckGradients(const ToyModel& model, const Batch& batch,
                             Variant variant, const BlockGeometry& geometry,
                             double h = 1e-5);

struct TrainRunConfig {
  uint64_t seed = 0;
  Variant attention_variant = Variant::kBaseline;
  FloatFormat train_format = FloatFormat::BF16();
  size_t steps = 2000;
  double learning_rate = 0.05;
  size_t checkpoint_every = 100;
  TaskSpec task;
  BlockGeometry flash_geometry{.block_rows = 4, .block_cols = 4};
  Accumulation accumulation = Accumulation::kPerOp;
};

// Throws std::invalid_argument unless steps >= 1, learning_rate > 0 and
// checkpoint_every divides steps.
void ValidateTrainRunConfig(const TrainRunConfig& cfg);

struct Checkpoint {
  size_t step = 0;
  ToyModel model;
  double eval_loss = 0;
};

struct TrainRun {
  TrainRunConfig config;
  std::vector<Checkpoint> checkpoints;  // step 0, every, 2 * every, ..., steps
  std::vector<double> train_losses;     // one per step, before the update
  std::vector<size_t> divergence_steps; // steps whose loss was non-finite
};

// Plain SGD, w <- w - lr * g with the multiply and subtract rounded to
// train_format. Deterministic given cfg.
TrainRun RunTraining(const TrainRunConfig& cfg);

struct TensorDelta {
  std::string name;
  double max_difference = 0;
  double wasserstein = 0;
};

struct CheckpointDelta {
  size_t step = 0;
  double max_difference = 0;  // over all parameters
  double wasserstein = 0;     // size-weighted mean of per-tensor values
  std::vector<TensorDelta> per_tensor;
};

// Throws std::invalid_argument if the schedules or shapes differ.
std::vector<CheckpointDelta> CompareRuns(const std::vector<Checkpoint>& a,
                                         const std::vector<Checkpoint>& b);

struct Scenario {
  std::string name;
  std::string run_a;
  std::string run_b;
  std::vector<CheckpointDelta> deltas;
};

struct ScenarioSuite {
  // flash_vs_baseline, different_init, fp16_vs_fp32, in that order.
  std::array<Scenario, 3> scenarios;
  std::vector<std::pair<std::string, TrainRun>> runs;
};

// Offset added to base.seed for the different-initialization run.
inline constexpr uint64_t kAltInitSeedOffset = 0x1000;

// (1) flash vs baseline, same seed and format; (2) baseline vs baseline with
// seeds base.seed and base.seed + kAltInitSeedOffset; (3) baseline at FP16
// vs FP32, same seed. The five runs may execute on `threads` workers.
ScenarioSuite RunScenarioSuite(const TrainRunConfig& base, int threads = 1);

}  // namespace flashdev

#endif  // FLASHDEV_TRAINER_H_
