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

#include "flashdev/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "flashdev/metrics.h"
#include "flashdev/parallel.h"
#include "flashdev/random.h"

namespace flashdev {
namespace {

// Stream ids for InitModel.
constexpr uint64_t kEmbedStream = 0;
constexpr uint64_t kEvalStep = 0xEEEEEEEEull;

Matrix ElementwiseAdd(const Matrix& a, const Matrix& b, const FloatFormat& f) {
  std::vector<double> out(a.size());
  const auto x = a.data();
  const auto y = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = RAdd(x[i], y[i], f);
  return Matrix::Adopt(a.rows(), a.cols(), std::move(out), f);
}

Matrix Zeros(const Matrix& like, const FloatFormat& f) {
  return Matrix(like.rows(), like.cols(), f);
}

// Column sums of `a` divided by its row count: mean over the sequence.
Matrix MeanRows(const Matrix& a, const FloatFormat& f, Accumulation acc) {
  std::vector<double> col(a.rows());
  std::vector<double> out(a.cols());
  const double n = static_cast<double>(a.rows());
  for (size_t c = 0; c < a.cols(); ++c) {
    for (size_t r = 0; r < a.rows(); ++r) col[r] = a(r, c);
    out[c] = RDiv(Sum(col, f, acc), n, f);
  }
  return Matrix::Adopt(1, a.cols(), std::move(out), f);
}

// Carrier-precision cross-entropy of one row of logits.
double CrossEntropy(std::span<const double> logits, size_t label) {
  double m = logits[0];
  for (double z : logits) m = std::max(m, z);
  double s = 0;
  for (double z : logits) s += std::exp(z - m);
  return m + std::log(s) - logits[label];
}

}  // namespace

int LabelFor(const std::vector<size_t>& tokens, size_t classes) {
  std::vector<size_t> counts(classes, 0);
  for (size_t t : tokens) ++counts[t % classes];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                          counts.begin());
}

Batch MakeBatch(const TaskSpec& task, uint64_t step) {
  Batch batch;
  batch.tokens.resize(task.batch);
  batch.labels.resize(task.batch);
  const std::array<uint32_t, 2> key = {static_cast<uint32_t>(task.data_seed),
                                       static_cast<uint32_t>(task.data_seed >> 32)};
  for (size_t b = 0; b < task.batch; ++b) {
    auto& seq = batch.tokens[b];
    seq.resize(task.seq_len);
    for (size_t i = 0; i < task.seq_len; ++i) {
      const uint64_t idx = b * task.seq_len + i;
      const auto r = Philox4x32({static_cast<uint32_t>(idx),
                                 static_cast<uint32_t>(idx >> 32),
                                 static_cast<uint32_t>(step),
                                 static_cast<uint32_t>(step >> 32)},
                                key);
      seq[i] = r[0] % task.vocab;
    }
    batch.labels[b] = static_cast<size_t>(LabelFor(seq, task.classes));
  }
  return batch;
}

Batch EvalBatch(const TaskSpec& task) {
  TaskSpec eval = task;
  eval.batch = std::max<size_t>(task.batch, 64);
  return MakeBatch(eval, kEvalStep);
}

size_t ToyModel::parameter_count() const {
  size_t n = 0;
  for (const Matrix* t : tensors()) n += t->size();
  return n;
}

ToyModel InitModel(const TaskSpec& task, uint64_t seed, const FloatFormat& fmt) {
  const size_t d = task.head_dim;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  return {RandomMatrix(task.vocab, d, seed, fmt, Distribution::kNormal,
                       kEmbedStream, 1.0),
          RandomMatrix(d, d, seed, fmt, Distribution::kNormal, 1, s),
          RandomMatrix(d, d, seed, fmt, Distribution::kNormal, 2, s),
          RandomMatrix(d, d, seed, fmt, Distribution::kNormal, 3, s),
          RandomMatrix(d, task.classes, seed, fmt, Distribution::kNormal, 4, s)};
}

ForwardResult ForwardLoss(const ToyModel& model, const Batch& batch,
                          const KernelSettings& kernel) {
  const FloatFormat& f = kernel.format;
  const Accumulation acc = kernel.accumulation;
  const size_t d = model.embed.cols();
  ForwardResult result;
  result.activations.reserve(batch.tokens.size());
  double total = 0;
  for (size_t b = 0; b < batch.tokens.size(); ++b) {
    const auto& tokens = batch.tokens[b];
    const size_t label = batch.labels[b];
    if (label >= model.head.cols()) {
      throw std::invalid_argument("label out of range");
    }
    std::vector<double> xs;
    xs.reserve(tokens.size() * d);
    for (size_t t : tokens) {
      if (t >= model.embed.rows()) {
        throw std::invalid_argument("token out of range");
      }
      const auto row = model.embed.row(t);
      xs.insert(xs.end(), row.begin(), row.end());
    }
    Matrix x = Matrix::Adopt(tokens.size(), d, std::move(xs), f);
    Matrix q = Matmul(x, model.wq, f, acc);
    Matrix k = Matmul(x, model.wk, f, acc);
    Matrix v = Matmul(x, model.wv, f, acc);
    Matrix o = kernel.variant == Variant::kBaseline
                   ? BaselineAttention(q, k, v, f, acc)
                   : FlashAttention(q, k, v, f,
                                    ClampGeometry(kernel.flash_geometry,
                                                  tokens.size())
                                        .geometry,
                                    {.accumulation = acc,
                                     .column_block_order = {}});
    Matrix pooled = MeanRows(o, f, acc);
    const Matrix logits = Matmul(pooled, model.head, f, acc);
    Matrix probs = SoftmaxRows(logits, f, acc);
    total += CrossEntropy(logits.row(0), label);
    result.activations.push_back({tokens, label, std::move(x), std::move(q),
                                  std::move(k), std::move(v), std::move(o),
                                  std::move(pooled), std::move(probs)});
  }
  result.loss = total / static_cast<double>(batch.tokens.size());
  result.finite = std::isfinite(result.loss);
  return result;
}

ToyModel Backward(const ToyModel& model, const ForwardResult& forward,
                  const KernelSettings& kernel) {
  const FloatFormat& f = kernel.format;
  const Accumulation acc = kernel.accumulation;
  const size_t d = model.embed.cols();
  const size_t classes = model.head.cols();
  const double batch = static_cast<double>(forward.activations.size());

  std::vector<double> d_embed(model.embed.size(), 0.0);
  ToyModel grad{Zeros(model.embed, f), Zeros(model.wq, f), Zeros(model.wk, f),
                Zeros(model.wv, f), Zeros(model.head, f)};

  for (const SequenceActivations& a : forward.activations) {
    const size_t n = a.x.rows();
    const double scale = Quantize(1.0 / std::sqrt(static_cast<double>(d)), f);

    // Cross-entropy through softmax: (p - onehot) / batch.
    std::vector<double> dl(classes);
    for (size_t c = 0; c < classes; ++c) {
      const double y = c == a.label ? 1.0 : 0.0;
      dl[c] = RDiv(RSub(a.probs(0, c), y, f), batch, f);
    }
    const Matrix d_logits = Matrix::Adopt(1, classes, dl, f);

    // Head: outer product pooled^T d_logits; pooled grad: head d_logits^T.
    std::vector<double> dh(d * classes);
    std::vector<double> dpool(d);
    for (size_t x = 0; x < d; ++x) {
      for (size_t c = 0; c < classes; ++c) {
        dh[x * classes + c] = RMul(a.pooled(0, x), dl[c], f);
      }
      dpool[x] = Dot(model.head.row(x), dl, f, acc);
    }
    grad.head = ElementwiseAdd(grad.head, Matrix::Adopt(d, classes, dh, f), f);

    // Mean pool spreads dpool / n to every position.
    std::vector<double> dov(n * d);
    for (size_t i = 0; i < n; ++i) {
      for (size_t x = 0; x < d; ++x) {
        dov[i * d + x] = RDiv(dpool[x], static_cast<double>(n), f);
      }
    }
    const Matrix d_o = Matrix::Adopt(n, d, std::move(dov), f);

    // Attention backward with P recomputed from the scores.
    const Matrix s = Scale(MatmulTransposed(a.q, a.k, f, acc), scale, f);
    const Matrix p = SoftmaxRows(s, f, acc);
    const Matrix d_v = Matmul(p.Transposed(), d_o, f, acc);
    const Matrix d_p = MatmulTransposed(d_o, a.v, f, acc);
    std::vector<double> dsv(n * n);
    for (size_t i = 0; i < n; ++i) {
      const double row_dot = Dot(p.row(i), d_p.row(i), f, acc);
      for (size_t j = 0; j < n; ++j) {
        dsv[i * n + j] = RMul(p(i, j), RSub(d_p(i, j), row_dot, f), f);
      }
    }
    const Matrix d_s = Matrix::Adopt(n, n, std::move(dsv), f);
    const Matrix d_q = Scale(Matmul(d_s, a.k, f, acc), scale, f);
    const Matrix d_k = Scale(Matmul(d_s.Transposed(), a.q, f, acc), scale, f);

    const Matrix xt = a.x.Transposed();
    grad.wq = ElementwiseAdd(grad.wq, Matmul(xt, d_q, f, acc), f);
    grad.wk = ElementwiseAdd(grad.wk, Matmul(xt, d_k, f, acc), f);
    grad.wv = ElementwiseAdd(grad.wv, Matmul(xt, d_v, f, acc), f);

    const Matrix d_x = ElementwiseAdd(
        ElementwiseAdd(MatmulTransposed(d_q, model.wq, f, acc),
                       MatmulTransposed(d_k, model.wk, f, acc), f),
        MatmulTransposed(d_v, model.wv, f, acc), f);
    for (size_t i = 0; i < n; ++i) {
      double* row = d_embed.data() + a.tokens[i] * d;
      for (size_t x = 0; x < d; ++x) row[x] = RAdd(row[x], d_x(i, x), f);
    }
  }
  grad.embed = Matrix::Adopt(model.embed.rows(), d, std::move(d_embed), f);
  return grad;
}

GradientCheck CheckGradients(const ToyModel& model, const Batch& batch,
                             Variant variant, const BlockGeometry& geometry,
                             double h) {
  const FloatFormat fp64 = FloatFormat::FP64();
  const KernelSettings kernel{.variant = variant,
                              .format = fp64,
                              .accumulation = Accumulation::kPerOp,
                              .flash_geometry = geometry};
  ToyModel m64{model.embed.As(fp64), model.wq.As(fp64), model.wk.As(fp64),
               model.wv.As(fp64), model.head.As(fp64)};
  const ForwardResult fwd = ForwardLoss(m64, batch, kernel);
  const ToyModel grad = Backward(m64, fwd, kernel);

  GradientCheck check;
  const auto grads = grad.tensors();
  for (size_t t = 0; t < kTensorNames.size(); ++t) {
    const Matrix& base = *m64.tensors()[t];
    for (size_t i = 0; i < base.size(); ++i) {
      auto loss_at = [&](double delta) {
        std::vector<double> vals(base.data().begin(), base.data().end());
        vals[i] += delta;
        ToyModel probe = m64;
        *probe.tensors()[t] =
            Matrix::FromValues(base.rows(), base.cols(), std::move(vals), fp64);
        return ForwardLoss(probe, batch, kernel).loss;
      };
      const double numeric = (loss_at(h) - loss_at(-h)) / (2 * h);
      const double analytic = grads[t]->data()[i];
      const double denom =
          std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
      const double rel = std::fabs(numeric - analytic) / denom;
      ++check.checked;
      if (rel > check.max_relative_error || check.worst_tensor.empty()) {
        check.max_relative_error = std::max(rel, check.max_relative_error);
        check.worst_tensor = std::string(kTensorNames[t]);
        check.worst_index = i;
      }
    }
  }
  return check;
}

void ValidateTrainRunConfig(const TrainRunConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(cfg.learning_rate > 0)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (cfg.checkpoint_every < 1 || cfg.steps % cfg.checkpoint_every != 0) {
    throw std::invalid_argument("checkpoint_every (" +
                                std::to_string(cfg.checkpoint_every) +
                                ") must divide steps (" +
                                std::to_string(cfg.steps) + ")");
  }
  const TaskSpec& t = cfg.task;
  if (t.vocab < 1 || t.seq_len < 1 || t.head_dim < 1 || t.classes < 2 ||
      t.batch < 1) {
    throw std::invalid_argument(
        "task needs vocab, seq_len, head_dim, batch >= 1 and classes >= 2");
  }
  if (cfg.flash_geometry.block_rows < 1 || cfg.flash_geometry.block_cols < 1) {
    throw std::invalid_argument("flash geometry sides must be >= 1");
  }
}

TrainRun RunTraining(const TrainRunConfig& cfg) {
  ValidateTrainRunConfig(cfg);
  const FloatFormat& f = cfg.train_format;
  const KernelSettings kernel{.variant = cfg.attention_variant,
                              .format = f,
                              .accumulation = cfg.accumulation,
                              .flash_geometry = cfg.flash_geometry};
  const double lr = Quantize(cfg.learning_rate, f);
  const Batch eval = EvalBatch(cfg.task);

  TrainRun run;
  run.config = cfg;
  ToyModel model = InitModel(cfg.task, cfg.seed, f);
  auto snapshot = [&](size_t step) {
    const double eval_loss = ForwardLoss(model, eval, kernel).loss;
    run.checkpoints.push_back({step, model, eval_loss});
  };
  snapshot(0);

  for (size_t step = 0; step < cfg.steps; ++step) {
    const ForwardResult fwd = ForwardLoss(model, MakeBatch(cfg.task, step), kernel);
    run.train_losses.push_back(fwd.loss);
    if (!fwd.finite) run.divergence_steps.push_back(step);
    const ToyModel grad = Backward(model, fwd, kernel);
    auto params = model.tensors();
    const auto grads = grad.tensors();
    for (size_t t = 0; t < params.size(); ++t) {
      Matrix& w = *params[t];
      std::vector<double> next(w.size());
      const auto wv = w.data();
      const auto gv = grads[t]->data();
      for (size_t i = 0; i < next.size(); ++i) {
        next[i] = RSub(wv[i], RMul(lr, gv[i], f), f);
      }
      w = Matrix::Adopt(w.rows(), w.cols(), std::move(next), f);
    }
    if ((step + 1) % cfg.checkpoint_every == 0) snapshot(step + 1);
  }
  return run;
}

std::vector<CheckpointDelta> CompareRuns(const std::vector<Checkpoint>& a,
                                         const std::vector<Checkpoint>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("checkpoint schedules differ in length");
  }
  std::vector<CheckpointDelta> out;
  out.reserve(a.size());
  for (size_t c = 0; c < a.size(); ++c) {
    if (a[c].step != b[c].step) {
      throw std::invalid_argument("checkpoint schedules differ at index " +
                                  std::to_string(c));
    }
    CheckpointDelta delta;
    delta.step = a[c].step;
    const auto ta = a[c].model.tensors();
    const auto tb = b[c].model.tensors();
    double weighted = 0;
    size_t total = 0;
    for (size_t t = 0; t < ta.size(); ++t) {
      if (ta[t]->rows() != tb[t]->rows() || ta[t]->cols() != tb[t]->cols()) {
        throw std::invalid_argument("model shapes differ in tensor " +
                                    std::string(kTensorNames[t]));
      }
      TensorDelta td{std::string(kTensorNames[t]),
                     MaxDifference(ta[t]->data(), tb[t]->data()),
                     Wasserstein1D(ta[t]->data(), tb[t]->data())};
      delta.max_difference = std::max(delta.max_difference, td.max_difference);
      if (std::isnan(td.max_difference)) delta.max_difference = td.max_difference;
      weighted += td.wasserstein * static_cast<double>(ta[t]->size());
      total += ta[t]->size();
      delta.per_tensor.push_back(std::move(td));
    }
    delta.wasserstein = weighted / static_cast<double>(total);
    out.push_back(std::move(delta));
  }
  return out;
}

ScenarioSuite RunScenarioSuite(const TrainRunConfig& base, int threads) {
  ValidateTrainRunConfig(base);
  const std::string fmt = base.train_format.name();
  auto with = [&](Variant v, uint64_t seed, const FloatFormat& f) {
    TrainRunConfig c = base;
    c.attention_variant = v;
    c.seed = seed;
    c.train_format = f;
    return c;
  };
  const uint64_t alt = base.seed + kAltInitSeedOffset;
  const std::vector<std::pair<std::string, TrainRunConfig>> plan = {
      {"baseline_" + fmt, with(Variant::kBaseline, base.seed, base.train_format)},
      {"flash_" + fmt, with(Variant::kFlash, base.seed, base.train_format)},
      {"baseline_" + fmt + "_alt_init",
       with(Variant::kBaseline, alt, base.train_format)},
      {"baseline_fp16", with(Variant::kBaseline, base.seed, FloatFormat::FP16())},
      {"baseline_fp32", with(Variant::kBaseline, base.seed, FloatFormat::FP32())},
  };
  std::vector<TrainRun> runs(plan.size());
  ParallelFor(plan.size(), threads,
              [&](size_t i) { runs[i] = RunTraining(plan[i].second); });

  ScenarioSuite suite;
  auto scenario = [&](std::string name, size_t ia, size_t ib) {
    return Scenario{std::move(name), plan[ia].first, plan[ib].first,
                    CompareRuns(runs[ia].checkpoints, runs[ib].checkpoints)};
  };
  suite.scenarios = {scenario("flash_vs_baseline", 1, 0),
                     scenario("different_init", 0, 2),
                     scenario("fp16_vs_fp32", 3, 4)};
  for (size_t i = 0; i < plan.size(); ++i) {
    suite.runs.emplace_back(plan[i].first, std::move(runs[i]));
  }
  return suite;
}

}  // namespace flashdev
