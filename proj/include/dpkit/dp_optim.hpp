// Copyright 2026 The dpkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPKIT_DP_OPTIM_HPP_
#define DPKIT_DP_OPTIM_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpkit/autodiff.hpp"
#include "dpkit/convnet.hpp"
#include "dpkit/data.hpp"
#include "dpkit/metrics.hpp"
#include "dpkit/rng.hpp"

namespace dpkit {

enum class OptimizerKind { kSgd, kAdam, kRmsProp, kAdagrad };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

// One DP-SGD run: per-sample clipping at clip_norm, Gaussian noise of scale
// sigma * clip_norm added to the summed batch gradient, expected-batch-size
// averaging, then the chosen first-order update rule.
struct DpTrainConfig {
  OptimizerKind optimizer = OptimizerKind::kSgd;
  int batch_size = 128;
  double epsilon = 5.0;
  double delta = 1e-5;
  double clip_norm = 1.0;
  double learning_rate = 0.05;
  int epochs = 10;
  // Calibrated from (epsilon, delta) and the schedule when absent. Zero
  // disables both noise and accounting (epsilon_spent reports +inf).
  std::optional<double> noise_multiplier;
  std::uint64_t seed = 1;
  int runs = 1;

  void validate() const;  // ConfigError on any out-of-range field

  // Gap between the configured noise multiplier and the one calibrated for
  // (epsilon, delta, batch_size, epochs) under the reference-table schedule
  // convention (dataset size kPresetDatasetSize). Zero when the multiplier
  // is absent, zero, or matches. train() warns when the gap exceeds 0.05
  // rather than failing: published rows are pinned to two decimals and one
  // of them sits farther from its calibrated value than that.
  double sigma_consistency_gap() const;
};

// Flat accumulators matching ConvNetParams::flat() order. Only the slots the
// rule needs are allocated: Adam uses m and v, RMSProp and Adagrad use v
// alone, SGD neither.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  std::int64_t step_count = 0;
  std::vector<double> m;
  std::vector<double> v;
};

OptimizerState make_optimizer_state(OptimizerKind kind,
                                    std::int64_t param_count);

// Scales each row to norm at most clip_norm: g_i *= min(1, C / ||g_i||_2).
PerSampleGrads clip_per_sample(const PerSampleGrads& grads, double clip_norm);

// (sum_i clip(g_i) + N(0, sigma^2 C^2 I)) / expected_batch. Clipping happens
// inside; rows may be empty (pure-noise step). sigma = 0 adds nothing and
// leaves the RNG untouched.
std::vector<double> privatize(const PerSampleGrads& grads, double clip_norm,
                              double sigma, double expected_batch, Rng& rng);

// Applies one update of the state's rule to params in place and advances the
// step counter. Defaults: Adam beta1 0.9, beta2 0.999, eps 1e-8 (added after
// the square root, bias-corrected); RMSProp decay 0.99, eps 1e-8; Adagrad
// eps 1e-10; SGD without momentum.
void optimizer_step(OptimizerState& state, std::vector<double>& params,
                    const std::vector<double>& grad, double learning_rate);

// Full training loop: epochs * ceil(N / batch_size) Poisson-sampled noisy
// updates at rate q = batch_size / N, one MetricsRecord per epoch (full
// train and test evaluation plus epsilon spent so far). Empty draws still
// execute a pure-noise update and count toward the privacy budget. The
// model is updated in place. Deterministic for a fixed config and seed.
std::vector<MetricsRecord> train(const DpTrainConfig& config,
                                 ConvNetParams& model, const Dataset& train_ds,
                                 const Dataset& test_ds,
                                 const std::string& experiment_id = "train",
                                 int run_index = 0);

}  // namespace dpkit

#endif  // DPKIT_DP_OPTIM_HPP_
