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

#include "dpkit/dp_optim.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "dpkit/accountant.hpp"
#include "dpkit/error.hpp"

namespace dpkit {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kRmsPropDecay = 0.99;
constexpr double kRmsPropEps = 1e-8;
constexpr double kAdagradEps = 1e-10;

}  // namespace

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd:
      return "sgd";
    case OptimizerKind::kAdam:
      return "adam";
    case OptimizerKind::kRmsProp:
      return "rmsprop";
    case OptimizerKind::kAdagrad:
      return "adagrad";
  }
  return "unknown";
}

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "rmsprop") return OptimizerKind::kRmsProp;
  if (name == "adagrad") return OptimizerKind::kAdagrad;
  throw ConfigError("unknown optimizer '" + name +
                    "' (expected sgd, adam, rmsprop, or adagrad)");
}

void DpTrainConfig::validate() const {
  if (batch_size < 1) {
    throw ConfigError("batch_size must be >= 1, got " +
                      std::to_string(batch_size));
  }
  if (!(epsilon > 0.0)) {
    throw ConfigError("epsilon must be positive, got " +
                      std::to_string(epsilon));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("delta must lie in (0, 1), got " +
                      std::to_string(delta));
  }
  if (!(clip_norm > 0.0)) {
    throw ConfigError("clip_norm must be positive, got " +
                      std::to_string(clip_norm));
  }
  if (!(learning_rate > 0.0)) {
    throw ConfigError("learning_rate must be positive, got " +
                      std::to_string(learning_rate));
  }
  if (epochs < 1) {
    throw ConfigError("epochs must be >= 1, got " + std::to_string(epochs));
  }
  if (noise_multiplier && !(*noise_multiplier >= 0.0)) {
    throw ConfigError("noise_multiplier must be >= 0, got " +
                      std::to_string(*noise_multiplier));
  }
  if (runs < 1) {
    throw ConfigError("runs must be >= 1, got " + std::to_string(runs));
  }
}

double DpTrainConfig::sigma_consistency_gap() const {
  if (!noise_multiplier || *noise_multiplier == 0.0) return 0.0;
  try {
    const double calibrated =
        calibrate_noise({epsilon, delta},
                        schedule_for(batch_size, epochs, kPresetDatasetSize));
    return std::abs(*noise_multiplier - calibrated);
  } catch (const CalibrationError&) {
    // No calibrated reference exists for this target; nothing to compare.
    return 0.0;
  }
}

OptimizerState make_optimizer_state(OptimizerKind kind,
                                    std::int64_t param_count) {
  if (param_count < 1) {
    throw InvalidArgument("optimizer state needs at least one parameter");
  }
  OptimizerState state;
  state.kind = kind;
  const std::size_t n = static_cast<std::size_t>(param_count);
  switch (kind) {
    case OptimizerKind::kSgd:
      break;
    case OptimizerKind::kAdam:
      state.m.assign(n, 0.0);
      state.v.assign(n, 0.0);
      break;
    case OptimizerKind::kRmsProp:
    case OptimizerKind::kAdagrad:
      state.v.assign(n, 0.0);
      break;
  }
  return state;
}

PerSampleGrads clip_per_sample(const PerSampleGrads& grads, double clip_norm) {
  if (!(clip_norm > 0.0)) {
    throw InvalidArgument("clip threshold must be positive, got " +
                          std::to_string(clip_norm));
  }
  PerSampleGrads out = grads;
  for (std::int64_t i = 0; i < out.rows; ++i) {
    double* row = out.row(i);
    double sq = 0.0;
    for (std::int64_t j = 0; j < out.cols; ++j) sq += row[j] * row[j];
    const double norm = std::sqrt(sq);
    if (norm > clip_norm) {
      const double scale = clip_norm / norm;
      for (std::int64_t j = 0; j < out.cols; ++j) row[j] *= scale;
    }
  }
  return out;
}

std::vector<double> privatize(const PerSampleGrads& grads, double clip_norm,
                              double sigma, double expected_batch, Rng& rng) {
  if (!(sigma >= 0.0)) {
    throw InvalidArgument("noise multiplier must be >= 0, got " +
                          std::to_string(sigma));
  }
  if (!(expected_batch > 0.0)) {
    throw InvalidArgument("expected batch size must be positive, got " +
                          std::to_string(expected_batch));
  }
  if (grads.cols < 1) {
    throw ShapeError("privatize: gradient matrix has no columns");
  }

  const PerSampleGrads clipped = clip_per_sample(grads, clip_norm);
  std::vector<double> out(static_cast<std::size_t>(clipped.cols), 0.0);
  for (std::int64_t i = 0; i < clipped.rows; ++i) {
    const double* row = clipped.row(i);
    for (std::int64_t j = 0; j < clipped.cols; ++j) {
      out[static_cast<std::size_t>(j)] += row[j];
    }
  }
  if (sigma > 0.0) {
    const double noise_std = sigma * clip_norm;
    for (double& g : out) g += noise_std * rng.gaussian();
  }
  // True division: multiplying by a rounded reciprocal would break the
  // exact-mean contract for sigma = 0.
  for (double& g : out) g /= expected_batch;
  return out;
}

void optimizer_step(OptimizerState& state, std::vector<double>& params,
                    const std::vector<double>& grad, double learning_rate) {
  if (params.size() != grad.size()) {
    throw ShapeError("optimizer_step: " + std::to_string(grad.size()) +
                     " gradient entries for " + std::to_string(params.size()) +
                     " parameters");
  }
  if (!(learning_rate > 0.0)) {
    throw InvalidArgument("learning rate must be positive, got " +
                          std::to_string(learning_rate));
  }
  const std::size_t n = params.size();
  auto check_slot = [&](const std::vector<double>& slot, const char* name) {
    if (slot.size() != n) {
      throw ShapeError(std::string("optimizer_step: accumulator ") + name +
                       " has " + std::to_string(slot.size()) +
                       " entries for " + std::to_string(n) + " parameters");
    }
  };

  state.step_count += 1;
  switch (state.kind) {
    case OptimizerKind::kSgd:
      for (std::size_t i = 0; i < n; ++i) {
        params[i] -= learning_rate * grad[i];
      }
      break;
    case OptimizerKind::kAdam: {
      check_slot(state.m, "m");
      check_slot(state.v, "v");
      const double t = static_cast<double>(state.step_count);
      const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
      const double bc2 = 1.0 - std::pow(kAdamBeta2, t);
      for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
        state.v[i] =
            kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEps);
      }
      break;
    }
    case OptimizerKind::kRmsProp:
      check_slot(state.v, "v");
      for (std::size_t i = 0; i < n; ++i) {
        state.v[i] = kRmsPropDecay * state.v[i] +
                     (1.0 - kRmsPropDecay) * grad[i] * grad[i];
        params[i] -=
            learning_rate * grad[i] / (std::sqrt(state.v[i]) + kRmsPropEps);
      }
      break;
    case OptimizerKind::kAdagrad:
      check_slot(state.v, "v");
      for (std::size_t i = 0; i < n; ++i) {
        state.v[i] += grad[i] * grad[i];
        params[i] -=
            learning_rate * grad[i] / (std::sqrt(state.v[i]) + kAdagradEps);
      }
      break;
  }
}

std::vector<MetricsRecord> train(const DpTrainConfig& config,
                                 ConvNetParams& model, const Dataset& train_ds,
                                 const Dataset& test_ds,
                                 const std::string& experiment_id,
                                 int run_index) {
  config.validate();
  train_ds.validate();
  test_ds.validate();
  model.widths.validate();

  const int n = train_ds.size();
  if (config.batch_size > n) {
    throw ConfigError("batch_size " + std::to_string(config.batch_size) +
                      " exceeds the training set size " + std::to_string(n));
  }
  const double q = static_cast<double>(config.batch_size) / n;
  const std::int64_t steps_per_epoch =
      (n + config.batch_size - 1) / config.batch_size;
  const SubsampleSchedule full_schedule{
      q, steps_per_epoch * static_cast<std::int64_t>(config.epochs)};

  const double sigma = config.noise_multiplier
                           ? *config.noise_multiplier
                           : calibrate_noise({config.epsilon, config.delta},
                                             full_schedule);
  const double gap = config.sigma_consistency_gap();
  if (gap > 0.05) {
    std::fprintf(stderr,
                 "warning: noise multiplier %.4f is %.4f away from the value "
                 "calibrated for epsilon=%g under the reference schedule\n",
                 sigma, gap, config.epsilon);
  }

  const std::int64_t p_count = model.param_count();
  std::vector<double> params = model.flat();
  OptimizerState state = make_optimizer_state(config.optimizer, p_count);
  PoissonSampler sampler(q, n, Rng::derive_seed(config.seed, 1));
  Rng noise_rng(Rng::derive_seed(config.seed, 2));

  const std::int64_t image_size =
      static_cast<std::int64_t>(kInputChannels) * kInputSide * kInputSide;
  // q * n algebraically; kept exact instead of re-rounded through q.
  const double expected_batch = static_cast<double>(config.batch_size);

  std::vector<MetricsRecord> records;
  records.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::int64_t s = 0; s < steps_per_epoch; ++s) {
      const std::vector<int> draw = sampler.next();
      std::vector<double> grad;
      if (draw.empty()) {
        PerSampleGrads empty;
        empty.rows = 0;
        empty.cols = p_count;
        grad = privatize(empty, config.clip_norm, sigma, expected_batch,
                         noise_rng);
      } else {
        const int k = static_cast<int>(draw.size());
        Tensor batch({k, kInputChannels, kInputSide, kInputSide});
        std::vector<int> labels(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
          const int src = draw[static_cast<std::size_t>(i)];
          std::memcpy(batch.data() + static_cast<std::int64_t>(i) * image_size,
                      train_ds.images.data() +
                          static_cast<std::int64_t>(src) * image_size,
                      static_cast<std::size_t>(image_size) * sizeof(double));
          labels[static_cast<std::size_t>(i)] =
              train_ds.labels[static_cast<std::size_t>(src)];
        }
        const PerSampleGrads per_sample =
            convnet_per_sample_grads(model, batch, labels);
        grad = privatize(per_sample, config.clip_norm, sigma, expected_batch,
                         noise_rng);
      }
      optimizer_step(state, params, grad, config.learning_rate);
      model.set_flat(params);
    }

    const EvalMetrics train_metrics =
        convnet_evaluate(model, train_ds.images, train_ds.labels);
    const EvalMetrics test_metrics =
        convnet_evaluate(model, test_ds.images, test_ds.labels);
    MetricsRecord rec;
    rec.experiment_id = experiment_id;
    rec.run = run_index;
    rec.epoch = epoch;
    rec.train_loss = train_metrics.loss;
    rec.train_acc = train_metrics.accuracy;
    rec.test_loss = test_metrics.loss;
    rec.test_acc = test_metrics.accuracy;
    rec.sigma = sigma;
    if (sigma == 0.0) {
      rec.epsilon_spent = std::numeric_limits<double>::infinity();
    } else {
      rec.epsilon_spent = epsilon_of(
          sigma, {q, steps_per_epoch * static_cast<std::int64_t>(epoch)},
          config.delta);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace dpkit
