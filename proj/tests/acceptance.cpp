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

// Acceptance gate. Each criterion prints exactly one PASS / FAIL / SKIP line
// with its measured values; tolerances are pinned below, next to the checks.
//
// Usage: acceptance [N]   (run criterion N, or all ten without arguments)
// Exit codes: 0 all pass, 1 any failure, 77 skipped (missing input data).

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "dpkit/accountant.hpp"
#include "dpkit/classical.hpp"
#include "dpkit/convnet.hpp"
#include "dpkit/data.hpp"
#include "dpkit/dp_optim.hpp"
#include "dpkit/error.hpp"
#include "dpkit/harness.hpp"
#include "dpkit/mechanisms.hpp"
#include "dpkit/rng.hpp"

namespace dpkit {
namespace {

constexpr int kSkipExit = 77;

struct Outcome {
  bool pass = false;
  bool skip = false;
  std::string detail;
};

Outcome fail(std::string detail) { return {false, false, std::move(detail)}; }
Outcome pass(std::string detail) { return {true, false, std::move(detail)}; }
Outcome skip(std::string detail) { return {false, true, std::move(detail)}; }

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// Criterion 1: the published 20-row noise-multiplier column is reproduced to
// +/-0.05 absolute, and the abstract configuration (batch 256, epochs 100,
// epsilon 5) to +/-0.02 of 0.912.
Outcome criterion1() {
  constexpr double kRowTol = 0.05;
  constexpr double kAbstractTol = 0.02;
  constexpr double kAbstractSigma = 0.912;

  const std::vector<ExperimentSpec> rows = table1_preset();
  std::string failures;
  double worst = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const DpTrainConfig& c = rows[i].config;
    const SubsampleSchedule s =
        schedule_for(c.batch_size, c.epochs, kPresetDatasetSize);
    const double sigma = calibrate_noise({c.epsilon, c.delta}, s);
    const double want = *c.noise_multiplier;
    const double err = std::abs(sigma - want);
    worst = std::max(worst, err);
    if (err > kRowTol) {
      failures += fmt(" row %zu: sigma %.4f vs published %.2f (err %.4f);",
                      i + 1, sigma, want, err);
    }
  }

  const SubsampleSchedule abstract_s =
      schedule_for(256, 100, kPresetDatasetSize);
  const double abstract_sigma = calibrate_noise({5.0, 1e-5}, abstract_s);
  if (std::abs(abstract_sigma - kAbstractSigma) > kAbstractTol) {
    failures += fmt(" abstract: sigma %.4f vs %.3f +/- %.2f;", abstract_sigma,
                    kAbstractSigma, kAbstractTol);
  }

  if (!failures.empty()) {
    return fail("calibration misses tolerance:" + failures);
  }
  return pass(fmt("20 rows within %.2f (worst err %.4f); abstract sigma "
                  "%.4f within %.2f of %.3f",
                  kRowTol, worst, abstract_sigma, kAbstractTol,
                  kAbstractSigma));
}

// Criterion 2: epsilon_of(calibrate_noise(eps, s), s, delta) lands in
// [eps - 0.05, eps] over 200 randomized schedules.
Outcome criterion2() {
  constexpr double kLowSlack = 0.05;
  Rng rng(0xACC2);
  int checked = 0;
  double worst_gap = 0.0;
  for (int t = 0; t < 200; ++t) {
    const double q =
        std::exp(rng.uniform(std::log(1e-4), std::log(0.1)));
    const int epochs = 1 + static_cast<int>(rng.uniform_index(200));
    const std::int64_t steps_per_epoch =
        static_cast<std::int64_t>(std::ceil(1.0 / q));
    const SubsampleSchedule s{q, epochs * steps_per_epoch};
    const double eps = rng.uniform(0.5, 30.0);
    const double delta = 1e-5;
    const double sigma = calibrate_noise({eps, delta}, s);
    const double achieved = epsilon_of(sigma, s, delta);
    if (achieved > eps || achieved < eps - kLowSlack) {
      return fail(fmt("schedule %d (q %.6f, steps %lld, eps %.3f): achieved "
                      "%.5f outside [%.5f, %.5f]",
                      t, s.q, static_cast<long long>(s.steps), eps, achieved,
                      eps - kLowSlack, eps));
    }
    worst_gap = std::max(worst_gap, eps - achieved);
    ++checked;
  }
  return pass(fmt("%d randomized schedules in [eps - %.2f, eps]; worst gap "
                  "%.4f",
                  checked, kLowSlack, worst_gap));
}

// Criterion 3: classic conversion of the unit Gaussian (q=1, T=1, sigma=1,
// delta=1e-5) within 0.01 of the closed-form continuous-order minimum.
Outcome criterion3() {
  constexpr double kTol = 0.01;
  // min over alpha of alpha/2 + ln(1e5)/(alpha-1), at alpha-1 = sqrt(2 ln 1e5).
  const double s = std::sqrt(2.0 * std::log(1e5));
  const double closed_form = 0.5 * (1.0 + s) + std::log(1e5) / s;
  const double got =
      epsilon_of(1.0, SubsampleSchedule{1.0, 1}, 1e-5, RdpConversion::kClassic);
  const double err = std::abs(got - closed_form);
  if (err > kTol) {
    return fail(fmt("grid epsilon %.6f vs closed form %.6f (err %.6f > %.2f)",
                    got, closed_form, err, kTol));
  }
  return pass(fmt("grid epsilon %.6f vs closed form %.6f (err %.6f <= %.2f)",
                  got, closed_form, err, kTol));
}

// Criterion 4: central finite differences over every parameter of a reduced
// ConvNet agree with the autodiff gradient; per-sample rows sum to the batch
// gradient.
Outcome criterion4() {
  constexpr double kFdRelTol = 1e-3;
  constexpr double kFdDenomFloor = 1e-4;  // guards dead-unit zero gradients
  constexpr double kRowSumRelTol = 1e-9;
  constexpr double kStep = 1e-5;

  const ConvNetWidths widths{2, 2, 4, 4};
  ConvNetParams params = convnet_init(20260814, widths);
  const std::int64_t p = params.param_count();
  if (p > 5000) {
    return fail(fmt("reduced model has %lld params, want <= 5000",
                    static_cast<long long>(p)));
  }

  // Dense random inputs keep preactivations continuously distributed; exact
  // zeros (sparse input x zero bias) would park units on the ReLU kink.
  Rng rng(0xACC4);
  Tensor image({1, kInputChannels, kInputSide, kInputSide});
  for (std::int64_t i = 0; i < image.size(); ++i) {
    image.data()[i] = rng.gaussian();
  }
  const std::vector<int> image_label = {3};

  const PerSampleGrads single =
      convnet_per_sample_grads(params, image, image_label);
  const double* analytic = single.row(0);

  // A central difference that straddles a ReLU kink is wrong by O(1) no
  // matter how small the analytic error is, so each parameter may retry on
  // a shrinking step: kink artifacts vanish once the step drops below the
  // kink distance, while a genuine gradient bug fails at every step size.
  const double kSteps[3] = {kStep, kStep / 10.0, kStep / 100.0};
  std::vector<double> flat = params.flat();
  double worst_rel = 0.0;
  std::int64_t worst_index = -1;
  ConvNetParams probe = params;
  for (std::int64_t k = 0; k < p; ++k) {
    const std::size_t uk = static_cast<std::size_t>(k);
    const double saved = flat[uk];
    double rel = std::numeric_limits<double>::infinity();
    for (double h : kSteps) {
      flat[uk] = saved + h;
      probe.set_flat(flat);
      const double up = convnet_evaluate(probe, image, image_label).loss;
      flat[uk] = saved - h;
      probe.set_flat(flat);
      const double down = convnet_evaluate(probe, image, image_label).loss;
      const double fd = (up - down) / (2.0 * h);
      const double an = analytic[k];
      rel = std::abs(fd - an) /
            std::max({std::abs(fd), std::abs(an), kFdDenomFloor});
      if (rel < kFdRelTol) break;
    }
    flat[uk] = saved;
    if (rel > worst_rel) {
      worst_rel = rel;
      worst_index = k;
    }
  }
  probe.set_flat(flat);
  if (worst_rel >= kFdRelTol) {
    return fail(fmt("finite differences disagree at param %lld: rel err "
                    "%.3e >= %.0e",
                    static_cast<long long>(worst_index), worst_rel, kFdRelTol));
  }

  // Row-sum identity: per-sample rows against one batched tape.
  Tensor images({4, kInputChannels, kInputSide, kInputSide});
  for (std::int64_t i = 0; i < images.size(); ++i) {
    images.data()[i] = rng.gaussian();
  }
  const std::vector<int> labels = {0, 1, 2, 3};
  const PerSampleGrads per_sample =
      convnet_per_sample_grads(params, images, labels);
  const double b = static_cast<double>(per_sample.rows);
  std::vector<double> mean_rows(static_cast<std::size_t>(p), 0.0);
  for (std::int64_t i = 0; i < per_sample.rows; ++i) {
    const double* row = per_sample.row(i);
    for (std::int64_t k = 0; k < p; ++k) {
      mean_rows[static_cast<std::size_t>(k)] += row[k] / b;
    }
  }

  Tape tape;
  const Tape::NodeId logits = convnet_build(tape, params, images);
  const Tape::NodeId loss = tape.softmax_cross_entropy(logits, labels);
  const std::vector<Tensor> grads = tape.backward(loss);
  std::vector<double> batched;
  batched.reserve(static_cast<std::size_t>(p));
  for (const Tensor& g : grads) {
    const double* d = g.data();
    batched.insert(batched.end(), d, d + g.size());
  }
  double diff2 = 0.0, norm2 = 0.0;
  for (std::int64_t k = 0; k < p; ++k) {
    const std::size_t uk = static_cast<std::size_t>(k);
    const double row_sum = mean_rows[uk] * b;      // sum of per-sample rows
    const double batch_sum = batched[uk] * b;      // gradient of summed loss
    diff2 += (row_sum - batch_sum) * (row_sum - batch_sum);
    norm2 += row_sum * row_sum;
  }
  const double rel = std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-300);
  if (rel > kRowSumRelTol) {
    return fail(fmt("per-sample row sum vs batch gradient: rel err %.3e > "
                    "%.0e",
                    rel, kRowSumRelTol));
  }
  return pass(fmt("%lld params: worst FD rel err %.3e < %.0e; row-sum rel "
                  "err %.3e <= %.0e",
                  static_cast<long long>(p), worst_rel, kFdRelTol, rel,
                  kRowSumRelTol));
}

// Criterion 5: after clip_per_sample every row norm is <= C + 1e-9, over
// 1000 randomized batches and thresholds.
Outcome criterion5() {
  constexpr double kSlack = 1e-9;
  Rng rng(0xACC5);
  int rows_checked = 0;
  for (int t = 0; t < 1000; ++t) {
    PerSampleGrads g;
    g.rows = 1 + static_cast<std::int64_t>(rng.uniform_index(16));
    g.cols = 1 + static_cast<std::int64_t>(rng.uniform_index(64));
    g.data.resize(static_cast<std::size_t>(g.rows * g.cols));
    const double scale = std::exp(rng.uniform(-3.0, 3.0));
    for (double& x : g.data) x = scale * rng.gaussian();
    const double c = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
    const PerSampleGrads clipped = clip_per_sample(g, c);
    for (std::int64_t i = 0; i < clipped.rows; ++i) {
      double norm2 = 0.0;
      const double* row = clipped.row(i);
      for (std::int64_t j = 0; j < clipped.cols; ++j) norm2 += row[j] * row[j];
      if (std::sqrt(norm2) > c + kSlack) {
        return fail(fmt("batch %d row %lld: norm %.12f > C %.12f + 1e-9", t,
                        static_cast<long long>(i), std::sqrt(norm2), c));
      }
      ++rows_checked;
    }
  }
  return pass(fmt("%d rows across 1000 batches all within C + 1e-9",
                  rows_checked));
}

// Criterion 6: Gaussian noise injected by privatize and Laplace noise from
// the mechanism pass 2% variance checks on >= 1e6 samples; Laplace passes a
// KS test at distance < 0.002.
Outcome criterion6() {
  constexpr double kVarTol = 0.02;
  constexpr double kKsTol = 0.002;
  constexpr std::int64_t kSamples = 1 << 20;  // 1048576

  // privatize on an empty draw is pure noise scaled by 1/expected_batch.
  const double clip = 0.7, sigma = 1.3;
  PerSampleGrads empty;
  empty.rows = 0;
  empty.cols = kSamples;
  Rng g_rng(0xACC6);
  const std::vector<double> noise =
      privatize(empty, clip, sigma, 1.0, g_rng);
  double mean = 0.0;
  for (double x : noise) mean += x;
  mean /= static_cast<double>(kSamples);
  double var = 0.0;
  for (double x : noise) var += (x - mean) * (x - mean);
  var /= static_cast<double>(kSamples - 1);
  const double want_var = sigma * sigma * clip * clip;
  const double g_rel = std::abs(var - want_var) / want_var;
  if (g_rel > kVarTol) {
    return fail(fmt("gaussian variance %.6f vs %.6f (rel %.4f > %.2f)", var,
                    want_var, g_rel, kVarTol));
  }

  const LaplaceParams params{2.0, 1.0};  // b = 0.5
  const double b = params.scale();
  Rng l_rng(0xACC7);
  std::vector<double> lap(static_cast<std::size_t>(kSamples));
  for (double& x : lap) x = sample_laplace(b, l_rng);
  double l_mean = 0.0;
  for (double x : lap) l_mean += x;
  l_mean /= static_cast<double>(kSamples);
  double l_var = 0.0;
  for (double x : lap) l_var += (x - l_mean) * (x - l_mean);
  l_var /= static_cast<double>(kSamples - 1);
  const double want_l_var = 2.0 * b * b;
  const double l_rel = std::abs(l_var - want_l_var) / want_l_var;
  if (l_rel > kVarTol) {
    return fail(fmt("laplace variance %.6f vs %.6f (rel %.4f > %.2f)", l_var,
                    want_l_var, l_rel, kVarTol));
  }

  std::sort(lap.begin(), lap.end());
  double ks = 0.0;
  for (std::int64_t i = 0; i < kSamples; ++i) {
    const double x = lap[static_cast<std::size_t>(i)];
    const double cdf =
        x < 0.0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
    const double lo = static_cast<double>(i) / kSamples;
    const double hi = static_cast<double>(i + 1) / kSamples;
    ks = std::max({ks, std::abs(cdf - lo), std::abs(cdf - hi)});
  }
  if (ks >= kKsTol) {
    return fail(fmt("laplace KS distance %.5f >= %.3f", ks, kKsTol));
  }
  return pass(fmt("gaussian var rel err %.4f, laplace var rel err %.4f "
                  "(tol %.2f); KS %.5f < %.3f",
                  g_rel, l_rel, kVarTol, ks, kKsTol));
}

// Criterion 7: classifier oracles. KNN == brute force on 100 desk queries;
// NBC matches a direct log-density computation to 1e-12; RBF solves XOR at
// 100% train accuracy while linear stays <= 75%; loss = 1 - accuracy on
// every evaluate() output including the 6/26 granularity case.
Outcome criterion7() {
  constexpr double kNbcTol = 1e-12;

  Rng rng(0xACC8);
  LabeledVectors train;
  train.rows = 50;
  train.cols = 5;
  train.features.resize(250);
  for (double& x : train.features) x = rng.gaussian();
  train.labels.resize(50);
  for (int& l : train.labels) l = static_cast<int>(rng.uniform_index(10));

  for (int t = 0; t < 100; ++t) {
    double q[5];
    for (double& x : q) x = rng.gaussian();
    // Exhaustive-sort oracle with the same tie rules.
    std::vector<std::pair<double, int>> order;
    for (int i = 0; i < 50; ++i) {
      double d2 = 0.0;
      for (int j = 0; j < 5; ++j) {
        const double diff = train.row(i)[j] - q[j];
        d2 += diff * diff;
      }
      order.emplace_back(d2, i);
    }
    std::sort(order.begin(), order.end());
    int votes[10] = {0};
    for (int i = 0; i < 10; ++i) votes[train.labels[
        static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)]]++;
    int want = 0;
    for (int l = 1; l < 10; ++l) {
      if (votes[l] > votes[want]) want = l;
    }
    const int got = knn_classify(train, q, 10);
    if (got != want) {
      return fail(fmt("knn query %d: got %d, brute force %d", t, got, want));
    }
  }

  // NBC: refit on data with every class present, compare posteriors against
  // a direct density evaluation from the fitted statistics.
  LabeledVectors nbc_train = train;
  for (int i = 0; i < 10; ++i) nbc_train.labels[static_cast<std::size_t>(i)] = i;
  const NbcModel model = nbc_fit(nbc_train);
  double worst_nbc = 0.0;
  for (int t = 0; t < 20; ++t) {
    double q[5];
    for (double& x : q) x = rng.gaussian();
    const std::vector<double> post = nbc_log_posterior(model, q);
    for (int c = 0; c < model.classes; ++c) {
      long double want = model.log_prior[static_cast<std::size_t>(c)];
      for (int j = 0; j < 5; ++j) {
        const long double mu =
            model.mean[static_cast<std::size_t>(c * 5 + j)];
        const long double v =
            model.variance[static_cast<std::size_t>(c * 5 + j)];
        const long double diff = q[j] - mu;
        want += -0.5L * std::log(2.0L * 3.14159265358979323846L * v) -
                diff * diff / (2.0L * v);
      }
      const double err = std::abs(post[static_cast<std::size_t>(c)] -
                                  static_cast<double>(want));
      worst_nbc = std::max(worst_nbc, err);
    }
  }
  if (worst_nbc > kNbcTol) {
    return fail(fmt("nbc posterior err %.3e > 1e-12", worst_nbc));
  }

  // XOR separability by kernel.
  LabeledVectors xor_set;
  xor_set.rows = 4;
  xor_set.cols = 2;
  xor_set.features = {0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0};
  xor_set.labels = {0, 0, 1, 1};
  const SvmModel rbf =
      svm_fit(xor_set, KernelSpec{KernelKind::kRbf, 3, 1.0, 0.0});
  const ClassicalMetrics rbf_m = evaluate_svm(rbf, xor_set);
  const SvmModel lin =
      svm_fit(xor_set, KernelSpec{KernelKind::kLinear, 3, 0.0, 0.0});
  const ClassicalMetrics lin_m = evaluate_svm(lin, xor_set);
  if (rbf_m.accuracy != 1.0) {
    return fail(fmt("rbf XOR train accuracy %.4f != 1", rbf_m.accuracy));
  }
  if (lin_m.accuracy > 0.75) {
    return fail(fmt("linear XOR train accuracy %.4f > 0.75", lin_m.accuracy));
  }

  // loss = 1 - accuracy on every output; 6/26 correct reproduces the
  // 0.7692 / 23.08% relation.
  LabeledVectors grid;
  grid.rows = 26;
  grid.cols = 3;
  grid.features.resize(78);
  for (double& x : grid.features) x = rng.gaussian();
  grid.labels.resize(26);
  for (int i = 0; i < 26; ++i) grid.labels[static_cast<std::size_t>(i)] =
      static_cast<int>(rng.uniform_index(10));
  LabeledVectors relabeled = grid;
  for (int i = 6; i < 26; ++i) {
    relabeled.labels[static_cast<std::size_t>(i)] =
        (relabeled.labels[static_cast<std::size_t>(i)] + 1) % 10;
  }
  const ClassicalMetrics m26 = evaluate_knn(relabeled, 1, grid);
  for (const ClassicalMetrics& m : {rbf_m, lin_m, m26}) {
    if (m.loss != 1.0 - m.accuracy) {
      return fail(fmt("loss %.17g != 1 - accuracy (%.17g)", m.loss,
                      1.0 - m.accuracy));
    }
  }
  if (std::abs(m26.accuracy - 6.0 / 26.0) > 1e-12 ||
      std::abs(m26.loss - 0.7692) > 5e-5) {
    return fail(fmt("granularity case: accuracy %.6f, loss %.6f (want "
                    "6/26 and ~0.7692)",
                    m26.accuracy, m26.loss));
  }
  return pass(fmt("knn == brute force on 100 queries; nbc err %.1e <= 1e-12; "
                  "XOR rbf %.0f%% vs linear %.0f%%; loss = 1 - acc incl. "
                  "%.4f/%.4f",
                  worst_nbc, 100.0 * rbf_m.accuracy, 100.0 * lin_m.accuracy,
                  m26.loss, m26.accuracy));
}

// Criterion 8: end-to-end sanity on the real dataset. Skipped with a visible
// reason when the CIFAR-10 binaries are not present.
Outcome criterion8() {
  constexpr double kMinTestAcc = 0.35;
  constexpr double kMaxEpsSpent = 5.05;

  const char* env = std::getenv("DPKIT_DATA_DIR");
  const std::string dir = env != nullptr ? env : "data";
  Dataset train_full, test_ds;
  try {
    auto loaded = load_cifar10(dir);
    train_full = std::move(loaded.first);
    test_ds = std::move(loaded.second);
  } catch (const std::exception& e) {
    return skip(fmt("CIFAR-10 not available under '%s' (%s); set "
                    "DPKIT_DATA_DIR to run this criterion",
                    dir.c_str(), e.what()));
  }
  const Dataset train_ds = subset(train_full, 5000);

  // Non-private run: sigma 0, effectively unbounded clipping.
  DpTrainConfig nonpriv;
  nonpriv.optimizer = OptimizerKind::kAdam;
  nonpriv.batch_size = 128;
  nonpriv.learning_rate = 1e-3;
  nonpriv.epochs = 10;
  nonpriv.clip_norm = 1e9;
  nonpriv.noise_multiplier = 0.0;
  nonpriv.seed = 1;
  ConvNetParams model = convnet_init(1, ConvNetWidths{});
  const std::vector<MetricsRecord> np_recs =
      train(nonpriv, model, train_ds, test_ds, "cifar-nonprivate");
  const double np_acc = np_recs.back().test_acc;
  if (np_acc < kMinTestAcc) {
    return fail(fmt("non-private test accuracy %.4f < %.2f after %d epochs",
                    np_acc, kMinTestAcc, nonpriv.epochs));
  }

  // Private run: sigma calibrated for epsilon 5 over this schedule.
  DpTrainConfig priv;
  priv.optimizer = OptimizerKind::kAdam;
  priv.batch_size = 256;
  priv.learning_rate = 1e-3;
  priv.epochs = 10;
  priv.clip_norm = 1.0;
  priv.epsilon = 5.0;
  priv.delta = 1e-5;
  priv.seed = 1;
  ConvNetParams priv_model = convnet_init(2, ConvNetWidths{});
  const std::vector<MetricsRecord> recs =
      train(priv, priv_model, train_ds, test_ds, "cifar-dp");
  for (const MetricsRecord& r : recs) {
    if (!(r.epsilon_spent <= kMaxEpsSpent)) {
      return fail(fmt("epoch %d: epsilon spent %.4f > %.2f", r.epoch,
                      r.epsilon_spent, kMaxEpsSpent));
    }
  }
  return pass(fmt("non-private test acc %.4f >= %.2f; private epsilon spent "
                  "%.4f <= %.2f at every epoch",
                  np_acc, kMinTestAcc, recs.back().epsilon_spent,
                  kMaxEpsSpent));
}

// Criterion 9: direction of the privacy/utility tradeoff at desk scale.
// Mean final test accuracy over 3 seeds is nonincreasing across
// eps in {20, 5, 1}, with a 2-point tolerance.
Outcome criterion9() {
  constexpr double kTolerance = 0.02;  // two accuracy points
  const double epsilons[3] = {20.0, 5.0, 1.0};
  double acc[3] = {0.0, 0.0, 0.0};

  std::vector<ExperimentSpec> specs;
  for (int i = 0; i < 3; ++i) {
    ExperimentSpec s;
    s.id = fmt("finding1-eps%g", epsilons[i]);
    s.widths = ConvNetWidths{2, 2, 2, 2};
    s.dataset = "synthetic";
    s.dataset_seed = 1;
    s.synth_classes = 4;
    s.synth_per_class = 128;  // train 512, rate 32/512 per step
    s.synth_test_per_class = 16;
    s.synth_separation = 6.0;
    s.config.optimizer = OptimizerKind::kSgd;
    s.config.batch_size = 32;
    s.config.learning_rate = 1.0;
    s.config.epochs = 5;
    s.config.clip_norm = 1.0;
    s.config.epsilon = epsilons[i];
    s.config.delta = 1e-5;
    s.config.seed = 1;
    s.config.runs = 3;  // averaged criteria always use 3 runs
    specs.push_back(std::move(s));
  }

  const GridOutput out = run_grid(specs);
  const std::vector<SummaryRow> rows = summarize(out.results);
  if (rows.size() != 3) {
    std::string errors;
    for (const ExperimentResult& r : out.results) {
      if (!r.ok) errors += " " + r.id + ": " + r.error + ";";
    }
    return fail("desk benchmark did not complete:" + errors);
  }
  for (int i = 0; i < 3; ++i) acc[i] = rows[static_cast<std::size_t>(i)].test_acc;

  const bool monotone = acc[0] >= acc[1] - kTolerance &&
                        acc[1] >= acc[2] - kTolerance;
  const bool beats_chance = acc[0] > 0.25;
  const std::string detail =
      fmt("mean final test acc: eps 20 -> %.4f, eps 5 -> %.4f, eps 1 -> "
          "%.4f (tolerance %.2f)",
          acc[0], acc[1], acc[2], kTolerance);
  if (!monotone) return fail("accuracy not nonincreasing: " + detail);
  if (!beats_chance) return fail("eps 20 does not beat chance: " + detail);
  return pass(detail);
}

// Criterion 10: grid runs with fixed seeds emit byte-identical CSV; report
// emits byte-identical SVG for identical CSV.
Outcome criterion10() {
  std::vector<ExperimentSpec> specs;
  for (int i = 0; i < 2; ++i) {
    ExperimentSpec s;
    s.id = fmt("det-%d", i);
    s.widths = ConvNetWidths{2, 2, 2, 2};
    s.dataset = "synthetic";
    s.synth_classes = 2;
    s.synth_per_class = 8;
    s.synth_test_per_class = 4;
    s.synth_separation = 4.0;
    s.config.batch_size = 8;
    s.config.epochs = 2;
    s.config.epsilon = 0.83;  // consistent with noise_multiplier 0.8
    s.config.learning_rate = 0.1;
    s.config.noise_multiplier = 0.8;
    s.config.seed = 11 + static_cast<std::uint64_t>(i);
    s.config.runs = i + 1;
    s.config.optimizer = i == 0 ? OptimizerKind::kSgd : OptimizerKind::kAdam;
    specs.push_back(std::move(s));
  }

  const std::string csv1 = csv_to_string(run_grid(specs).records);
  const std::string csv2 = csv_to_string(run_grid(specs).records);
  if (csv1 != csv2) {
    return fail(fmt("two grid runs produced different CSV bytes (%zu vs %zu "
                    "chars)",
                    csv1.size(), csv2.size()));
  }
  const std::string svg1 = render_report(parse_csv(csv1));
  const std::string svg2 = render_report(parse_csv(csv1));
  if (svg1 != svg2) {
    return fail("report is not byte-deterministic for identical CSV");
  }
  return pass(fmt("grid CSV byte-identical across runs (%zu bytes); report "
                  "SVG byte-identical (%zu bytes)",
                  csv1.size(), svg1.size()));
}

using CriterionFn = Outcome (*)();
constexpr CriterionFn kCriteria[10] = {
    criterion1, criterion2, criterion3, criterion4, criterion5,
    criterion6, criterion7, criterion8, criterion9, criterion10};

const char* const kTitles[10] = {
    "calibration golden table",
    "accountant self-consistency",
    "classic conversion closed form",
    "gradient correctness",
    "clipping invariant",
    "noise statistics",
    "classifier oracles",
    "desk training sanity (CIFAR-10)",
    "finding-1 direction",
    "determinism",
};

int run_one(int index) {
  Outcome result;
  try {
    result = kCriteria[index]();
  } catch (const std::exception& e) {
    result = fail(fmt("unexpected exception: %s", e.what()));
  }
  const char* verdict = result.skip ? "SKIP" : (result.pass ? "PASS" : "FAIL");
  std::printf("criterion %d (%s): %s - %s\n", index + 1, kTitles[index],
              verdict, result.detail.c_str());
  std::fflush(stdout);
  if (result.skip) return kSkipExit;
  return result.pass ? 0 : 1;
}

}  // namespace
}  // namespace dpkit

int main(int argc, char** argv) {
  if (argc > 2) {
    std::fprintf(stderr, "usage: %s [criterion 1..10]\n", argv[0]);
    return 1;
  }
  if (argc == 2) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > 10) {
      std::fprintf(stderr, "usage: %s [criterion 1..10]\n", argv[0]);
      return 1;
    }
    return dpkit::run_one(n - 1);
  }
  int failures = 0;
  int skips = 0;
  for (int i = 0; i < 10; ++i) {
    const int rc = dpkit::run_one(i);
    if (rc == dpkit::kSkipExit) {
      ++skips;
    } else if (rc != 0) {
      ++failures;
    }
  }
  std::printf("%d passed, %d failed, %d skipped\n", 10 - failures - skips,
              failures, skips);
  return failures > 0 ? 1 : 0;
}
