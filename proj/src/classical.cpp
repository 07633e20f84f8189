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

#include "dpkit/classical.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>

#include "dpkit/error.hpp"

namespace dpkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

double squared_distance(const double* a, const double* b, std::int64_t d) {
  double sq = 0.0;
  for (std::int64_t j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    sq += diff * diff;
  }
  return sq;
}

double dot(const double* a, const double* b, std::int64_t d) {
  double s = 0.0;
  for (std::int64_t j = 0; j < d; ++j) s += a[j] * b[j];
  return s;
}

int max_label(const std::vector<int>& labels) {
  int m = 0;
  for (int l : labels) m = std::max(m, l);
  return m;
}

// One binary soft-margin dual, most-violating-pair selection over a
// precomputed Gram matrix. y entries are +1/-1.
struct BinarySolution {
  std::vector<double> alpha;
  double bias = 0.0;
  bool converged = true;
  int iterations = 0;
};

BinarySolution solve_binary(const std::vector<double>& gram,
                            const std::vector<double>& diag,
                            const std::vector<int>& y, double c_reg,
                            int max_iter, double tol) {
  const std::int64_t n = static_cast<std::int64_t>(y.size());
  BinarySolution sol;
  sol.alpha.assign(static_cast<std::size_t>(n), 0.0);

  bool has_pos = false, has_neg = false;
  for (int v : y) (v > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    // Degenerate one-class subproblem: alpha = 0 and the decision sits on
    // the lone class's margin.
    sol.bias = has_pos ? 1.0 : -1.0;
    return sol;
  }

  // G_i = d(dual objective)/d(alpha_i) = y_i f_i - 1 with f the biasless
  // decision value.
  std::vector<double> grad(static_cast<std::size_t>(n), -1.0);
  auto at = [&](std::int64_t i, std::int64_t j) { return gram[i * n + j]; };

  double up_value = 0.0, low_value = 0.0;
  while (true) {
    // Most violating pair: i maximizes -y G over the set that can grow the
    // objective upward, j minimizes it over the set that can move down.
    std::int64_t i = -1, j = -1;
    up_value = -std::numeric_limits<double>::infinity();
    low_value = std::numeric_limits<double>::infinity();
    for (std::int64_t t = 0; t < n; ++t) {
      const double v = -y[static_cast<std::size_t>(t)] *
                       grad[static_cast<std::size_t>(t)];
      const bool in_up = y[static_cast<std::size_t>(t)] > 0
                             ? sol.alpha[static_cast<std::size_t>(t)] < c_reg
                             : sol.alpha[static_cast<std::size_t>(t)] > 0.0;
      const bool in_low = y[static_cast<std::size_t>(t)] > 0
                              ? sol.alpha[static_cast<std::size_t>(t)] > 0.0
                              : sol.alpha[static_cast<std::size_t>(t)] < c_reg;
      if (in_up && v > up_value) {
        up_value = v;
        i = t;
      }
      if (in_low && v < low_value) {
        low_value = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || up_value - low_value < tol) break;
    if (sol.iterations >= max_iter) {
      sol.converged = false;
      break;
    }
    ++sol.iterations;

    // Feasible direction alpha_i += y_i t, alpha_j -= y_j t. The curvature
    // along it is K_ii + K_jj - 2 K_ij; non-PSD kernels can make it
    // nonpositive, in which case a tiny floor turns the step into a clipped
    // first-order move (best iterate semantics).
    const double yi = y[static_cast<std::size_t>(i)];
    const double yj = y[static_cast<std::size_t>(j)];
    double curvature = diag[static_cast<std::size_t>(i)] +
                       diag[static_cast<std::size_t>(j)] - 2.0 * at(i, j);
    if (curvature <= 0.0) curvature = 1e-12;
    double t_step = (up_value - low_value) / curvature;

    // Box limits for both coordinates.
    const double ai = sol.alpha[static_cast<std::size_t>(i)];
    const double aj = sol.alpha[static_cast<std::size_t>(j)];
    double t_max = std::numeric_limits<double>::infinity();
    t_max = std::min(t_max, yi > 0 ? c_reg - ai : ai);
    t_max = std::min(t_max, yj > 0 ? aj : c_reg - aj);
    t_step = std::min(t_step, t_max);

    sol.alpha[static_cast<std::size_t>(i)] = ai + yi * t_step;
    sol.alpha[static_cast<std::size_t>(j)] = aj - yj * t_step;
    for (std::int64_t a = 0; a < n; ++a) {
      grad[static_cast<std::size_t>(a)] +=
          y[static_cast<std::size_t>(a)] * t_step * (at(a, i) - at(a, j));
    }
  }

  // Bias from the free support vectors; midpoint of the violation interval
  // when every multiplier is at a bound.
  double b_sum = 0.0;
  int b_count = 0;
  for (std::int64_t t = 0; t < n; ++t) {
    const double a = sol.alpha[static_cast<std::size_t>(t)];
    if (a > 0.0 && a < c_reg) {
      b_sum += -y[static_cast<std::size_t>(t)] *
               grad[static_cast<std::size_t>(t)];
      ++b_count;
    }
  }
  sol.bias = b_count > 0 ? b_sum / b_count : (up_value + low_value) / 2.0;
  return sol;
}

}  // namespace

void LabeledVectors::validate() const {
  if (rows < 1 || cols < 1) {
    throw DataError("labeled vectors need at least one row and column, got " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (static_cast<std::int64_t>(features.size()) != rows * cols) {
    throw DataError("feature storage holds " +
                    std::to_string(features.size()) + " values for " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (static_cast<std::int64_t>(labels.size()) != rows) {
    throw DataError("got " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(rows) + " rows");
  }
  for (int l : labels) {
    if (l < 0 || l > 9) {
      throw DataError("label " + std::to_string(l) + " outside {0..9}");
    }
  }
}

LabeledVectors to_vectors(const Dataset& ds) {
  ds.validate();
  LabeledVectors v;
  v.rows = ds.size();
  v.cols = ds.images.size() / ds.size();
  v.features.assign(ds.images.data(), ds.images.data() + ds.images.size());
  v.labels = ds.labels;
  v.split = ds.split;
  return v;
}

int knn_classify(const LabeledVectors& train, const double* query, int k) {
  train.validate();
  if (k < 1 || k > train.rows) {
    throw InvalidArgument("k must lie in [1, " + std::to_string(train.rows) +
                          "], got " + std::to_string(k));
  }
  std::vector<std::pair<double, std::int64_t>> order;
  order.reserve(static_cast<std::size_t>(train.rows));
  for (std::int64_t i = 0; i < train.rows; ++i) {
    order.emplace_back(squared_distance(train.row(i), query, train.cols), i);
  }
  std::nth_element(order.begin(), order.begin() + (k - 1), order.end());
  std::sort(order.begin(), order.begin() + k);

  int votes[10] = {0};
  for (int t = 0; t < k; ++t) {
    votes[train.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(
        t)].second)]] += 1;
  }
  int best = 0;
  for (int l = 1; l < 10; ++l) {
    if (votes[l] > votes[best]) best = l;  // ties keep the smaller label
  }
  return best;
}

NbcModel nbc_fit(const LabeledVectors& train) {
  train.validate();
  NbcModel model;
  model.classes = max_label(train.labels) + 1;
  model.cols = train.cols;
  const std::size_t c = static_cast<std::size_t>(model.classes);
  const std::size_t d = static_cast<std::size_t>(model.cols);
  std::vector<std::int64_t> count(c, 0);
  model.mean.assign(c * d, 0.0);
  model.variance.assign(c * d, 0.0);
  model.log_prior.assign(c, 0.0);

  for (std::int64_t i = 0; i < train.rows; ++i) {
    const int l = train.labels[static_cast<std::size_t>(i)];
    count[static_cast<std::size_t>(l)] += 1;
    const double* x = train.row(i);
    double* mu = model.mean.data() + static_cast<std::size_t>(l) * d;
    for (std::size_t j = 0; j < d; ++j) mu[j] += x[j];
  }
  for (std::size_t l = 0; l < c; ++l) {
    if (count[l] < 1) {
      throw DataError("class " + std::to_string(l) +
                      " has no training samples");
    }
    double* mu = model.mean.data() + l * d;
    for (std::size_t j = 0; j < d; ++j) mu[j] /= static_cast<double>(count[l]);
    model.log_prior[l] = std::log(static_cast<double>(count[l]) /
                                  static_cast<double>(train.rows));
  }
  for (std::int64_t i = 0; i < train.rows; ++i) {
    const int l = train.labels[static_cast<std::size_t>(i)];
    const double* x = train.row(i);
    const double* mu = model.mean.data() + static_cast<std::size_t>(l) * d;
    double* var = model.variance.data() + static_cast<std::size_t>(l) * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x[j] - mu[j];
      var[j] += diff * diff;
    }
  }
  for (std::size_t l = 0; l < c; ++l) {
    double* var = model.variance.data() + l * d;
    for (std::size_t j = 0; j < d; ++j) {
      var[j] = std::max(var[j] / static_cast<double>(count[l]),
                        kNbcVarianceFloor);
    }
  }
  return model;
}

std::vector<double> nbc_log_posterior(const NbcModel& model,
                                      const double* query) {
  if (model.classes < 1 || model.cols < 1) {
    throw InvalidArgument("naive Bayes model is empty");
  }
  std::vector<double> post(static_cast<std::size_t>(model.classes));
  const std::size_t d = static_cast<std::size_t>(model.cols);
  for (std::size_t l = 0; l < post.size(); ++l) {
    const double* mu = model.mean.data() + l * d;
    const double* var = model.variance.data() + l * d;
    double acc = model.log_prior[l];
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = query[j] - mu[j];
      acc += -0.5 * std::log(2.0 * kPi * var[j]) -
             diff * diff / (2.0 * var[j]);
    }
    post[l] = acc;
  }
  return post;
}

int nbc_classify(const NbcModel& model, const double* query) {
  const std::vector<double> post = nbc_log_posterior(model, query);
  int best = 0;
  for (std::size_t l = 1; l < post.size(); ++l) {
    if (post[l] > post[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(l);
    }
  }
  return best;
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kLinear:
      return "linear";
    case KernelKind::kPoly:
      return "poly";
    case KernelKind::kRbf:
      return "rbf";
    case KernelKind::kSigmoid:
      return "sigmoid";
  }
  return "unknown";
}

KernelKind kernel_from_string(const std::string& name) {
  if (name == "linear") return KernelKind::kLinear;
  if (name == "poly") return KernelKind::kPoly;
  if (name == "rbf") return KernelKind::kRbf;
  if (name == "sigmoid") return KernelKind::kSigmoid;
  throw ConfigError("unknown kernel '" + name +
                    "' (expected linear, poly, rbf, or sigmoid)");
}

void KernelSpec::validate(bool resolved) const {
  if (degree < 1) {
    throw InvalidArgument("polynomial degree must be >= 1, got " +
                          std::to_string(degree));
  }
  if (gamma < 0.0) {
    throw InvalidArgument("kernel gamma must be >= 0, got " +
                          std::to_string(gamma));
  }
  if (resolved && kind != KernelKind::kLinear && !(gamma > 0.0)) {
    throw InvalidArgument("kernel gamma must be positive after resolution");
  }
}

double kernel_eval(const KernelSpec& spec, const double* x, const double* y,
                   std::int64_t dim) {
  spec.validate(/*resolved=*/true);
  switch (spec.kind) {
    case KernelKind::kLinear:
      return dot(x, y, dim);
    case KernelKind::kPoly:
      return std::pow(spec.gamma * dot(x, y, dim) + spec.coef0, spec.degree);
    case KernelKind::kRbf:
      return std::exp(-spec.gamma * squared_distance(x, y, dim));
    case KernelKind::kSigmoid:
      return std::tanh(spec.gamma * dot(x, y, dim) + spec.coef0);
  }
  throw InvalidArgument("unhandled kernel kind");
}

SvmModel svm_fit(const LabeledVectors& train, const KernelSpec& kernel,
                 double c_reg, int max_iter, double tol) {
  train.validate();
  kernel.validate(/*resolved=*/false);
  if (!(c_reg > 0.0)) {
    throw InvalidArgument("SVM regularization must be positive, got " +
                          std::to_string(c_reg));
  }
  if (max_iter < 1) {
    throw InvalidArgument("max_iter must be >= 1, got " +
                          std::to_string(max_iter));
  }
  if (!(tol > 0.0)) {
    throw InvalidArgument("tolerance must be positive, got " +
                          std::to_string(tol));
  }

  SvmModel model;
  model.kernel = kernel;
  if (model.kernel.gamma == 0.0) {
    model.kernel.gamma = 1.0 / static_cast<double>(train.cols);
  }
  model.kernel.validate(/*resolved=*/true);
  model.c_reg = c_reg;
  model.classes = max_label(train.labels) + 1;
  std::vector<char> seen(static_cast<std::size_t>(model.classes), 0);
  for (int l : train.labels) seen[static_cast<std::size_t>(l)] = 1;
  const auto present = std::count(seen.begin(), seen.end(), char{1});
  if (present < 2) {
    throw DataError("SVM needs at least two classes present, got " +
                    std::to_string(present));
  }
  model.rows = train.rows;
  model.cols = train.cols;
  model.support = train.features;

  const std::int64_t n = train.rows;
  std::vector<double> gram(static_cast<std::size_t>(n * n));
  std::vector<double> diag(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j <= i; ++j) {
      const double v =
          kernel_eval(model.kernel, train.row(i), train.row(j), train.cols);
      gram[static_cast<std::size_t>(i * n + j)] = v;
      gram[static_cast<std::size_t>(j * n + i)] = v;
    }
    diag[static_cast<std::size_t>(i)] =
        gram[static_cast<std::size_t>(i * n + i)];
  }

  model.coef.assign(static_cast<std::size_t>(model.classes) *
                        static_cast<std::size_t>(n),
                    0.0);
  model.bias.assign(static_cast<std::size_t>(model.classes), 0.0);
  model.iterations.assign(static_cast<std::size_t>(model.classes), 0);
  for (int cls = 0; cls < model.classes; ++cls) {
    std::vector<int> y(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] =
          train.labels[static_cast<std::size_t>(i)] == cls ? 1 : -1;
    }
    const BinarySolution sol =
        solve_binary(gram, diag, y, c_reg, max_iter, tol);
    double* coef = model.coef.data() +
                   static_cast<std::size_t>(cls) * static_cast<std::size_t>(n);
    for (std::int64_t i = 0; i < n; ++i) {
      coef[i] = sol.alpha[static_cast<std::size_t>(i)] *
                y[static_cast<std::size_t>(i)];
    }
    model.bias[static_cast<std::size_t>(cls)] = sol.bias;
    model.iterations[static_cast<std::size_t>(cls)] = sol.iterations;
    if (!sol.converged) {
      model.converged = false;
      std::fprintf(stderr,
                   "warning: SVM subproblem for class %d stopped at %d "
                   "iterations with the KKT gap above %g (%s kernel); "
                   "keeping the best iterate\n",
                   cls, sol.iterations, tol,
                   to_string(model.kernel.kind).c_str());
    }
  }
  return model;
}

double svm_decision(const SvmModel& model, int cls, const double* query) {
  if (cls < 0 || cls >= model.classes) {
    throw InvalidArgument("class " + std::to_string(cls) +
                          " outside [0, " + std::to_string(model.classes) +
                          ")");
  }
  const double* coef =
      model.coef.data() +
      static_cast<std::size_t>(cls) * static_cast<std::size_t>(model.rows);
  double value = model.bias[static_cast<std::size_t>(cls)];
  for (std::int64_t i = 0; i < model.rows; ++i) {
    if (coef[i] != 0.0) {
      value += coef[i] * kernel_eval(model.kernel,
                                     model.support.data() + i * model.cols,
                                     query, model.cols);
    }
  }
  return value;
}

int svm_classify(const SvmModel& model, const double* query) {
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int cls = 0; cls < model.classes; ++cls) {
    const double v = svm_decision(model, cls, query);
    if (v > best_value) {
      best_value = v;
      best = cls;
    }
  }
  return best;
}

namespace {

template <typename Predict>
ClassicalMetrics evaluate_with(const LabeledVectors& split,
                               const Predict& predict) {
  split.validate();
  std::int64_t correct = 0;
  for (std::int64_t i = 0; i < split.rows; ++i) {
    if (predict(split.row(i)) == split.labels[static_cast<std::size_t>(i)]) {
      ++correct;
    }
  }
  ClassicalMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(split.rows);
  m.loss = 1.0 - m.accuracy;
  return m;
}

}  // namespace

ClassicalMetrics evaluate_knn(const LabeledVectors& train, int k,
                              const LabeledVectors& split) {
  return evaluate_with(
      split, [&](const double* q) { return knn_classify(train, q, k); });
}

ClassicalMetrics evaluate_nbc(const NbcModel& model,
                              const LabeledVectors& split) {
  return evaluate_with(
      split, [&](const double* q) { return nbc_classify(model, q); });
}

ClassicalMetrics evaluate_svm(const SvmModel& model,
                              const LabeledVectors& split) {
  return evaluate_with(
      split, [&](const double* q) { return svm_classify(model, q); });
}

}  // namespace dpkit
