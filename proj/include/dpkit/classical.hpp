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

#ifndef DPKIT_CLASSICAL_HPP_
#define DPKIT_CLASSICAL_HPP_

#include <cstdint>
#include <vector>

#include "dpkit/data.hpp"

namespace dpkit {

// Flat feature matrix with labels; the shared input type of the classical
// classifiers.
struct LabeledVectors {
  std::vector<double> features;  // row-major rows x cols
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<int> labels;
  Split split = Split::kTrain;

  const double* row(std::int64_t i) const {
    return features.data() + i * cols;
  }
  void validate() const;  // rows >= 1, labels match rows, labels in {0..9}
};

// Flattens [N,3,32,32] images to N x 3072 rows.
LabeledVectors to_vectors(const Dataset& ds);

// k-nearest neighbors by Euclidean distance; majority vote over the k
// closest training rows, distance ties resolved by training index, vote ties
// by smallest label.
int knn_classify(const LabeledVectors& train, const double* query, int k = 10);

// Gaussian naive Bayes with per-class per-feature mean/variance, variance
// floored at kNbcVarianceFloor so constant features stay finite.
inline constexpr double kNbcVarianceFloor = 1e-9;

struct NbcModel {
  int classes = 0;
  std::int64_t cols = 0;
  std::vector<double> log_prior;  // [classes]
  std::vector<double> mean;       // [classes][cols]
  std::vector<double> variance;   // [classes][cols], floored
};

NbcModel nbc_fit(const LabeledVectors& train);
// Unnormalized log posterior per class: log prior + sum of per-feature
// Gaussian log densities.
std::vector<double> nbc_log_posterior(const NbcModel& model,
                                      const double* query);
int nbc_classify(const NbcModel& model, const double* query);

enum class KernelKind { kLinear, kPoly, kRbf, kSigmoid };

std::string to_string(KernelKind kind);
KernelKind kernel_from_string(const std::string& name);

// gamma = 0 means "resolve to 1/D at fit time"; after resolution gamma must
// be positive for every kernel but linear.
struct KernelSpec {
  KernelKind kind = KernelKind::kLinear;
  int degree = 3;      // poly only
  double gamma = 0.0;  // poly, rbf, sigmoid
  double coef0 = 0.0;  // poly, sigmoid

  void validate(bool resolved) const;
};

// linear: <x,y>; poly: (gamma <x,y> + coef0)^degree;
// rbf: exp(-gamma ||x-y||^2); sigmoid: tanh(gamma <x,y> + coef0).
double kernel_eval(const KernelSpec& spec, const double* x, const double* y,
                   std::int64_t dim);

// One-vs-rest soft-margin SVM. Each binary dual is solved by most-violating
// pair coordinate optimization until the KKT violation drops below tol or
// max_iter pair updates. The sigmoid kernel is not positive semidefinite;
// its subproblems may stop at max_iter, which is reported through
// `converged` (and a stderr warning) while the best iterate is kept.
struct SvmModel {
  KernelSpec kernel;  // resolved
  double c_reg = 1.0;
  int classes = 0;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<double> support;     // training features, row-major
  std::vector<double> coef;        // [classes][rows], alpha_i * y_i
  std::vector<double> bias;        // [classes]
  std::vector<int> iterations;     // per binary problem
  bool converged = true;
};

SvmModel svm_fit(const LabeledVectors& train, const KernelSpec& kernel,
                 double c_reg = 1.0, int max_iter = 10000, double tol = 1e-3);
double svm_decision(const SvmModel& model, int cls, const double* query);
int svm_classify(const SvmModel& model, const double* query);

// Shared metric pair: loss is the misclassification rate, so
// loss + accuracy == 1 by construction.
struct ClassicalMetrics {
  double accuracy = 0.0;
  double loss = 0.0;
};

ClassicalMetrics evaluate_knn(const LabeledVectors& train, int k,
                              const LabeledVectors& split);
ClassicalMetrics evaluate_nbc(const NbcModel& model,
                              const LabeledVectors& split);
ClassicalMetrics evaluate_svm(const SvmModel& model,
                              const LabeledVectors& split);

}  // namespace dpkit

#endif  // DPKIT_CLASSICAL_HPP_
