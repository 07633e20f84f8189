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

#include "dpkit/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpkit/error.hpp"

namespace dpkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log C(n, k) via lgamma; exact enough for n <= a few thousand.
double log_binom(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("delta must lie in (0, 1), got " +
                          std::to_string(delta));
  }
}

void check_schedule(const SubsampleSchedule& s) {
  if (!(s.q >= 0.0 && s.q <= 1.0)) {
    throw InvalidArgument("sampling rate q must lie in [0, 1], got " +
                          std::to_string(s.q));
  }
  if (s.steps < 0) {
    throw InvalidArgument("schedule steps must be non-negative, got " +
                          std::to_string(s.steps));
  }
}

void check_sigma(double sigma) {
  if (sigma == 0.0) {
    throw InvalidArgument(
        "sigma = 0 adds no noise; privacy loss is unbounded");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("sigma must be positive and finite, got " +
                          std::to_string(sigma));
  }
}

}  // namespace

const std::vector<double>& default_orders() {
  static const std::vector<double> orders = [] {
    std::vector<double> v;
    v.reserve(255);
    for (int a = 2; a <= 256; ++a) v.push_back(static_cast<double>(a));
    return v;
  }();
  return orders;
}

double rdp_gaussian(double order, double sigma) {
  if (!(order > 1.0)) {
    throw InvalidArgument("RDP order must exceed 1, got " +
                          std::to_string(order));
  }
  check_sigma(sigma);
  return order / (2.0 * sigma * sigma);
}

double rdp_subsampled_gaussian(std::int64_t order, double q, double sigma) {
  if (order < 2) {
    throw InvalidArgument("subsampled RDP order must be an integer >= 2, got " +
                          std::to_string(order));
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw InvalidArgument("sampling rate q must lie in [0, 1], got " +
                          std::to_string(q));
  }
  check_sigma(sigma);
  if (q == 0.0) return 0.0;
  if (q == 1.0) return rdp_gaussian(static_cast<double>(order), sigma);

  // log of sum_{k=0..a} C(a,k) (1-q)^(a-k) q^k exp(k(k-1)/(2 sigma^2)),
  // evaluated as a log-sum-exp so large-order terms cannot overflow.
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);

  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(order) + 1);
  for (std::int64_t k = 0; k <= order; ++k) {
    const double dk = static_cast<double>(k);
    terms.push_back(log_binom(order, k) +
                    static_cast<double>(order - k) * log_1mq + dk * log_q +
                    dk * (dk - 1.0) * inv_2s2);
  }
  const double m = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  const double log_sum = m + std::log(acc);
  // The sum is E[exp(k(k-1)/(2 sigma^2))] >= 1, so the bound is >= 0; at very
  // large sigma the log-sum-exp can round a hair below zero. Clamp it.
  return std::max(log_sum, 0.0) / (static_cast<double>(order) - 1.0);
}

RdpCurve rdp_curve_subsampled_gaussian(double q, double sigma,
                                       const std::vector<double>& orders) {
  if (orders.empty()) {
    throw InvalidArgument("order grid is empty");
  }
  RdpCurve curve;
  curve.orders = orders;
  curve.rdp.reserve(orders.size());
  double prev = 1.0;
  for (double a : orders) {
    const double rounded = std::round(a);
    if (!(a > 1.0) || std::abs(a - rounded) > 1e-9) {
      throw InvalidArgument(
          "order grid must contain integers > 1, got " + std::to_string(a));
    }
    if (a <= prev) {
      throw InvalidArgument("order grid must be strictly increasing");
    }
    prev = a;
    curve.rdp.push_back(rdp_subsampled_gaussian(
        static_cast<std::int64_t>(rounded), q, sigma));
  }
  return curve;
}

RdpCurve compose(const RdpCurve& curve, std::int64_t steps) {
  if (steps < 0) {
    throw InvalidArgument("cannot compose a negative number of steps");
  }
  if (curve.orders.size() != curve.rdp.size() || curve.orders.empty()) {
    throw InvalidArgument("malformed RDP curve");
  }
  RdpCurve out = curve;
  for (double& v : out.rdp) v *= static_cast<double>(steps);
  return out;
}

double rdp_to_epsilon(const RdpCurve& curve, double delta,
                      RdpConversion conversion) {
  check_delta(delta);
  if (curve.orders.size() != curve.rdp.size() || curve.orders.empty()) {
    throw InvalidArgument("malformed RDP curve");
  }
  const double log_delta = std::log(delta);
  double best = kInf;
  for (std::size_t i = 0; i < curve.orders.size(); ++i) {
    const double a = curve.orders[i];
    const double rdp = curve.rdp[i];
    if (!(a > 1.0)) {
      throw InvalidArgument("RDP order must exceed 1, got " +
                            std::to_string(a));
    }
    if (!std::isfinite(rdp) || rdp < 0.0) {
      throw InvalidArgument("RDP curve value must be finite and >= 0");
    }
    double eps;
    if (conversion == RdpConversion::kImproved) {
      eps = rdp + std::log((a - 1.0) / a) - (log_delta + std::log(a)) / (a - 1.0);
    } else {
      eps = rdp - log_delta / (a - 1.0);
    }
    best = std::min(best, eps);
  }
  return best;
}

double epsilon_of(double sigma, const SubsampleSchedule& schedule, double delta,
                  RdpConversion conversion) {
  check_sigma(sigma);
  check_schedule(schedule);
  check_delta(delta);
  if (schedule.steps == 0 || schedule.q == 0.0) return 0.0;
  RdpCurve per_step = rdp_curve_subsampled_gaussian(schedule.q, sigma);
  return rdp_to_epsilon(compose(per_step, schedule.steps), delta, conversion);
}

double calibrate_noise(const PrivacySpec& spec,
                       const SubsampleSchedule& schedule,
                       RdpConversion conversion) {
  if (!(spec.epsilon > 0.0) || !std::isfinite(spec.epsilon)) {
    throw InvalidArgument("target epsilon must be positive and finite, got " +
                          std::to_string(spec.epsilon));
  }
  check_delta(spec.delta);
  check_schedule(schedule);
  if (schedule.steps == 0 || schedule.q == 0.0) {
    throw InvalidArgument(
        "schedule provides no privacy loss to calibrate against");
  }

  double lo = 1e-3;
  double hi = 1e4;
  auto eps_at = [&](double s) {
    return epsilon_of(s, schedule, spec.delta, conversion);
  };

  // epsilon_of is decreasing in sigma; grow hi until it satisfies the target.
  double eps_hi = eps_at(hi);
  int expansions = 0;
  while (eps_hi > spec.epsilon) {
    hi *= 2.0;
    if (++expansions > 40) {
      throw CalibrationError(
          "could not bracket target epsilon from above: sigma > " +
          std::to_string(hi));
    }
    eps_hi = eps_at(hi);
  }
  double eps_lo = eps_at(lo);
  if (eps_lo <= spec.epsilon) {
    // Already satisfied at the domain floor; lo is the conservative answer.
    return lo;
  }

  // Invariant: eps(lo) > target >= eps(hi). Stop only when the bracket is
  // tight in sigma and in epsilon, so the result is conservative without
  // being loose.
  for (int iter = 0; iter < 200; ++iter) {
    if (hi - lo < 1e-4 && eps_lo - eps_hi < 0.04) break;
    const double mid = 0.5 * (lo + hi);
    const double eps_mid = eps_at(mid);
    if (eps_mid > spec.epsilon) {
      lo = mid;
      eps_lo = eps_mid;
    } else {
      hi = mid;
      eps_hi = eps_mid;
    }
  }
  return hi;
}

SubsampleSchedule schedule_for(std::int64_t batch_size, std::int64_t epochs,
                               std::int64_t dataset_size) {
  if (batch_size < 1) {
    throw InvalidArgument("batch size must be >= 1, got " +
                          std::to_string(batch_size));
  }
  if (epochs < 0) {
    throw InvalidArgument("epochs must be >= 0, got " + std::to_string(epochs));
  }
  if (dataset_size < 1) {
    throw InvalidArgument("dataset size must be >= 1, got " +
                          std::to_string(dataset_size));
  }
  if (batch_size > dataset_size) {
    throw InvalidArgument("batch size " + std::to_string(batch_size) +
                          " exceeds dataset size " +
                          std::to_string(dataset_size));
  }
  SubsampleSchedule s;
  s.q = static_cast<double>(batch_size) / static_cast<double>(dataset_size);
  const std::int64_t steps_per_epoch =
      (dataset_size + batch_size - 1) / batch_size;
  s.steps = epochs * steps_per_epoch;
  return s;
}

}  // namespace dpkit
