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

#ifndef DPKIT_ACCOUNTANT_HPP_
#define DPKIT_ACCOUNTANT_HPP_

#include <cstdint>
#include <vector>

namespace dpkit {

// Target privacy budget. epsilon > 0, delta in (0, 1).
struct PrivacySpec {
  double epsilon = 0.0;
  double delta = 1e-5;
};

// Poisson-subsampled mechanism schedule: each of `steps` rounds touches each
// record independently with probability `q`.
struct SubsampleSchedule {
  double q = 0.0;        // sampling rate, in [0, 1]
  std::int64_t steps = 0;  // number of composed rounds, >= 0
};

// Renyi-DP curve: rdp[i] is the RDP value at orders[i]. Orders are strictly
// increasing and > 1.
struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> rdp;
};

// Conversion from an RDP guarantee to (epsilon, delta)-DP.
enum class RdpConversion {
  // eps = min_a [ rdp(a) + log((a-1)/a) - (log(delta) + log(a)) / (a-1) ].
  // Tighter for every order and delta; the default everywhere.
  kImproved,
  // eps = min_a [ rdp(a) + log(1/delta) / (a-1) ], the original bound.
  kClassic,
};

// The default order grid {2, 3, ..., 256}. Integer orders keep the
// subsampled-Gaussian bound exact (finite binomial sum).
const std::vector<double>& default_orders();

// RDP of the Gaussian mechanism at `order` with noise multiplier `sigma`:
// order / (2 sigma^2). order must be > 1. sigma = 0 means the mechanism adds
// no noise; its privacy loss is unbounded and reported as InvalidArgument.
double rdp_gaussian(double order, double sigma);

// RDP of the Poisson-subsampled Gaussian mechanism at integer order >= 2:
//
//   RDP(a) = 1/(a-1) * log( sum_{k=0..a} C(a,k) (1-q)^(a-k) q^k
//                           * exp(k (k-1) / (2 sigma^2)) )
//
// The sum is evaluated in log space (log-sum-exp over log-binomials), so it
// stays finite for small sigma and large orders where individual terms
// overflow. q = 0 returns 0 (no data touched); q = 1 reduces to the
// unsubsampled Gaussian bound.
double rdp_subsampled_gaussian(std::int64_t order, double q, double sigma);

// Curve of rdp_subsampled_gaussian over an integer order grid.
RdpCurve rdp_curve_subsampled_gaussian(double q, double sigma,
                                       const std::vector<double>& orders =
                                           default_orders());

// RDP composes additively: T identical rounds scale the curve by T.
RdpCurve compose(const RdpCurve& curve, std::int64_t steps);

// Optimal conversion of an RDP curve to epsilon at the given delta; minimizes
// over the curve's orders. Non-finite or empty curves are rejected.
double rdp_to_epsilon(const RdpCurve& curve, double delta,
                      RdpConversion conversion = RdpConversion::kImproved);

// Total (epsilon, delta) privacy spent by `schedule.steps` rounds of the
// Poisson-subsampled Gaussian with the given noise multiplier: builds the
// per-step curve over the order grid, composes, converts.
double epsilon_of(double sigma, const SubsampleSchedule& schedule, double delta,
                  RdpConversion conversion = RdpConversion::kImproved);

// Smallest noise multiplier (within bisection precision) whose spent epsilon
// does not exceed spec.epsilon. Bisection over [1e-3, 1e4], expanding the
// upper end by doubling if the initial bracket does not contain a solution;
// stops once the bracket is narrower than 1e-4 and the epsilon gap across it
// is below 0.04, so the returned sigma is conservative:
// epsilon_of(result) <= spec.epsilon. Throws CalibrationError if the target
// cannot be bracketed.
double calibrate_noise(const PrivacySpec& spec,
                       const SubsampleSchedule& schedule,
                       RdpConversion conversion = RdpConversion::kImproved);

// Schedule for batch-size/epoch training over a dataset of `dataset_size`
// records: q = batch / N, steps = epochs * ceil(N / batch).
SubsampleSchedule schedule_for(std::int64_t batch_size, std::int64_t epochs,
                               std::int64_t dataset_size);

// Dataset-size convention under which the bundled experiment presets were
// calibrated; see schedule_for.
inline constexpr std::int64_t kPresetDatasetSize = 60000;

}  // namespace dpkit

#endif  // DPKIT_ACCOUNTANT_HPP_
