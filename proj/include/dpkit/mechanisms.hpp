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

#ifndef DPKIT_MECHANISMS_HPP_
#define DPKIT_MECHANISMS_HPP_

#include "dpkit/rng.hpp"
#include "dpkit/tensor.hpp"

namespace dpkit {

// Laplace input perturbation. Sensitivity is interpreted per element; noised
// values are not clamped back to any pixel range.
struct LaplaceParams {
  double epsilon = 0.0;
  double sensitivity = 1.0;

  void validate() const;   // epsilon > 0 and sensitivity > 0, else InvalidArgument
  double scale() const {   // b = sensitivity / epsilon
    validate();
    return sensitivity / epsilon;
  }
};

// Inverse CDF of Lap(0, b) evaluated at u in (-1/2, 1/2):
//   -b * sign(u) * ln(1 - 2|u|)
// b = 0 degenerates to the identity offset 0.
double laplace_icdf(double u, double b);

// One Lap(0, b) draw via the inverse CDF; u is uniform on (-1/2, 1/2).
double sample_laplace(double b, Rng& rng);

// Element-wise x + Lap(0, b) with b = params.scale(); shape preserved.
Tensor laplace_perturb(const Tensor& data, const LaplaceParams& params,
                       Rng& rng);

}  // namespace dpkit

#endif  // DPKIT_MECHANISMS_HPP_
