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

#include "dpkit/mechanisms.hpp"

#include <cmath>
#include <string>

#include "dpkit/error.hpp"

namespace dpkit {

void LaplaceParams::validate() const {
  if (!(epsilon > 0.0)) {
    throw InvalidArgument("Laplace epsilon must be positive, got " +
                          std::to_string(epsilon));
  }
  if (!(sensitivity > 0.0)) {
    throw InvalidArgument("Laplace sensitivity must be positive, got " +
                          std::to_string(sensitivity));
  }
}

double laplace_icdf(double u, double b) {
  if (!(b >= 0.0)) {
    throw InvalidArgument("Laplace scale must be >= 0, got " +
                          std::to_string(b));
  }
  if (!(u > -0.5 && u < 0.5)) {
    throw InvalidArgument("Laplace inverse CDF argument must lie in "
                          "(-1/2, 1/2), got " +
                          std::to_string(u));
  }
  if (b == 0.0 || u == 0.0) return 0.0;
  const double sign = u > 0.0 ? 1.0 : -1.0;
  return -b * sign * std::log1p(-2.0 * std::abs(u));
}

double sample_laplace(double b, Rng& rng) {
  // uniform() covers [0, 1); skip the single point that would land on the
  // closed boundary u = -1/2.
  double x;
  do {
    x = rng.uniform();
  } while (x == 0.0);
  return laplace_icdf(x - 0.5, b);
}

Tensor laplace_perturb(const Tensor& data, const LaplaceParams& params,
                       Rng& rng) {
  const double b = params.scale();
  Tensor out = data;
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out[i] += sample_laplace(b, rng);
  }
  return out;
}

}  // namespace dpkit
