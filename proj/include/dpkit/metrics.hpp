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

#ifndef DPKIT_METRICS_HPP_
#define DPKIT_METRICS_HPP_

#include <string>

namespace dpkit {

// One per-epoch measurement row. Field order matches the CSV column order
// used by the harness:
//   experiment_id,run,epoch,train_loss,train_acc,test_loss,test_acc,
//   epsilon_spent,sigma
struct MetricsRecord {
  std::string experiment_id;
  int run = 0;
  int epoch = 0;  // 1-based; the row reflects the state after this epoch
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
  double epsilon_spent = 0.0;  // +inf for non-private (sigma = 0) runs
  double sigma = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

}  // namespace dpkit

#endif  // DPKIT_METRICS_HPP_
