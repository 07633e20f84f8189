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

#ifndef DPKIT_DATA_HPP_
#define DPKIT_DATA_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpkit/rng.hpp"
#include "dpkit/tensor.hpp"

namespace dpkit {

enum class Split { kTrain, kTest };
enum class Provenance { kCifar10, kSynthetic, kPerturbed };

std::string to_string(Split split);
std::string to_string(Provenance prov);

// Normalized image dataset. Channel statistics record the normalization that
// was applied; synthetic data is generated pre-normalized (mean 0, std 1).
struct Dataset {
  Tensor images;  // [N,3,32,32]
  std::vector<int> labels;
  Split split = Split::kTrain;
  Provenance provenance = Provenance::kSynthetic;
  std::array<double, 3> channel_mean{0.0, 0.0, 0.0};
  std::array<double, 3> channel_std{1.0, 1.0, 1.0};

  int size() const { return images.rank() > 0 ? images.dim(0) : 0; }
  void validate() const;  // N > 0, labels in {0..9}, shape [N,3,32,32]
};

// Raw CIFAR-10 binary batch: records of 3073 bytes (label, then 3072 pixel
// bytes as R/G/B 32x32 planes). Returns pixel values scaled to [0,1],
// unnormalized. Malformed framing or labels raise DataError with the byte
// offset of the fault.
struct RawBatch {
  Tensor images;  // [N,3,32,32], values in [0,1]
  std::vector<int> labels;
};
RawBatch load_cifar10_batch(const std::string& path);

// Standard directory layout: data_batch_1..5.bin plus test_batch.bin.
// Normalization constants are computed from the train split only and applied
// to both splits.
std::pair<Dataset, Dataset> load_cifar10(const std::string& dir);

// Gaussian blobs: the first `classes` elements of the flattened image carry
// class-dependent means (separation * one-hot) plus unit Gaussian noise on a
// small leading block; all remaining elements are zero. Deterministic per
// seed. Labels cycle 0,1,...,classes-1.
Dataset make_synthetic(int classes, int per_class, double separation,
                       std::uint64_t seed);

// First n records of a dataset (documented subsetting rule).
Dataset subset(const Dataset& ds, int n);

// Container round-trip: text manifest plus little-endian 64-bit payload;
// reload is bit-identical.
void save_container(const Dataset& ds, const std::string& path);
Dataset load_container(const std::string& path);

// Poisson subsampling: every index enters each draw independently with
// probability q.
class PoissonSampler {
 public:
  PoissonSampler(double q, int n, std::uint64_t seed);

  std::vector<int> next();

  double rate() const { return q_; }
  int population() const { return n_; }

 private:
  double q_;
  int n_;
  Rng rng_;
};

std::vector<std::vector<int>> poisson_batches(PoissonSampler& sampler,
                                              int steps);

}  // namespace dpkit

#endif  // DPKIT_DATA_HPP_
