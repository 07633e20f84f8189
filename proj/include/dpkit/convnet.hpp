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

#ifndef DPKIT_CONVNET_HPP_
#define DPKIT_CONVNET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dpkit/autodiff.hpp"
#include "dpkit/tensor.hpp"

namespace dpkit {

// Channel widths of the four conv layers. The default configuration is the
// full model; tests shrink it to keep finite-difference sweeps cheap.
struct ConvNetWidths {
  int c1 = 32;
  int c2 = 64;
  int c3 = 128;
  int c4 = 128;

  void validate() const;  // all widths >= 1, else ConfigError
  bool operator==(const ConvNetWidths&) const = default;
};

// Architecture (fixed): input [3,32,32]
//   conv3x3(3 -> c1), pad 1 -> ReLU
//   conv3x3(c1 -> c2), pad 1 -> ReLU -> avgpool 2x2
//   conv3x3(c2 -> c3), pad 1 -> ReLU
//   conv3x3(c3 -> c4), pad 1 -> ReLU -> avgpool 2x2
//   flatten -> linear(c4*8*8 -> 10)
struct ConvNetParams {
  ConvNetWidths widths;
  Tensor k1, b1, k2, b2, k3, b3, k4, b4;  // conv kernels and biases
  Tensor w, b;                            // final linear layer

  std::int64_t param_count() const;

  // Concatenation in layer order (k1,b1,...,k4,b4,w,b); the layout used by
  // PerSampleGrads columns, optimizer state, and checkpoints.
  std::vector<double> flat() const;
  void set_flat(const std::vector<double>& values);
};

inline constexpr int kNumClasses = 10;
inline constexpr int kInputChannels = 3;
inline constexpr int kInputSide = 32;

// Kaiming-uniform fan-in weights (bound sqrt(6 / fan_in)), zero biases.
// Deterministic for a given seed.
ConvNetParams convnet_init(std::uint64_t seed, const ConvNetWidths& widths = {});

// Records the forward pass on the tape with params as differentiable leaves
// (pushed in flat() order) and returns the logits node.
Tape::NodeId convnet_build(Tape& tape, const ConvNetParams& params,
                           const Tensor& images);

// Tape-free inference path; numerically identical to convnet_build's values.
Tensor convnet_logits(const ConvNetParams& params, const Tensor& images);

struct EvalMetrics {
  double loss = 0.0;      // mean softmax cross-entropy
  double accuracy = 0.0;  // argmax match rate, ties to the smallest class
};

// Full-split evaluation, processed in chunks of `chunk` images to bound
// activation memory.
EvalMetrics convnet_evaluate(const ConvNetParams& params, const Tensor& images,
                             const std::vector<int>& labels, int chunk = 256);

// Per-example loss gradients, one independent batch-of-one pass per example
// (rows may be computed concurrently; the result does not depend on thread
// count). Row layout matches ConvNetParams::flat().
PerSampleGrads convnet_per_sample_grads(const ConvNetParams& params,
                                        const Tensor& images,
                                        const std::vector<int>& labels);

// Checkpoint: text manifest (magic, version, widths, count) followed by the
// flat parameter vector as little-endian 64-bit doubles. Round-trips
// bit-exactly.
void convnet_save(const ConvNetParams& params, const std::string& path);
ConvNetParams convnet_load(const std::string& path);

}  // namespace dpkit

#endif  // DPKIT_CONVNET_HPP_
