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

#ifndef DPKIT_AUTODIFF_HPP_
#define DPKIT_AUTODIFF_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "dpkit/tensor.hpp"

namespace dpkit {

// One flattened gradient vector per example. Row i is the gradient of
// example i's loss with respect to the concatenated parameter vector.
struct PerSampleGrads {
  std::int64_t rows = 0;  // batch size
  std::int64_t cols = 0;  // parameter count P
  std::vector<double> data;  // row-major rows x cols

  double* row(std::int64_t i) { return data.data() + i * cols; }
  const double* row(std::int64_t i) const { return data.data() + i * cols; }
};

// Reverse-mode tape. Operations append nodes; node ids are indices into the
// tape, so creation order is already a topological order and the backward
// sweep is a single reverse pass. A Tape is single-threaded; per-example
// passes that run concurrently each own a private Tape.
class Tape {
 public:
  using NodeId = int;

  // Non-differentiable leaf (data).
  NodeId input(Tensor value);

  // Differentiable leaf. Gradients are reported for param nodes in the order
  // they were created.
  NodeId param(Tensor value);

  // Cross-correlation of input [B,Cin,H,W] with kernel [Cout,Cin,kH,kW]:
  // output [B,Cout,H',W'] with H' = (H + 2*padding - kH)/stride + 1.
  NodeId conv2d(NodeId input, NodeId kernel, int stride, int padding);

  // Adds bias [C] to every spatial position of x [B,C,H,W].
  NodeId add_channel_bias(NodeId x, NodeId bias);

  // x [B,F] * weight [O,F]^T + bias [O] -> [B,O].
  NodeId linear(NodeId x, NodeId weight, NodeId bias);

  NodeId relu(NodeId x);

  // Non-overlapping average pooling with a square window; spatial dims must
  // divide evenly.
  NodeId avgpool2d(NodeId x, int window);

  // [B, d1, d2, ...] -> [B, d1*d2*...].
  NodeId flatten(NodeId x);

  // Per-example cross-entropy of logits [B,K] against integer labels,
  // stabilized by max-subtraction. Returns a [B] vector of losses.
  NodeId per_example_softmax_cross_entropy(NodeId logits,
                                           std::vector<int> labels);

  // Batch-mean cross entropy: mean(per_example_softmax_cross_entropy).
  NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels);

  NodeId mean(NodeId x);
  NodeId sum(NodeId x);

  const Tensor& value(NodeId id) const;

  // Gradients of the scalar at `root` for every param node, in param
  // creation order. Root must have exactly one element.
  std::vector<Tensor> backward(NodeId root);

  // Row i = gradient of element i of the rank-1 vector at `losses`,
  // flattened over all params in creation order. Sum of rows equals
  // backward() of the summed losses.
  PerSampleGrads per_sample_backward(NodeId losses);

  const std::vector<NodeId>& params() const { return params_; }

  // Total parameter element count P.
  std::int64_t param_size() const;

 private:
  enum class Op {
    kInput,
    kParam,
    kConv2d,
    kChannelBias,
    kLinear,
    kRelu,
    kAvgPool,
    kFlatten,
    kPerExampleCe,
    kMean,
    kSum,
  };

  struct Node {
    Op op;
    std::array<NodeId, 3> in{-1, -1, -1};
    Tensor value;
    int attr0 = 0;  // stride (conv), window (pool)
    int attr1 = 0;  // padding (conv)
    std::vector<int> labels;  // cross-entropy only
    bool needs_grad = false;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  void check_id(NodeId id) const;

  // Shared reverse sweep: seeds the adjoint of `root` with `seed` and
  // returns flattened-per-param gradients appended into `out` (length P).
  void backprop(NodeId root, const Tensor& seed, double* out);

  std::vector<Node> nodes_;
  std::vector<NodeId> params_;
};

namespace kernels {

// Forward primitives shared by the tape and tape-free inference. All are
// deterministic and single-threaded.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, int stride,
                      int padding);
Tensor add_channel_bias_forward(const Tensor& x, const Tensor& bias);
Tensor linear_forward(const Tensor& x, const Tensor& weight,
                      const Tensor& bias);
Tensor relu_forward(const Tensor& x);
Tensor avgpool2d_forward(const Tensor& x, int window);
Tensor flatten_forward(const Tensor& x);
Tensor per_example_ce_forward(const Tensor& logits,
                              const std::vector<int>& labels);

}  // namespace kernels

}  // namespace dpkit

#endif  // DPKIT_AUTODIFF_HPP_
