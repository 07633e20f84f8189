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

#include "dpkit/autodiff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "dpkit/error.hpp"

namespace dpkit {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

struct ConvDims {
  int batch, cin, h, w;
  int cout, kh, kw;
  int ho, wo;
  std::int64_t col_rows, col_cols;
};

ConvDims conv_dims(const Tensor& input, const Tensor& kernel, int stride,
                   int padding) {
  if (input.rank() != 4) {
    throw ShapeError("conv2d: input must be rank 4 [B,C,H,W], got " +
                     input.shape_str());
  }
  if (kernel.rank() != 4) {
    throw ShapeError("conv2d: kernel must be rank 4 [Cout,Cin,kH,kW], got " +
                     kernel.shape_str());
  }
  if (stride < 1) {
    throw InvalidArgument("conv2d: stride must be >= 1, got " +
                          std::to_string(stride));
  }
  if (padding < 0) {
    throw InvalidArgument("conv2d: padding must be >= 0, got " +
                          std::to_string(padding));
  }
  ConvDims d;
  d.batch = input.dim(0);
  d.cin = input.dim(1);
  d.h = input.dim(2);
  d.w = input.dim(3);
  d.cout = kernel.dim(0);
  d.kh = kernel.dim(2);
  d.kw = kernel.dim(3);
  if (kernel.dim(1) != d.cin) {
    throw ShapeError("conv2d: kernel expects " +
                     std::to_string(kernel.dim(1)) + " input channels, input has " +
                     std::to_string(d.cin));
  }
  if (d.h + 2 * padding < d.kh || d.w + 2 * padding < d.kw) {
    throw ShapeError("conv2d: kernel " + kernel.shape_str() +
                     " larger than padded input " + input.shape_str());
  }
  d.ho = (d.h + 2 * padding - d.kh) / stride + 1;
  d.wo = (d.w + 2 * padding - d.kw) / stride + 1;
  d.col_rows = static_cast<std::int64_t>(d.cin) * d.kh * d.kw;
  d.col_cols = static_cast<std::int64_t>(d.ho) * d.wo;
  return d;
}

// Unroll one example into a [Cin*kH*kW, Ho*Wo] patch matrix. Out-of-bounds
// taps read as zero (zero padding).
void im2col(const double* x, const ConvDims& d, int stride, int padding,
            double* col) {
  for (int c = 0; c < d.cin; ++c) {
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        double* row =
            col + ((static_cast<std::int64_t>(c) * d.kh + ki) * d.kw + kj) *
                      d.col_cols;
        for (int oh = 0; oh < d.ho; ++oh) {
          const int ih = oh * stride - padding + ki;
          for (int ow = 0; ow < d.wo; ++ow) {
            const int iw = ow * stride - padding + kj;
            row[static_cast<std::int64_t>(oh) * d.wo + ow] =
                (ih >= 0 && ih < d.h && iw >= 0 && iw < d.w)
                    ? x[(static_cast<std::int64_t>(c) * d.h + ih) * d.w + iw]
                    : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add the patch matrix back into the image.
void col2im(const double* col, const ConvDims& d, int stride, int padding,
            double* x) {
  for (int c = 0; c < d.cin; ++c) {
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        const double* row =
            col + ((static_cast<std::int64_t>(c) * d.kh + ki) * d.kw + kj) *
                      d.col_cols;
        for (int oh = 0; oh < d.ho; ++oh) {
          const int ih = oh * stride - padding + ki;
          if (ih < 0 || ih >= d.h) continue;
          for (int ow = 0; ow < d.wo; ++ow) {
            const int iw = ow * stride - padding + kj;
            if (iw < 0 || iw >= d.w) continue;
            x[(static_cast<std::int64_t>(c) * d.h + ih) * d.w + iw] +=
                row[static_cast<std::int64_t>(oh) * d.wo + ow];
          }
        }
      }
    }
  }
}

void check_labels(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2) {
    throw ShapeError("cross-entropy: logits must be rank 2 [B,K], got " +
                     logits.shape_str());
  }
  if (static_cast<int>(labels.size()) != logits.dim(0)) {
    throw ShapeError("cross-entropy: got " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(logits.dim(0)));
  }
  const int k = logits.dim(1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw InvalidArgument("cross-entropy: label " +
                            std::to_string(labels[i]) + " at index " +
                            std::to_string(i) + " out of range [0, " +
                            std::to_string(k) + ")");
    }
  }
}

}  // namespace

namespace kernels {

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, int stride,
                      int padding) {
  const ConvDims d = conv_dims(input, kernel, stride, padding);
  Tensor out({d.batch, d.cout, d.ho, d.wo});
  std::vector<double> col(
      static_cast<std::size_t>(d.col_rows * d.col_cols));
  ConstMapMat kmat(kernel.data(), d.cout, d.col_rows);
  const std::int64_t in_stride = static_cast<std::int64_t>(d.cin) * d.h * d.w;
  const std::int64_t out_stride =
      static_cast<std::int64_t>(d.cout) * d.col_cols;
  for (int b = 0; b < d.batch; ++b) {
    im2col(input.data() + b * in_stride, d, stride, padding, col.data());
    ConstMapMat cmat(col.data(), d.col_rows, d.col_cols);
    MapMat omat(out.data() + b * out_stride, d.cout, d.col_cols);
    omat.noalias() = kmat * cmat;
  }
  out.check_finite("conv2d");
  return out;
}

Tensor add_channel_bias_forward(const Tensor& x, const Tensor& bias) {
  if (x.rank() != 4 || bias.rank() != 1 || bias.dim(0) != x.dim(1)) {
    throw ShapeError("add_channel_bias: need x [B,C,H,W] and bias [C], got " +
                     x.shape_str() + " and " + bias.shape_str());
  }
  Tensor out = x;
  const std::int64_t hw = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
  std::int64_t pos = 0;
  for (int b = 0; b < x.dim(0); ++b) {
    for (int c = 0; c < x.dim(1); ++c) {
      const double bc = bias[c];
      for (std::int64_t i = 0; i < hw; ++i) out[pos++] += bc;
    }
  }
  out.check_finite("add_channel_bias");
  return out;
}

Tensor linear_forward(const Tensor& x, const Tensor& weight,
                      const Tensor& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || bias.rank() != 1 ||
      weight.dim(1) != x.dim(1) || bias.dim(0) != weight.dim(0)) {
    throw ShapeError("linear: need x [B,F], weight [O,F], bias [O], got " +
                     x.shape_str() + ", " + weight.shape_str() + ", " +
                     bias.shape_str());
  }
  const int batch = x.dim(0), features = x.dim(1), out_dim = weight.dim(0);
  Tensor out({batch, out_dim});
  ConstMapMat xm(x.data(), batch, features);
  ConstMapMat wm(weight.data(), out_dim, features);
  MapMat om(out.data(), batch, out_dim);
  om.noalias() = xm * wm.transpose();
  for (int b = 0; b < batch; ++b) {
    for (int o = 0; o < out_dim; ++o) out[b * out_dim + o] += bias[o];
  }
  out.check_finite("linear");
  return out;
}

Tensor relu_forward(const Tensor& x) {
  Tensor out = x;
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out[i] = std::max(0.0, out[i]);
  }
  return out;
}

Tensor avgpool2d_forward(const Tensor& x, int window) {
  if (x.rank() != 4) {
    throw ShapeError("avgpool2d: input must be rank 4, got " + x.shape_str());
  }
  if (window < 1) {
    throw InvalidArgument("avgpool2d: window must be >= 1, got " +
                          std::to_string(window));
  }
  const int h = x.dim(2), w = x.dim(3);
  if (h % window != 0 || w % window != 0) {
    throw ShapeError("avgpool2d: window " + std::to_string(window) +
                     " does not divide spatial dims of " + x.shape_str());
  }
  const int ho = h / window, wo = w / window;
  const int batch = x.dim(0), chans = x.dim(1);
  Tensor out({batch, chans, ho, wo});
  const double inv = 1.0 / (window * window);
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < chans; ++c) {
      const double* src =
          x.data() + (static_cast<std::int64_t>(b) * chans + c) * h * w;
      double* dst =
          out.data() + (static_cast<std::int64_t>(b) * chans + c) * ho * wo;
      for (int oh = 0; oh < ho; ++oh) {
        for (int ow = 0; ow < wo; ++ow) {
          double acc = 0.0;
          for (int i = 0; i < window; ++i) {
            for (int j = 0; j < window; ++j) {
              acc += src[(oh * window + i) * w + (ow * window + j)];
            }
          }
          dst[oh * wo + ow] = acc * inv;
        }
      }
    }
  }
  return out;
}

Tensor flatten_forward(const Tensor& x) {
  if (x.rank() < 2) {
    throw ShapeError("flatten: input must have a batch dimension, got " +
                     x.shape_str());
  }
  const int batch = x.dim(0);
  const int rest = static_cast<int>(x.size() / batch);
  return x.reshape({batch, rest});
}

Tensor per_example_ce_forward(const Tensor& logits,
                              const std::vector<int>& labels) {
  check_labels(logits, labels);
  const int batch = logits.dim(0), k = logits.dim(1);
  Tensor out({batch});
  for (int b = 0; b < batch; ++b) {
    const double* z = logits.data() + static_cast<std::int64_t>(b) * k;
    const double zmax = *std::max_element(z, z + k);
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += std::exp(z[j] - zmax);
    out[b] = std::log(acc) + zmax - z[labels[static_cast<std::size_t>(b)]];
  }
  out.check_finite("softmax_cross_entropy");
  return out;
}

}  // namespace kernels

Tape::NodeId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

const Tape::Node& Tape::node(NodeId id) const {
  check_id(id);
  return nodes_[static_cast<std::size_t>(id)];
}

void Tape::check_id(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
    throw InvalidArgument("tape node id " + std::to_string(id) +
                          " out of range");
  }
}

Tape::NodeId Tape::input(Tensor value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  n.needs_grad = false;
  return push(std::move(n));
}

Tape::NodeId Tape::param(Tensor value) {
  Node n;
  n.op = Op::kParam;
  n.value = std::move(value);
  n.needs_grad = true;
  const NodeId id = push(std::move(n));
  params_.push_back(id);
  return id;
}

Tape::NodeId Tape::conv2d(NodeId input, NodeId kernel, int stride,
                          int padding) {
  check_id(input);
  check_id(kernel);
  Node n;
  n.op = Op::kConv2d;
  n.in = {input, kernel, -1};
  n.attr0 = stride;
  n.attr1 = padding;
  n.value = kernels::conv2d_forward(node(input).value, node(kernel).value,
                                    stride, padding);
  n.needs_grad = node(input).needs_grad || node(kernel).needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::add_channel_bias(NodeId x, NodeId bias) {
  check_id(x);
  check_id(bias);
  Node n;
  n.op = Op::kChannelBias;
  n.in = {x, bias, -1};
  n.value =
      kernels::add_channel_bias_forward(node(x).value, node(bias).value);
  n.needs_grad = node(x).needs_grad || node(bias).needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::linear(NodeId x, NodeId weight, NodeId bias) {
  check_id(x);
  check_id(weight);
  check_id(bias);
  Node n;
  n.op = Op::kLinear;
  n.in = {x, weight, bias};
  n.value = kernels::linear_forward(node(x).value, node(weight).value,
                                    node(bias).value);
  n.needs_grad = node(x).needs_grad || node(weight).needs_grad ||
                 node(bias).needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId x) {
  check_id(x);
  Node n;
  n.op = Op::kRelu;
  n.in = {x, -1, -1};
  n.value = kernels::relu_forward(node(x).value);
  n.needs_grad = node(x).needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::avgpool2d(NodeId x, int window) {
  check_id(x);
  Node n;
  n.op = Op::kAvgPool;
  n.in = {x, -1, -1};
  n.attr0 = window;
  n.value = kernels::avgpool2d_forward(node(x).value, window);
  n.needs_grad = node(x).needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::flatten(NodeId x) {
  check_id(x);
  Node n;
  n.op = Op::kFlatten;
  n.in = {x, -1, -1};
  n.value = kernels::flatten_forward(node(x).value);
  n.needs_grad = node(x).needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::per_example_softmax_cross_entropy(NodeId logits,
                                                     std::vector<int> labels) {
  check_id(logits);
  Node n;
  n.op = Op::kPerExampleCe;
  n.in = {logits, -1, -1};
  n.value = kernels::per_example_ce_forward(node(logits).value, labels);
  n.labels = std::move(labels);
  n.needs_grad = node(logits).needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::softmax_cross_entropy(NodeId logits,
                                         std::vector<int> labels) {
  return mean(per_example_softmax_cross_entropy(logits, std::move(labels)));
}

Tape::NodeId Tape::mean(NodeId x) {
  check_id(x);
  Node n;
  n.op = Op::kMean;
  n.in = {x, -1, -1};
  double acc = 0.0;
  const Tensor& v = node(x).value;
  for (std::int64_t i = 0; i < v.size(); ++i) acc += v[i];
  n.value = Tensor({1}, {acc / static_cast<double>(v.size())});
  n.needs_grad = node(x).needs_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::sum(NodeId x) {
  check_id(x);
  Node n;
  n.op = Op::kSum;
  n.in = {x, -1, -1};
  double acc = 0.0;
  const Tensor& v = node(x).value;
  for (std::int64_t i = 0; i < v.size(); ++i) acc += v[i];
  n.value = Tensor({1}, {acc});
  n.needs_grad = node(x).needs_grad;
  return push(std::move(n));
}

const Tensor& Tape::value(NodeId id) const { return node(id).value; }

std::int64_t Tape::param_size() const {
  std::int64_t p = 0;
  for (NodeId id : params_) p += node(id).value.size();
  return p;
}

void Tape::backprop(NodeId root, const Tensor& seed, double* out) {
  std::vector<Tensor> adj(nodes_.size());
  std::vector<char> touched(nodes_.size(), 0);

  auto touch = [&](NodeId id) -> Tensor& {
    auto& a = adj[static_cast<std::size_t>(id)];
    if (!touched[static_cast<std::size_t>(id)]) {
      a = Tensor(nodes_[static_cast<std::size_t>(id)].value.shape());
      touched[static_cast<std::size_t>(id)] = 1;
    }
    return a;
  };

  touch(root) = seed;

  for (NodeId id = root; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!touched[static_cast<std::size_t>(id)] || !n.needs_grad) continue;
    const Tensor& g = adj[static_cast<std::size_t>(id)];

    switch (n.op) {
      case Op::kInput:
      case Op::kParam:
        break;

      case Op::kConv2d: {
        const Node& xn = nodes_[static_cast<std::size_t>(n.in[0])];
        const Node& kn = nodes_[static_cast<std::size_t>(n.in[1])];
        const ConvDims d =
            conv_dims(xn.value, kn.value, n.attr0, n.attr1);
        std::vector<double> col(
            static_cast<std::size_t>(d.col_rows * d.col_cols));
        std::vector<double> dcol(
            static_cast<std::size_t>(d.col_rows * d.col_cols));
        ConstMapMat kmat(kn.value.data(), d.cout, d.col_rows);
        const std::int64_t in_stride =
            static_cast<std::int64_t>(d.cin) * d.h * d.w;
        const std::int64_t out_stride =
            static_cast<std::int64_t>(d.cout) * d.col_cols;
        const bool need_dx = xn.needs_grad;
        const bool need_dk = kn.needs_grad;
        Tensor* dx = need_dx ? &touch(n.in[0]) : nullptr;
        Tensor* dk = need_dk ? &touch(n.in[1]) : nullptr;
        for (int b = 0; b < d.batch; ++b) {
          ConstMapMat gmat(g.data() + b * out_stride, d.cout, d.col_cols);
          if (need_dk) {
            im2col(xn.value.data() + b * in_stride, d, n.attr0, n.attr1,
                   col.data());
            ConstMapMat cmat(col.data(), d.col_rows, d.col_cols);
            MapMat dkmat(dk->data(), d.cout, d.col_rows);
            dkmat.noalias() += gmat * cmat.transpose();
          }
          if (need_dx) {
            MapMat dcmat(dcol.data(), d.col_rows, d.col_cols);
            dcmat.noalias() = kmat.transpose() * gmat;
            col2im(dcol.data(), d, n.attr0, n.attr1,
                   dx->data() + b * in_stride);
          }
        }
        break;
      }

      case Op::kChannelBias: {
        const Node& xn = nodes_[static_cast<std::size_t>(n.in[0])];
        const int batch = n.value.dim(0), chans = n.value.dim(1);
        const std::int64_t hw =
            static_cast<std::int64_t>(n.value.dim(2)) * n.value.dim(3);
        if (xn.needs_grad) {
          Tensor& dx = touch(n.in[0]);
          for (std::int64_t i = 0; i < g.size(); ++i) dx[i] += g[i];
        }
        if (nodes_[static_cast<std::size_t>(n.in[1])].needs_grad) {
          Tensor& db = touch(n.in[1]);
          std::int64_t pos = 0;
          for (int b = 0; b < batch; ++b) {
            for (int c = 0; c < chans; ++c) {
              double acc = 0.0;
              for (std::int64_t i = 0; i < hw; ++i) acc += g[pos++];
              db[c] += acc;
            }
          }
        }
        break;
      }

      case Op::kLinear: {
        const Node& xn = nodes_[static_cast<std::size_t>(n.in[0])];
        const Node& wn = nodes_[static_cast<std::size_t>(n.in[1])];
        const int batch = xn.value.dim(0);
        const int features = xn.value.dim(1);
        const int out_dim = wn.value.dim(0);
        ConstMapMat gm(g.data(), batch, out_dim);
        if (xn.needs_grad) {
          Tensor& dx = touch(n.in[0]);
          MapMat dxm(dx.data(), batch, features);
          ConstMapMat wm(wn.value.data(), out_dim, features);
          dxm.noalias() += gm * wm;
        }
        if (wn.needs_grad) {
          Tensor& dw = touch(n.in[1]);
          MapMat dwm(dw.data(), out_dim, features);
          ConstMapMat xm(xn.value.data(), batch, features);
          dwm.noalias() += gm.transpose() * xm;
        }
        if (nodes_[static_cast<std::size_t>(n.in[2])].needs_grad) {
          Tensor& db = touch(n.in[2]);
          for (int b = 0; b < batch; ++b) {
            for (int o = 0; o < out_dim; ++o) db[o] += g[b * out_dim + o];
          }
        }
        break;
      }

      case Op::kRelu: {
        const Node& xn = nodes_[static_cast<std::size_t>(n.in[0])];
        Tensor& dx = touch(n.in[0]);
        for (std::int64_t i = 0; i < g.size(); ++i) {
          if (xn.value[i] > 0.0) dx[i] += g[i];
        }
        break;
      }

      case Op::kAvgPool: {
        const Node& xn = nodes_[static_cast<std::size_t>(n.in[0])];
        Tensor& dx = touch(n.in[0]);
        const int window = n.attr0;
        const int h = xn.value.dim(2), w = xn.value.dim(3);
        const int ho = n.value.dim(2), wo = n.value.dim(3);
        const int batch = xn.value.dim(0), chans = xn.value.dim(1);
        const double inv = 1.0 / (window * window);
        for (int b = 0; b < batch; ++b) {
          for (int c = 0; c < chans; ++c) {
            const double* gsrc =
                g.data() + (static_cast<std::int64_t>(b) * chans + c) * ho * wo;
            double* dst =
                dx.data() + (static_cast<std::int64_t>(b) * chans + c) * h * w;
            for (int oh = 0; oh < ho; ++oh) {
              for (int ow = 0; ow < wo; ++ow) {
                const double val = gsrc[oh * wo + ow] * inv;
                for (int i = 0; i < window; ++i) {
                  for (int j = 0; j < window; ++j) {
                    dst[(oh * window + i) * w + (ow * window + j)] += val;
                  }
                }
              }
            }
          }
        }
        break;
      }

      case Op::kFlatten: {
        Tensor& dx = touch(n.in[0]);
        for (std::int64_t i = 0; i < g.size(); ++i) dx[i] += g[i];
        break;
      }

      case Op::kPerExampleCe: {
        const Node& zn = nodes_[static_cast<std::size_t>(n.in[0])];
        Tensor& dz = touch(n.in[0]);
        const int batch = zn.value.dim(0), k = zn.value.dim(1);
        for (int b = 0; b < batch; ++b) {
          const double gb = g[b];
          if (gb == 0.0) continue;
          const double* z = zn.value.data() + static_cast<std::int64_t>(b) * k;
          double* dzb = dz.data() + static_cast<std::int64_t>(b) * k;
          const double zmax = *std::max_element(z, z + k);
          double denom = 0.0;
          for (int j = 0; j < k; ++j) denom += std::exp(z[j] - zmax);
          for (int j = 0; j < k; ++j) {
            double p = std::exp(z[j] - zmax) / denom;
            if (j == n.labels[static_cast<std::size_t>(b)]) p -= 1.0;
            dzb[j] += gb * p;
          }
        }
        break;
      }

      case Op::kMean: {
        Tensor& dx = touch(n.in[0]);
        const double scale = g[0] / static_cast<double>(dx.size());
        for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += scale;
        break;
      }

      case Op::kSum: {
        Tensor& dx = touch(n.in[0]);
        for (std::int64_t i = 0; i < dx.size(); ++i) dx[i] += g[0];
        break;
      }
    }
  }

  // Flatten per-param gradients in creation order; untouched params are zero.
  std::int64_t pos = 0;
  for (NodeId pid : params_) {
    const std::int64_t len = nodes_[static_cast<std::size_t>(pid)].value.size();
    if (touched[static_cast<std::size_t>(pid)]) {
      const Tensor& a = adj[static_cast<std::size_t>(pid)];
      for (std::int64_t i = 0; i < len; ++i) out[pos + i] = a[i];
    } else {
      for (std::int64_t i = 0; i < len; ++i) out[pos + i] = 0.0;
    }
    pos += len;
  }
}

std::vector<Tensor> Tape::backward(NodeId root) {
  check_id(root);
  const Tensor& rv = node(root).value;
  if (rv.size() != 1) {
    throw InvalidArgument("backward: root must be a scalar, got shape " +
                          rv.shape_str());
  }
  const std::int64_t p = param_size();
  std::vector<double> flat(static_cast<std::size_t>(p));
  backprop(root, Tensor(rv.shape(), std::vector<double>(1, 1.0)), flat.data());

  std::vector<Tensor> grads;
  grads.reserve(params_.size());
  std::int64_t pos = 0;
  for (NodeId pid : params_) {
    const Tensor& v = node(pid).value;
    std::vector<double> chunk(flat.begin() + pos,
                              flat.begin() + pos + v.size());
    grads.emplace_back(v.shape(), std::move(chunk));
    pos += v.size();
  }
  return grads;
}

PerSampleGrads Tape::per_sample_backward(NodeId losses) {
  check_id(losses);
  const Tensor& lv = node(losses).value;
  if (lv.rank() != 1) {
    throw ShapeError(
        "per_sample_backward: losses must be a rank-1 per-example vector, "
        "got shape " +
        lv.shape_str());
  }
  const int batch = lv.dim(0);
  PerSampleGrads out;
  out.rows = batch;
  out.cols = param_size();
  out.data.assign(static_cast<std::size_t>(out.rows * out.cols), 0.0);
  for (int i = 0; i < batch; ++i) {
    Tensor seed(lv.shape());
    seed[i] = 1.0;
    backprop(losses, seed, out.row(i));
  }
  return out;
}

}  // namespace dpkit
