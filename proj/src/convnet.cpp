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

#include "dpkit/convnet.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dpkit/error.hpp"
#include "dpkit/rng.hpp"

namespace dpkit {

namespace {

constexpr int kKernel = 3;
// Two 2x2 average pools halve 32 twice.
constexpr int kFinalSide = kInputSide / 4;

void check_images(const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != kInputChannels ||
      images.dim(2) != kInputSide || images.dim(3) != kInputSide) {
    throw ShapeError("convnet: images must be [B," +
                     std::to_string(kInputChannels) + "," +
                     std::to_string(kInputSide) + "," +
                     std::to_string(kInputSide) + "], got " +
                     images.shape_str());
  }
}

Tensor kaiming_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (std::int64_t i = 0; i < t.size(); ++i) {
    t[i] = rng.uniform(-bound, bound);
  }
  return t;
}

void append(std::vector<double>& out, const Tensor& t) {
  out.insert(out.end(), t.storage().begin(), t.storage().end());
}

std::size_t take(Tensor& t, const std::vector<double>& src, std::size_t pos) {
  for (std::int64_t i = 0; i < t.size(); ++i) {
    t[i] = src[pos + static_cast<std::size_t>(i)];
  }
  return pos + static_cast<std::size_t>(t.size());
}

}  // namespace

void ConvNetWidths::validate() const {
  for (int c : {c1, c2, c3, c4}) {
    if (c < 1) {
      throw ConfigError("convnet widths must be >= 1, got [" +
                        std::to_string(c1) + ", " + std::to_string(c2) + ", " +
                        std::to_string(c3) + ", " + std::to_string(c4) + "]");
    }
  }
}

std::int64_t ConvNetParams::param_count() const {
  return k1.size() + b1.size() + k2.size() + b2.size() + k3.size() +
         b3.size() + k4.size() + b4.size() + w.size() + b.size();
}

std::vector<double> ConvNetParams::flat() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(param_count()));
  for (const Tensor* t : {&k1, &b1, &k2, &b2, &k3, &b3, &k4, &b4, &w, &b}) {
    append(out, *t);
  }
  return out;
}

void ConvNetParams::set_flat(const std::vector<double>& values) {
  if (static_cast<std::int64_t>(values.size()) != param_count()) {
    throw ShapeError("set_flat: expected " + std::to_string(param_count()) +
                     " values, got " + std::to_string(values.size()));
  }
  std::size_t pos = 0;
  for (Tensor* t : {&k1, &b1, &k2, &b2, &k3, &b3, &k4, &b4, &w, &b}) {
    pos = take(*t, values, pos);
  }
}

ConvNetParams convnet_init(std::uint64_t seed, const ConvNetWidths& widths) {
  widths.validate();
  Rng rng(Rng::derive_seed(seed, 0xC0DE));
  ConvNetParams p;
  p.widths = widths;

  const int fan1 = kInputChannels * kKernel * kKernel;
  p.k1 = kaiming_uniform({widths.c1, kInputChannels, kKernel, kKernel}, fan1,
                         rng);
  p.b1 = Tensor({widths.c1});
  const int fan2 = widths.c1 * kKernel * kKernel;
  p.k2 = kaiming_uniform({widths.c2, widths.c1, kKernel, kKernel}, fan2, rng);
  p.b2 = Tensor({widths.c2});
  const int fan3 = widths.c2 * kKernel * kKernel;
  p.k3 = kaiming_uniform({widths.c3, widths.c2, kKernel, kKernel}, fan3, rng);
  p.b3 = Tensor({widths.c3});
  const int fan4 = widths.c3 * kKernel * kKernel;
  p.k4 = kaiming_uniform({widths.c4, widths.c3, kKernel, kKernel}, fan4, rng);
  p.b4 = Tensor({widths.c4});

  const int features = widths.c4 * kFinalSide * kFinalSide;
  p.w = kaiming_uniform({kNumClasses, features}, features, rng);
  p.b = Tensor({kNumClasses});
  return p;
}

Tape::NodeId convnet_build(Tape& tape, const ConvNetParams& params,
                           const Tensor& images) {
  check_images(images);
  params.widths.validate();

  const auto x = tape.input(images);
  const auto k1 = tape.param(params.k1);
  const auto b1 = tape.param(params.b1);
  const auto h1 =
      tape.relu(tape.add_channel_bias(tape.conv2d(x, k1, 1, 1), b1));
  const auto k2 = tape.param(params.k2);
  const auto b2 = tape.param(params.b2);
  const auto h2 =
      tape.relu(tape.add_channel_bias(tape.conv2d(h1, k2, 1, 1), b2));
  const auto p1 = tape.avgpool2d(h2, 2);
  const auto k3 = tape.param(params.k3);
  const auto b3 = tape.param(params.b3);
  const auto h3 =
      tape.relu(tape.add_channel_bias(tape.conv2d(p1, k3, 1, 1), b3));
  const auto k4 = tape.param(params.k4);
  const auto b4 = tape.param(params.b4);
  const auto h4 =
      tape.relu(tape.add_channel_bias(tape.conv2d(h3, k4, 1, 1), b4));
  const auto p2 = tape.avgpool2d(h4, 2);
  const auto flat = tape.flatten(p2);
  const auto w = tape.param(params.w);
  const auto b = tape.param(params.b);
  return tape.linear(flat, w, b);
}

Tensor convnet_logits(const ConvNetParams& params, const Tensor& images) {
  check_images(images);
  using namespace kernels;
  Tensor h = relu_forward(
      add_channel_bias_forward(conv2d_forward(images, params.k1, 1, 1),
                               params.b1));
  h = relu_forward(
      add_channel_bias_forward(conv2d_forward(h, params.k2, 1, 1), params.b2));
  h = avgpool2d_forward(h, 2);
  h = relu_forward(
      add_channel_bias_forward(conv2d_forward(h, params.k3, 1, 1), params.b3));
  h = relu_forward(
      add_channel_bias_forward(conv2d_forward(h, params.k4, 1, 1), params.b4));
  h = avgpool2d_forward(h, 2);
  return linear_forward(flatten_forward(h), params.w, params.b);
}

EvalMetrics convnet_evaluate(const ConvNetParams& params, const Tensor& images,
                             const std::vector<int>& labels, int chunk) {
  check_images(images);
  const int n = images.dim(0);
  if (static_cast<int>(labels.size()) != n) {
    throw ShapeError("evaluate: got " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(n) + " images");
  }
  if (chunk < 1) {
    throw InvalidArgument("evaluate: chunk must be >= 1");
  }

  const std::int64_t image_size = static_cast<std::int64_t>(kInputChannels) *
                                  kInputSide * kInputSide;
  double loss_sum = 0.0;
  std::int64_t correct = 0;
  for (int start = 0; start < n; start += chunk) {
    const int count = std::min(chunk, n - start);
    Tensor batch({count, kInputChannels, kInputSide, kInputSide});
    std::memcpy(batch.data(), images.data() + start * image_size,
                static_cast<std::size_t>(count * image_size) * sizeof(double));
    const Tensor logits = convnet_logits(params, batch);
    const std::vector<int> batch_labels(labels.begin() + start,
                                        labels.begin() + start + count);
    const Tensor losses =
        kernels::per_example_ce_forward(logits, batch_labels);
    for (int i = 0; i < count; ++i) {
      loss_sum += losses[i];
      int arg = 0;
      for (int j = 1; j < kNumClasses; ++j) {
        if (logits.at({i, j}) > logits.at({i, arg})) arg = j;
      }
      if (arg == batch_labels[static_cast<std::size_t>(i)]) ++correct;
    }
  }
  EvalMetrics m;
  m.loss = loss_sum / static_cast<double>(n);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return m;
}

PerSampleGrads convnet_per_sample_grads(const ConvNetParams& params,
                                        const Tensor& images,
                                        const std::vector<int>& labels) {
  check_images(images);
  const int n = images.dim(0);
  if (static_cast<int>(labels.size()) != n) {
    throw ShapeError("per_sample_grads: got " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(n) + " images");
  }

  PerSampleGrads out;
  out.rows = n;
  out.cols = params.param_count();
  out.data.assign(static_cast<std::size_t>(out.rows * out.cols), 0.0);

  const std::int64_t image_size = static_cast<std::int64_t>(kInputChannels) *
                                  kInputSide * kInputSide;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    Tensor one({1, kInputChannels, kInputSide, kInputSide});
    std::memcpy(one.data(), images.data() + i * image_size,
                static_cast<std::size_t>(image_size) * sizeof(double));
    Tape tape;
    const auto logits = convnet_build(tape, params, one);
    const auto losses = tape.per_example_softmax_cross_entropy(
        logits, {labels[static_cast<std::size_t>(i)]});
    const PerSampleGrads row = tape.per_sample_backward(losses);
    std::memcpy(out.row(i), row.row(0),
                static_cast<std::size_t>(out.cols) * sizeof(double));
  }
  return out;
}

void convnet_save(const ConvNetParams& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw DataError("cannot open checkpoint for writing: " + path);
  }
  const std::vector<double> flat = params.flat();
  f << "dpkit-convnet 1\n";
  f << "widths " << params.widths.c1 << ' ' << params.widths.c2 << ' '
    << params.widths.c3 << ' ' << params.widths.c4 << '\n';
  f << "count " << flat.size() << '\n';
  // Payload is raw 64-bit little-endian doubles in flat() order.
  f.write(reinterpret_cast<const char*>(flat.data()),
          static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!f) {
    throw DataError("short write while saving checkpoint: " + path);
  }
}

ConvNetParams convnet_load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw DataError("cannot open checkpoint: " + path);
  }
  std::string magic;
  int version = 0;
  f >> magic >> version;
  if (!f || magic != "dpkit-convnet" || version != 1) {
    throw DataError("not a dpkit-convnet v1 checkpoint: " + path);
  }
  std::string key;
  ConvNetWidths widths;
  f >> key >> widths.c1 >> widths.c2 >> widths.c3 >> widths.c4;
  if (!f || key != "widths") {
    throw DataError("malformed checkpoint widths line: " + path);
  }
  std::size_t count = 0;
  f >> key >> count;
  if (!f || key != "count") {
    throw DataError("malformed checkpoint count line: " + path);
  }
  f.get();  // newline before payload

  ConvNetParams p = convnet_init(0, widths);
  if (count != static_cast<std::size_t>(p.param_count())) {
    throw DataError("checkpoint count " + std::to_string(count) +
                    " does not match widths (expect " +
                    std::to_string(p.param_count()) + "): " + path);
  }
  std::vector<double> flat(count);
  f.read(reinterpret_cast<char*>(flat.data()),
         static_cast<std::streamsize>(count * sizeof(double)));
  if (f.gcount() != static_cast<std::streamsize>(count * sizeof(double))) {
    throw DataError("truncated checkpoint payload: " + path);
  }
  p.set_flat(flat);
  return p;
}

}  // namespace dpkit
