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

#include "dpkit/data.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dpkit/error.hpp"

namespace dpkit {

namespace {

constexpr int kChannels = 3;
constexpr int kSide = 32;
constexpr std::int64_t kPixels = kChannels * kSide * kSide;  // 3072
constexpr std::int64_t kRecordBytes = kPixels + 1;           // 3073

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

std::string to_string(Provenance prov) {
  switch (prov) {
    case Provenance::kCifar10:
      return "cifar10";
    case Provenance::kSynthetic:
      return "synthetic";
    case Provenance::kPerturbed:
      return "perturbed";
  }
  return "unknown";
}

void Dataset::validate() const {
  if (images.rank() != 4 || images.dim(1) != kChannels ||
      images.dim(2) != kSide || images.dim(3) != kSide) {
    throw DataError("dataset images must be [N,3,32,32], got " +
                    images.shape_str());
  }
  if (images.dim(0) < 1) {
    throw DataError("dataset is empty");
  }
  if (static_cast<int>(labels.size()) != images.dim(0)) {
    throw DataError("dataset has " + std::to_string(labels.size()) +
                    " labels for " + std::to_string(images.dim(0)) +
                    " images");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > 9) {
      throw DataError("label " + std::to_string(labels[i]) + " at record " +
                      std::to_string(i) + " outside {0..9}");
    }
  }
}

RawBatch load_cifar10_batch(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) {
    throw DataError("cannot open CIFAR-10 batch: " + path);
  }
  const std::int64_t bytes = static_cast<std::int64_t>(f.tellg());
  if (bytes == 0 || bytes % kRecordBytes != 0) {
    throw DataError("corrupt CIFAR-10 batch " + path + ": size " +
                    std::to_string(bytes) + " bytes is not a multiple of " +
                    std::to_string(kRecordBytes) +
                    " (fault at byte offset " +
                    std::to_string(bytes - bytes % kRecordBytes) + ")");
  }
  const int n = static_cast<int>(bytes / kRecordBytes);
  f.seekg(0);

  RawBatch out;
  out.images = Tensor({n, kChannels, kSide, kSide});
  out.labels.resize(static_cast<std::size_t>(n));
  std::vector<unsigned char> record(static_cast<std::size_t>(kRecordBytes));
  for (int i = 0; i < n; ++i) {
    f.read(reinterpret_cast<char*>(record.data()),
           static_cast<std::streamsize>(record.size()));
    if (f.gcount() != static_cast<std::streamsize>(record.size())) {
      throw DataError("short read in CIFAR-10 batch " + path +
                      " at byte offset " +
                      std::to_string(static_cast<std::int64_t>(i) *
                                     kRecordBytes));
    }
    const int label = record[0];
    if (label > 9) {
      throw DataError("corrupt CIFAR-10 batch " + path + ": label " +
                      std::to_string(label) + " at byte offset " +
                      std::to_string(static_cast<std::int64_t>(i) *
                                     kRecordBytes));
    }
    out.labels[static_cast<std::size_t>(i)] = label;
    double* dst = out.images.data() + static_cast<std::int64_t>(i) * kPixels;
    for (std::int64_t p = 0; p < kPixels; ++p) {
      dst[p] = static_cast<double>(record[static_cast<std::size_t>(p + 1)]) /
               255.0;
    }
  }
  return out;
}

std::pair<Dataset, Dataset> load_cifar10(const std::string& dir) {
  std::vector<RawBatch> train_batches;
  std::int64_t train_n = 0;
  for (int i = 1; i <= 5; ++i) {
    train_batches.push_back(
        load_cifar10_batch(dir + "/data_batch_" + std::to_string(i) + ".bin"));
    train_n += train_batches.back().images.dim(0);
  }
  RawBatch test_batch = load_cifar10_batch(dir + "/test_batch.bin");

  Dataset train;
  train.split = Split::kTrain;
  train.provenance = Provenance::kCifar10;
  train.images = Tensor({static_cast<int>(train_n), kChannels, kSide, kSide});
  train.labels.reserve(static_cast<std::size_t>(train_n));
  std::int64_t pos = 0;
  for (const RawBatch& b : train_batches) {
    std::memcpy(train.images.data() + pos, b.images.data(),
                static_cast<std::size_t>(b.images.size()) * sizeof(double));
    pos += b.images.size();
    train.labels.insert(train.labels.end(), b.labels.begin(), b.labels.end());
  }

  // Channel statistics over the train split only.
  const std::int64_t per_channel = static_cast<std::int64_t>(kSide) * kSide;
  std::array<double, 3> mean{0, 0, 0}, var{0, 0, 0};
  for (int c = 0; c < kChannels; ++c) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < train_n; ++i) {
      const double* img = train.images.data() + i * kPixels + c * per_channel;
      for (std::int64_t p = 0; p < per_channel; ++p) acc += img[p];
    }
    mean[static_cast<std::size_t>(c)] =
        acc / static_cast<double>(train_n * per_channel);
  }
  for (int c = 0; c < kChannels; ++c) {
    double acc = 0.0;
    const double m = mean[static_cast<std::size_t>(c)];
    for (std::int64_t i = 0; i < train_n; ++i) {
      const double* img = train.images.data() + i * kPixels + c * per_channel;
      for (std::int64_t p = 0; p < per_channel; ++p) {
        const double d = img[p] - m;
        acc += d * d;
      }
    }
    var[static_cast<std::size_t>(c)] =
        acc / static_cast<double>(train_n * per_channel);
  }
  std::array<double, 3> stddev;
  for (int c = 0; c < kChannels; ++c) {
    // Degenerate (constant-channel) inputs get a unit scale instead of a
    // division by zero.
    const double s = std::sqrt(var[static_cast<std::size_t>(c)]);
    stddev[static_cast<std::size_t>(c)] = s > 1e-12 ? s : 1.0;
  }

  auto normalize = [&](Tensor& images) {
    const std::int64_t n = images.dim(0);
    for (std::int64_t i = 0; i < n; ++i) {
      for (int c = 0; c < kChannels; ++c) {
        double* img = images.data() + i * kPixels + c * per_channel;
        const double m = mean[static_cast<std::size_t>(c)];
        const double inv = 1.0 / stddev[static_cast<std::size_t>(c)];
        for (std::int64_t p = 0; p < per_channel; ++p) {
          img[p] = (img[p] - m) * inv;
        }
      }
    }
  };

  train.channel_mean = mean;
  train.channel_std = stddev;
  normalize(train.images);
  train.validate();

  Dataset test;
  test.split = Split::kTest;
  test.provenance = Provenance::kCifar10;
  test.images = std::move(test_batch.images);
  test.labels = std::move(test_batch.labels);
  test.channel_mean = mean;
  test.channel_std = stddev;
  normalize(test.images);
  test.validate();

  return {std::move(train), std::move(test)};
}

Dataset make_synthetic(int classes, int per_class, double separation,
                       std::uint64_t seed) {
  if (classes < 2 || classes > 10) {
    throw ConfigError("synthetic classes must be in [2, 10], got " +
                      std::to_string(classes));
  }
  if (per_class < 1) {
    throw ConfigError("synthetic per_class must be >= 1, got " +
                      std::to_string(per_class));
  }
  if (!(separation > 0.0)) {
    throw ConfigError("synthetic separation must be positive, got " +
                      std::to_string(separation));
  }

  // Signal block: the leading kSide elements of the flat image. Class c's
  // blob is centered at separation * e_c inside that block; everything
  // outside the block is exactly zero so distances are dominated by the
  // class offset.
  const int block = kSide;
  const int n = classes * per_class;
  Rng rng(Rng::derive_seed(seed, 0xDA7A));

  Dataset ds;
  ds.provenance = Provenance::kSynthetic;
  ds.split = Split::kTrain;
  ds.images = Tensor({n, kChannels, kSide, kSide});
  ds.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = i % classes;
    ds.labels[static_cast<std::size_t>(i)] = label;
    double* img = ds.images.data() + static_cast<std::int64_t>(i) * kPixels;
    for (int j = 0; j < block; ++j) {
      img[j] = rng.gaussian() + (j == label ? separation : 0.0);
    }
  }
  ds.validate();
  return ds;
}

Dataset subset(const Dataset& ds, int n) {
  ds.validate();
  if (n < 1 || n > ds.size()) {
    throw InvalidArgument("subset size " + std::to_string(n) +
                          " outside [1, " + std::to_string(ds.size()) + "]");
  }
  Dataset out;
  out.split = ds.split;
  out.provenance = ds.provenance;
  out.channel_mean = ds.channel_mean;
  out.channel_std = ds.channel_std;
  out.images = Tensor({n, kChannels, kSide, kSide});
  std::memcpy(out.images.data(), ds.images.data(),
              static_cast<std::size_t>(out.images.size()) * sizeof(double));
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
  return out;
}

void save_container(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw DataError("cannot open container for writing: " + path);
  }
  const int n = ds.size();
  f << "dpkit-dataset 1\n";
  f << "n " << n << '\n';
  f << "shape " << kChannels << ' ' << kSide << ' ' << kSide << '\n';
  f << "split " << to_string(ds.split) << '\n';
  f << "provenance " << to_string(ds.provenance) << '\n';
  f << "mean " << format_double(ds.channel_mean[0]) << ' '
    << format_double(ds.channel_mean[1]) << ' '
    << format_double(ds.channel_mean[2]) << '\n';
  f << "std " << format_double(ds.channel_std[0]) << ' '
    << format_double(ds.channel_std[1]) << ' '
    << format_double(ds.channel_std[2]) << '\n';
  f << "labels\n";
  for (int label : ds.labels) {
    const unsigned char byte = static_cast<unsigned char>(label);
    f.write(reinterpret_cast<const char*>(&byte), 1);
  }
  f << "\npayload\n";
  f.write(reinterpret_cast<const char*>(ds.images.data()),
          static_cast<std::streamsize>(
              static_cast<std::size_t>(ds.images.size()) * sizeof(double)));
  if (!f) {
    throw DataError("short write while saving container: " + path);
  }
}

Dataset load_container(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw DataError("cannot open container: " + path);
  }
  auto expect_line = [&](const std::string& what) {
    std::string line;
    if (!std::getline(f, line)) {
      throw DataError("container " + path + ": missing " + what + " line");
    }
    return line;
  };

  if (expect_line("magic") != "dpkit-dataset 1") {
    throw DataError("not a dpkit-dataset v1 container: " + path);
  }
  int n = 0;
  {
    std::istringstream is(expect_line("n"));
    std::string key;
    if (!(is >> key >> n) || key != "n" || n < 1) {
      throw DataError("container " + path + ": malformed n line");
    }
  }
  {
    std::istringstream is(expect_line("shape"));
    std::string key;
    int c = 0, h = 0, w = 0;
    if (!(is >> key >> c >> h >> w) || key != "shape" || c != kChannels ||
        h != kSide || w != kSide) {
      throw DataError("container " + path + ": unsupported shape");
    }
  }
  Dataset ds;
  {
    std::istringstream is(expect_line("split"));
    std::string key, value;
    is >> key >> value;
    if (key != "split" || (value != "train" && value != "test")) {
      throw DataError("container " + path + ": malformed split line");
    }
    ds.split = value == "train" ? Split::kTrain : Split::kTest;
  }
  {
    std::istringstream is(expect_line("provenance"));
    std::string key, value;
    is >> key >> value;
    if (key != "provenance") {
      throw DataError("container " + path + ": malformed provenance line");
    }
    if (value == "cifar10") {
      ds.provenance = Provenance::kCifar10;
    } else if (value == "synthetic") {
      ds.provenance = Provenance::kSynthetic;
    } else if (value == "perturbed") {
      ds.provenance = Provenance::kPerturbed;
    } else {
      throw DataError("container " + path + ": unknown provenance " + value);
    }
  }
  {
    std::istringstream is(expect_line("mean"));
    std::string key;
    if (!(is >> key >> ds.channel_mean[0] >> ds.channel_mean[1] >>
          ds.channel_mean[2]) ||
        key != "mean") {
      throw DataError("container " + path + ": malformed mean line");
    }
  }
  {
    std::istringstream is(expect_line("std"));
    std::string key;
    if (!(is >> key >> ds.channel_std[0] >> ds.channel_std[1] >>
          ds.channel_std[2]) ||
        key != "std") {
      throw DataError("container " + path + ": malformed std line");
    }
  }
  if (expect_line("labels") != "labels") {
    throw DataError("container " + path + ": expected labels section");
  }
  ds.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    unsigned char byte = 0;
    f.read(reinterpret_cast<char*>(&byte), 1);
    if (!f) {
      throw DataError("container " + path + ": truncated labels");
    }
    ds.labels[static_cast<std::size_t>(i)] = byte;
  }
  if (expect_line("label terminator") != "" ||
      expect_line("payload") != "payload") {
    throw DataError("container " + path + ": expected payload section");
  }
  ds.images = Tensor({n, kChannels, kSide, kSide});
  f.read(reinterpret_cast<char*>(ds.images.data()),
         static_cast<std::streamsize>(
             static_cast<std::size_t>(ds.images.size()) * sizeof(double)));
  if (f.gcount() != static_cast<std::streamsize>(
                        static_cast<std::size_t>(ds.images.size()) *
                        sizeof(double))) {
    throw DataError("container " + path + ": truncated payload");
  }
  ds.validate();
  return ds;
}

PoissonSampler::PoissonSampler(double q, int n, std::uint64_t seed)
    : q_(q), n_(n), rng_(Rng::derive_seed(seed, 0x9015)) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw InvalidArgument("Poisson rate must lie in (0, 1], got " +
                          std::to_string(q));
  }
  if (n < 1) {
    throw InvalidArgument("Poisson population must be >= 1, got " +
                          std::to_string(n));
  }
}

std::vector<int> PoissonSampler::next() {
  std::vector<int> indices;
  for (int i = 0; i < n_; ++i) {
    if (rng_.uniform() < q_) indices.push_back(i);
  }
  return indices;
}

std::vector<std::vector<int>> poisson_batches(PoissonSampler& sampler,
                                              int steps) {
  if (steps < 0) {
    throw InvalidArgument("poisson_batches steps must be >= 0");
  }
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) out.push_back(sampler.next());
  return out;
}

}  // namespace dpkit
