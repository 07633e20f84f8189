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

#include "dpkit/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include "dpkit/error.hpp"

namespace dpkit {

namespace {
std::atomic<bool> g_checked{true};
}  // namespace

std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) {
      throw ShapeError("tensor shape has non-positive dimension: " +
                       Tensor::shape_str(shape));
    }
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)),
      data_(static_cast<std::size_t>(shape_size(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<std::int64_t>(data_.size()) != shape_size(shape_)) {
    throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str());
  }
  check_finite("Tensor");
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  for (auto& x : t.data_) x = value;
  t.check_finite("Tensor::full");
  return t;
}

int Tensor::dim(int axis) const {
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str());
  }
  return shape_[static_cast<std::size_t>(axis)];
}

double& Tensor::at(std::initializer_list<int> idx) {
  return data_[static_cast<std::size_t>(flat_index(idx))];
}

double Tensor::at(std::initializer_list<int> idx) const {
  return data_[static_cast<std::size_t>(flat_index(idx))];
}

std::int64_t Tensor::flat_index(std::initializer_list<int> idx) const {
  if (static_cast<int>(idx.size()) != rank()) {
    throw ShapeError("index rank " + std::to_string(idx.size()) +
                     " does not match tensor shape " + shape_str());
  }
  std::int64_t flat = 0;
  int axis = 0;
  for (int i : idx) {
    const int d = shape_[static_cast<std::size_t>(axis)];
    if (i < 0 || i >= d) {
      throw ShapeError("index " + std::to_string(i) + " out of range on axis " +
                       std::to_string(axis) + " for shape " + shape_str());
    }
    flat = flat * d + i;
    ++axis;
  }
  return flat;
}

Tensor Tensor::reshape(std::vector<int> shape) const {
  if (shape_size(shape) != size()) {
    throw ShapeError("reshape from " + shape_str() + " to " +
                     shape_str(shape) + " changes element count");
  }
  return Tensor(std::move(shape), data_);
}

std::string Tensor::shape_str() const { return shape_str(shape_); }

std::string Tensor::shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void Tensor::set_checked(bool on) { g_checked.store(on); }
bool Tensor::checked() { return g_checked.load(); }

void Tensor::check_finite(const char* context) const {
  if (!checked()) return;
  for (double x : data_) {
    if (!std::isfinite(x)) {
      throw InvalidArgument(std::string(context) +
                            ": tensor contains a non-finite value");
    }
  }
}

}  // namespace dpkit
