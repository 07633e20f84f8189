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

#ifndef DPKIT_TENSOR_HPP_
#define DPKIT_TENSOR_HPP_

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace dpkit {

// Dense row-major tensor of doubles. Value semantics; shapes are immutable
// after construction except through reshape(), which preserves the element
// count. No views, no broadcasting: operations that need structure interpret
// the flat buffer themselves.
class Tensor {
 public:
  Tensor() = default;

  // Zero-initialized tensor of the given shape. Dimensions must be positive.
  explicit Tensor(std::vector<int> shape);

  // Takes ownership of data; data.size() must equal the shape's element
  // count. In checked mode every element must be finite.
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor full(std::vector<int> shape, double value);

  const std::vector<int>& shape() const { return shape_; }
  int dim(int axis) const;
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // Bounds-checked multi-index access (row-major). Throws ShapeError on a
  // rank mismatch or out-of-range index.
  double& at(std::initializer_list<int> idx);
  double at(std::initializer_list<int> idx) const;

  // Same element count, new shape. Throws ShapeError otherwise.
  Tensor reshape(std::vector<int> shape) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // "[2, 3, 4]" for error messages.
  std::string shape_str() const;
  static std::string shape_str(const std::vector<int>& shape);

  // In checked mode tensor construction validates finiteness and ops verify
  // shape contracts eagerly. Cheap enough to leave on; tests flip it to
  // assert that violations are caught.
  static void set_checked(bool on);
  static bool checked();

  // Throws InvalidArgument in checked mode if any element is non-finite.
  // `context` names the producing operation.
  void check_finite(const char* context) const;

 private:
  std::int64_t flat_index(std::initializer_list<int> idx) const;

  std::vector<int> shape_;
  std::vector<double> data_;
};

// Element count for a shape; validates that all dimensions are positive.
std::int64_t shape_size(const std::vector<int>& shape);

}  // namespace dpkit

#endif  // DPKIT_TENSOR_HPP_
