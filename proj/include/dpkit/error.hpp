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

#ifndef DPKIT_ERROR_HPP_
#define DPKIT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace dpkit {

// Base class for all dpkit errors. Catch this to handle anything the
// library throws; subclasses indicate which contract was violated.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A numeric argument is outside its documented domain (order <= 1,
// negative sigma, epsilon <= 0, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A tensor operation received operands with incompatible shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A configuration (training config, experiment spec, widths, CLI flags)
// fails validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An input file is missing, truncated, or structurally malformed.
class DataError : public Error {
 public:
  using Error::Error;
};

// A text input (CSV, config file, container header) failed to parse.
// Messages carry a 1-based line number where applicable.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Noise calibration could not bracket or converge on a solution.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpkit

#endif  // DPKIT_ERROR_HPP_
