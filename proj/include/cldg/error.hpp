// Copyright 2026 The CLDG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CLDG_ERROR_HPP_
#define CLDG_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace cldg {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument combination (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unusable input data (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Incompatible tensor shapes. Treated as a data error by the CLI.
class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite values or degenerate numerics (CLI exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace cldg

#endif  // CLDG_ERROR_HPP_
