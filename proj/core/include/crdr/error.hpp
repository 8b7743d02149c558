// Copyright 2026 The crdr Authors. All Rights Reserved.
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

#ifndef CRDR_ERROR_HPP_
#define CRDR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace crdr {

// Base class for all errors raised by the library. The CLI maps the
// subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A scalar argument outside its legal range (q, beta, symbol level...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN or infinite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid distribution parameters (e.g. nonpositive scale).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed container or file (bad magic, bad version, bad PNG...).
class FormatError : public Error {
 public:
  using Error::Error;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

// Range-coder payload that is truncated or inconsistent with its tables.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Stream produced by a model whose configuration differs from the loaded one.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

}  // namespace crdr

#endif  // CRDR_ERROR_HPP_
