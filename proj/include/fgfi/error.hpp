// Copyright 2026 The fgfi Authors
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

#ifndef FGFI_ERROR_HPP
#define FGFI_ERROR_HPP

#include <stdexcept>
#include <string>

namespace fgfi {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, flags, or arguments. CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable data on disk (bad magic, truncation, IO).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value where the contract requires finite arithmetic.
class NumericError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace fgfi

#endif  // FGFI_ERROR_HPP
