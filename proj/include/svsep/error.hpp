// Copyright 2026 The svsep Authors. All rights reserved.
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

#pragma once

#include <stdexcept>
#include <string>

namespace svsep {

// Invalid arguments are reported with std::invalid_argument. The remaining
// failure classes get their own types so callers can tell them apart.

/// An operation was invoked in a state that does not allow it.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Dataset content is inconsistent (mismatched stems, bad manifest rows).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file does not follow the container layout it claims to.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A well-formed file uses an encoding or layout this library does not handle.
class UnsupportedFormat : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the optimizer when a gradient tensor contains NaN or Inf.
class OptimizerError : public std::runtime_error {
 public:
  OptimizerError(const std::string& tensor, const std::string& what)
      : std::runtime_error(what), tensor_(tensor) {}

  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

}  // namespace svsep
