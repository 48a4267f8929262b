// Copyright 2026 The mamba Authors
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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mamba {

/// Raised when a caller violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value. `where` carries the iteration
/// or sample index at which it was detected.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::int64_t where)
      : std::runtime_error(what), where_(where) {}

  std::int64_t where() const noexcept { return where_; }

 private:
  std::int64_t where_;
};

/// Every arm of a tuner diverged, so no configuration can be selected.
class AllDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mamba
