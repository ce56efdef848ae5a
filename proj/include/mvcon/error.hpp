// Copyright 2026 The mvcon Authors
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

namespace mvcon {

// Numeric values are part of the C ABI (see mvcon.h) and the CLI exit codes.
enum class ErrorCode : int {
  kOk = 0,
  kInternal = 1,
  kInvalidConfig = 2,
  kMissingInput = 3,
  kConstraint = 4,
  kDivergence = 5,
  kShapeMismatch = 6,
  kNonFinite = 7,
  kIo = 8,
  kFormat = 9,
  kMissingCheckpoint = 10,
  kOutputExists = 11,
  kInvalidArgument = 12,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mvcon
