// Copyright 2026 The SA-DPSGD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sadp {

enum class ErrorCode {
  kInvalidParameter,
  kNonFiniteInput,
  kDimensionMismatch,
  kBudgetInfeasible,
  kBadMagic,
  kTruncatedFile,
  kCountMismatch,
  kEmptyDataset,
  kInvalidConfig,
  kIoError,
};

constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kNonFiniteInput: return "non-finite-input";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kBudgetInfeasible: return "budget-infeasible";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kTruncatedFile: return "truncated-file";
    case ErrorCode::kCountMismatch: return "count-mismatch";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

// All library failures are reported as sadp::Error carrying a code that the
// CLI maps onto its exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace internal {

inline void Require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace internal
}  // namespace sadp
