// cleanadapt/error.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace cleanadapt {

enum class ErrorCode {
  kInvalidArgument = 1,
  kNonFinite,
  kShapeMismatch,
  kLabelOutOfRange,
  kBadMagic,
  kTruncated,
  kDimMismatch,
  kIo,
  kParse,
  kUnlabeled,
  kEmpty,
};

inline const char *ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kLabelOutOfRange: return "label out of range";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kTruncated: return "truncated file";
    case ErrorCode::kDimMismatch: return "dimension inconsistency";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kUnlabeled: return "missing labels";
    case ErrorCode::kEmpty: return "empty input";
  }
  return "unknown error";
}

/// All library failures are reported through this exception. The code lets
/// callers (and the CLI exit status) distinguish failure classes; the message
/// carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string &what) {
  throw Error(code, what);
}

}  // namespace cleanadapt
