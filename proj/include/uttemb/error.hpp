// include/uttemb/error.hpp

// Copyright 2026  The uttembed Authors
//
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

#ifndef UTTEMB_ERROR_HPP_
#define UTTEMB_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace uttemb {

enum class ErrorCode {
  kUsage,
  kIo,
  kMalformedHeader,
  kShapeChain,
  kNonFinite,
  kMalformedArchive,
  kDuplicateId,
  kDimensionMismatch,
  kMissingLabel,
  kUnknownSource,
  kInsufficientData,
  kOutOfRange,
  kInfeasible,
  kNumeric,
};

std::string_view ErrorCodeName(ErrorCode code);

/// Maps an error code onto the CLI exit status (1 usage, 2 data, 3 numeric).
int ExitStatus(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string &what) {
  throw Error(code, what);
}

}  // namespace uttemb

#endif  // UTTEMB_ERROR_HPP_
