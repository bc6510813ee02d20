// tests/test_util.hpp

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

#ifndef UTTEMB_TESTS_TEST_UTIL_HPP_
#define UTTEMB_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <string>

#include <unistd.h>

#include <doctest.h>

#include "uttemb/error.hpp"

namespace testutil {

inline std::string TempPath(const std::string &name) {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() /
             ("uttemb_tests_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return (dir / name).string();
}

template <typename Fn>
uttemb::ErrorCode CodeOf(Fn &&fn) {
  try {
    fn();
  } catch (const uttemb::Error &e) {
    return e.code();
  }
  FAIL("expected an uttemb::Error");
  return uttemb::ErrorCode::kNumeric;
}

}  // namespace testutil

#endif  // UTTEMB_TESTS_TEST_UTIL_HPP_
