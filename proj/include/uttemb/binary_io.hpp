// include/uttemb/binary_io.hpp

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

#ifndef UTTEMB_BINARY_IO_HPP_
#define UTTEMB_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uttemb/error.hpp"

namespace uttemb {

static_assert(std::endian::native == std::endian::little,
              "archive formats assume a little-endian host");

/// Little-endian binary writer over an output file. All archive formats in
/// this library go through it, so lengths are always u32 and payload counts
/// u64.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string &path);

  void WriteMagic(std::string_view magic);
  void WriteU32(std::uint32_t v) { WriteRaw(&v, sizeof(v)); }
  void WriteU64(std::uint64_t v) { WriteRaw(&v, sizeof(v)); }
  void WriteF64(double v) { WriteRaw(&v, sizeof(v)); }
  void WriteString(std::string_view s);
  /// Element count (u64) followed by raw doubles.
  void WriteDoubles(std::span<const double> values);
  void WriteVector(const Eigen::VectorXd &v);
  /// Row-major payload of a matrix, preceded by its element count.
  void WriteMatrix(const Eigen::MatrixXd &m);
  void WriteRaw(const void *data, std::size_t bytes);
  void Close();

 private:
  std::string path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string &path);

  /// Throws kMalformedArchive (or `code`) when the magic does not match.
  void ExpectMagic(std::string_view magic,
                   ErrorCode code = ErrorCode::kMalformedArchive);
  std::uint32_t ReadU32();
  std::uint64_t ReadU64();
  double ReadF64();
  std::string ReadString();
  std::vector<double> ReadDoubles();
  /// Reads a count-prefixed payload and checks that it holds `expected` values.
  std::vector<double> ReadDoubles(std::size_t expected);
  Eigen::VectorXd ReadVector(std::size_t expected);
  Eigen::MatrixXd ReadMatrix(std::size_t rows, std::size_t cols);
  void ReadRaw(void *data, std::size_t bytes);
  bool AtEnd();
  const std::string &path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

}  // namespace uttemb

#endif  // UTTEMB_BINARY_IO_HPP_
