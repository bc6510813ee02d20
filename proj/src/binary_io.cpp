// src/binary_io.cpp

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

#include "uttemb/binary_io.hpp"

namespace uttemb {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMalformedHeader: return "malformed-header";
    case ErrorCode::kShapeChain: return "shape-chain";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kMalformedArchive: return "malformed-archive";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kMissingLabel: return "missing-label";
    case ErrorCode::kUnknownSource: return "unknown-source";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kNumeric: return "numeric";
  }
  return "unknown";
}

int ExitStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
    case ErrorCode::kOutOfRange:
      return 1;
    case ErrorCode::kNumeric:
      return 3;
    default:
      return 2;
  }
}

BinaryWriter::BinaryWriter(const std::string &path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) Fail(ErrorCode::kIo, "cannot open " + path + " for writing");
}

void BinaryWriter::WriteMagic(std::string_view magic) {
  WriteRaw(magic.data(), magic.size());
}

void BinaryWriter::WriteString(std::string_view s) {
  WriteU32(static_cast<std::uint32_t>(s.size()));
  WriteRaw(s.data(), s.size());
}

void BinaryWriter::WriteDoubles(std::span<const double> values) {
  WriteU64(values.size());
  WriteRaw(values.data(), values.size() * sizeof(double));
}

void BinaryWriter::WriteVector(const Eigen::VectorXd &v) {
  WriteDoubles(std::span<const double>(v.data(), v.size()));
}

void BinaryWriter::WriteMatrix(const Eigen::MatrixXd &m) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  WriteDoubles(std::span<const double>(rm.data(), rm.size()));
}

void BinaryWriter::WriteRaw(const void *data, std::size_t bytes) {
  out_.write(static_cast<const char *>(data),
             static_cast<std::streamsize>(bytes));
  if (!out_) Fail(ErrorCode::kIo, "write failed on " + path_);
}

void BinaryWriter::Close() {
  out_.close();
  if (!out_) Fail(ErrorCode::kIo, "close failed on " + path_);
}

BinaryReader::BinaryReader(const std::string &path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) Fail(ErrorCode::kIo, "cannot open " + path);
}

void BinaryReader::ExpectMagic(std::string_view magic, ErrorCode code) {
  std::string got(magic.size(), '\0');
  in_.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!in_ || got != magic)
    Fail(code, path_ + ": bad magic, expected " + std::string(magic));
}

std::uint32_t BinaryReader::ReadU32() {
  std::uint32_t v;
  ReadRaw(&v, sizeof(v));
  return v;
}

std::uint64_t BinaryReader::ReadU64() {
  std::uint64_t v;
  ReadRaw(&v, sizeof(v));
  return v;
}

double BinaryReader::ReadF64() {
  double v;
  ReadRaw(&v, sizeof(v));
  return v;
}

std::string BinaryReader::ReadString() {
  std::uint32_t n = ReadU32();
  if (n > (1u << 24)) Fail(ErrorCode::kMalformedArchive, path_ + ": string too long");
  std::string s(n, '\0');
  ReadRaw(s.data(), n);
  return s;
}

std::vector<double> BinaryReader::ReadDoubles() {
  std::uint64_t n = ReadU64();
  if (n > (std::uint64_t{1} << 34))
    Fail(ErrorCode::kMalformedArchive, path_ + ": payload too large");
  std::vector<double> v(n);
  ReadRaw(v.data(), n * sizeof(double));
  return v;
}

std::vector<double> BinaryReader::ReadDoubles(std::size_t expected) {
  std::vector<double> v = ReadDoubles();
  if (v.size() != expected)
    Fail(ErrorCode::kMalformedArchive,
         path_ + ": payload has " + std::to_string(v.size()) +
             " values, expected " + std::to_string(expected));
  return v;
}

Eigen::VectorXd BinaryReader::ReadVector(std::size_t expected) {
  std::vector<double> v = ReadDoubles(expected);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd BinaryReader::ReadMatrix(std::size_t rows, std::size_t cols) {
  std::vector<double> v = ReadDoubles(rows * cols);
  return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                  Eigen::RowMajor>>(
      v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void BinaryReader::ReadRaw(void *data, std::size_t bytes) {
  in_.read(static_cast<char *>(data), static_cast<std::streamsize>(bytes));
  if (!in_ || static_cast<std::size_t>(in_.gcount()) != bytes)
    Fail(ErrorCode::kMalformedArchive, path_ + ": unexpected end of file");
}

bool BinaryReader::AtEnd() {
  return in_.peek() == std::char_traits<char>::eof();
}

}  // namespace uttemb
