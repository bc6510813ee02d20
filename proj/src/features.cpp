// src/features.cpp

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

#include "uttemb/features.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <unordered_set>

#include "uttemb/binary_io.hpp"
#include "uttemb/error.hpp"

namespace uttemb {

std::string_view LabelKindName(LabelKind kind) {
  switch (kind) {
    case LabelKind::kSpeaker: return "speaker";
    case LabelKind::kCondition: return "condition";
    case LabelKind::kNoise: return "noise";
    case LabelKind::kGender: return "gender";
  }
  return "unknown";
}

LabelKind ParseLabelKind(std::string_view name) {
  if (name == "speaker") return LabelKind::kSpeaker;
  if (name == "condition") return LabelKind::kCondition;
  if (name == "noise") return LabelKind::kNoise;
  if (name == "gender") return LabelKind::kGender;
  Fail(ErrorCode::kUsage, "unknown label kind '" + std::string(name) + "'");
}

const std::string &Labels::Get(LabelKind kind) const {
  switch (kind) {
    case LabelKind::kSpeaker: return speaker;
    case LabelKind::kCondition: return condition;
    case LabelKind::kNoise: return noise;
    case LabelKind::kGender: return gender;
  }
  return speaker;
}

std::string &Labels::Get(LabelKind kind) {
  return const_cast<std::string &>(std::as_const(*this).Get(kind));
}

std::vector<UtteranceFeatures> LoadCorpus(const std::string &path) {
  BinaryReader in(path);
  in.ExpectMagic("UTT1");
  std::vector<UtteranceFeatures> corpus;
  std::unordered_set<std::string> seen;
  while (!in.AtEnd()) {
    UtteranceFeatures utt;
    utt.utt_id = in.ReadString();
    utt.labels.speaker = in.ReadString();
    utt.labels.condition = in.ReadString();
    utt.labels.noise = in.ReadString();
    utt.labels.gender = in.ReadString();
    std::uint32_t t = in.ReadU32(), f = in.ReadU32();
    if (t == 0 || f == 0)
      Fail(ErrorCode::kMalformedArchive,
           path + ": utterance " + utt.utt_id + " has an empty matrix");
    if (!seen.insert(utt.utt_id).second)
      Fail(ErrorCode::kDuplicateId, path + ": duplicate utt id " + utt.utt_id);
    std::vector<float> raw(static_cast<std::size_t>(t) * f);
    in.ReadRaw(raw.data(), raw.size() * sizeof(float));
    utt.matrix.resize(t, f);
    for (std::uint32_t r = 0; r < t; ++r)
      for (std::uint32_t c = 0; c < f; ++c) {
        float v = raw[static_cast<std::size_t>(r) * f + c];
        if (!std::isfinite(v))
          Fail(ErrorCode::kNonFinite,
               path + ": non-finite value in utterance " + utt.utt_id);
        utt.matrix(r, c) = v;
      }
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

void SaveCorpus(const std::vector<UtteranceFeatures> &corpus,
                const std::string &path) {
  BinaryWriter out(path);
  out.WriteMagic("UTT1");
  for (const auto &utt : corpus) {
    if (utt.matrix.rows() == 0 || utt.matrix.cols() == 0)
      Fail(ErrorCode::kMalformedArchive, "cannot save empty utterance " + utt.utt_id);
    out.WriteString(utt.utt_id);
    out.WriteString(utt.labels.speaker);
    out.WriteString(utt.labels.condition);
    out.WriteString(utt.labels.noise);
    out.WriteString(utt.labels.gender);
    out.WriteU32(static_cast<std::uint32_t>(utt.matrix.rows()));
    out.WriteU32(static_cast<std::uint32_t>(utt.matrix.cols()));
    std::vector<float> raw;
    raw.reserve(utt.matrix.size());
    for (Eigen::Index r = 0; r < utt.matrix.rows(); ++r)
      for (Eigen::Index c = 0; c < utt.matrix.cols(); ++c)
        raw.push_back(static_cast<float>(utt.matrix(r, c)));
    out.WriteRaw(raw.data(), raw.size() * sizeof(float));
  }
  out.Close();
}

UtteranceFeatures Cmvn(const UtteranceFeatures &utt) {
  UtteranceFeatures out = utt;
  const double n = static_cast<double>(utt.matrix.rows());
  for (Eigen::Index c = 0; c < out.matrix.cols(); ++c) {
    auto col = out.matrix.col(c);
    double mean = col.sum() / n;
    col.array() -= mean;
    double stddev = std::sqrt(col.squaredNorm() / n);
    if (stddev > kCmvnStddevFloor) col /= stddev;
  }
  return out;
}

SplicedFrames Splice(const UtteranceFeatures &utt, std::size_t left,
                     std::size_t right) {
  const Eigen::Index t_total = utt.matrix.rows();
  const Eigen::Index freq = utt.matrix.cols();
  SplicedFrames out;
  out.context = left + right + 1;
  out.freq = static_cast<std::size_t>(freq);
  out.frames.resize(static_cast<Eigen::Index>(out.context) * freq, t_total);
  for (Eigen::Index t = 0; t < t_total; ++t) {
    for (std::size_t c = 0; c < out.context; ++c) {
      Eigen::Index src = t + static_cast<Eigen::Index>(c) -
                         static_cast<Eigen::Index>(left);
      src = std::clamp<Eigen::Index>(src, 0, t_total - 1);
      out.frames.col(t).segment(static_cast<Eigen::Index>(c) * freq, freq) =
          utt.matrix.row(src).transpose();
    }
  }
  return out;
}

}  // namespace uttemb
