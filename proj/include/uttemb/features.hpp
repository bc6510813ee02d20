// include/uttemb/features.hpp

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

#ifndef UTTEMB_FEATURES_HPP_
#define UTTEMB_FEATURES_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace uttemb {

enum class LabelKind { kSpeaker, kCondition, kNoise, kGender };

std::string_view LabelKindName(LabelKind kind);
/// Parses "speaker", "condition", "noise" or "gender"; throws kUsage otherwise.
LabelKind ParseLabelKind(std::string_view name);

/// Attribute labels of an utterance. An empty string means the label is absent.
struct Labels {
  std::string speaker;
  std::string condition;
  std::string noise;
  std::string gender;

  const std::string &Get(LabelKind kind) const;
  std::string &Get(LabelKind kind);
  bool operator==(const Labels &) const = default;
};

struct UtteranceFeatures {
  std::string utt_id;
  Eigen::MatrixXd matrix;  // T x F, one frame per row
  Labels labels;

  Eigen::Index NumFrames() const { return matrix.rows(); }
  Eigen::Index Dim() const { return matrix.cols(); }
};

/// Context-spliced frames. Column t holds frame t as a (context x freq) map
/// stored row-major, i.e. element (c, f) sits at row c * freq + f. The dense
/// input path reads the column as a flat vector; the convolutional path reads
/// it as a single-channel map.
struct SplicedFrames {
  std::size_t context = 1;
  std::size_t freq = 0;
  Eigen::MatrixXd frames;  // (context * freq) x T

  Eigen::Index NumFrames() const { return frames.cols(); }
};

/// Archive layout ("UTT1"): per record a length-prefixed utt id, four
/// length-prefixed labels (speaker, condition, noise, gender), u32 T, u32 F,
/// then T*F little-endian float32 values row-major. Records run to EOF.
std::vector<UtteranceFeatures> LoadCorpus(const std::string &path);
void SaveCorpus(const std::vector<UtteranceFeatures> &corpus,
                const std::string &path);

inline constexpr double kCmvnStddevFloor = 1e-8;

/// Per-utterance mean and variance normalization. Columns whose (population)
/// standard deviation is at or below kCmvnStddevFloor are only mean-subtracted.
UtteranceFeatures Cmvn(const UtteranceFeatures &utt);

/// Stacks rows t-left .. t+right for every frame t, replicating the first and
/// last rows where the window runs off the utterance.
SplicedFrames Splice(const UtteranceFeatures &utt, std::size_t left,
                     std::size_t right);

}  // namespace uttemb

#endif  // UTTEMB_FEATURES_HPP_
