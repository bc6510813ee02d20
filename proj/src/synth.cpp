// src/synth.cpp

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

#include "uttemb/synth.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "uttemb/error.hpp"

namespace uttemb {

namespace {

enum : std::uint64_t { kSpeakerStream = 1, kConditionStream, kNoiseStream, kGenderStream, kUttStream };

std::mt19937_64 StreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                          std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

Eigen::VectorXd OffsetVector(std::uint64_t seed, std::uint64_t stream, std::size_t index,
                             std::size_t dim) {
  auto rng = StreamRng(seed, stream, index);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  return v;
}

std::string Name(const char *prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03zu", prefix, index);
  return buf;
}

}  // namespace

std::vector<UtteranceFeatures> SynthCorpus(const SynthSpec &spec) {
  if (spec.speakers < 1 || spec.utts_per_speaker < 1 || spec.conditions < 1 ||
      spec.noises < 1 || spec.genders < 1 || spec.frames < 1 || spec.dim < 1)
    Fail(ErrorCode::kUsage, "synthetic corpus counts must be at least 1");
  if (spec.speaker_strength < 0 || spec.condition_strength < 0 || spec.noise_strength < 0 ||
      spec.gender_strength < 0)
    Fail(ErrorCode::kUsage, "synthetic signal strengths must be nonnegative");

  std::vector<Eigen::VectorXd> conditions, noises, genders;
  for (std::size_t c = 0; c < spec.conditions; ++c)
    conditions.push_back(OffsetVector(spec.seed, kConditionStream, c, spec.dim));
  for (std::size_t k = 0; k < spec.noises; ++k)
    noises.push_back(OffsetVector(spec.seed, kNoiseStream, k, spec.dim));
  for (std::size_t g = 0; g < spec.genders; ++g)
    genders.push_back(OffsetVector(spec.seed, kGenderStream, g, spec.dim));

  std::vector<UtteranceFeatures> corpus;
  corpus.reserve(spec.speakers * spec.utts_per_speaker);
  for (std::size_t s = spec.first_speaker; s < spec.first_speaker + spec.speakers; ++s) {
    const Eigen::VectorXd speaker = OffsetVector(spec.seed, kSpeakerStream, s, spec.dim);
    const std::size_t gender = s % spec.genders;
    for (std::size_t u = 0; u < spec.utts_per_speaker; ++u) {
      auto rng = StreamRng(spec.seed, kUttStream, s, u);
      std::uniform_int_distribution<std::size_t> pick(0, spec.conditions - 1);
      const std::size_t condition = pick(rng);
      const std::size_t noise = condition % spec.noises;
      const Eigen::RowVectorXd offset =
          (spec.speaker_strength * speaker + spec.condition_strength * conditions[condition] +
           spec.noise_strength * noises[noise] + spec.gender_strength * genders[gender])
              .transpose();
      std::normal_distribution<double> normal(0.0, 1.0);
      UtteranceFeatures utt;
      utt.utt_id = Name("spk", s) + "_u" + std::to_string(u);
      utt.labels = {Name("spk", s), Name("cond", condition), Name("noise", noise),
                    Name("g", gender)};
      utt.matrix.resize(static_cast<Eigen::Index>(spec.frames), static_cast<Eigen::Index>(spec.dim));
      for (Eigen::Index t = 0; t < utt.matrix.rows(); ++t)
        for (Eigen::Index d = 0; d < utt.matrix.cols(); ++d) utt.matrix(t, d) = normal(rng);
      utt.matrix.rowwise() += offset;
      corpus.push_back(std::move(utt));
    }
  }
  return corpus;
}

}  // namespace uttemb
