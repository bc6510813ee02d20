// include/uttemb/synth.hpp

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

#ifndef UTTEMB_SYNTH_HPP_
#define UTTEMB_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "uttemb/features.hpp"

namespace uttemb {

/// Synthetic labeled corpus: unit Gaussian frames plus per-speaker,
/// per-condition, per-noise and per-gender offset vectors scaled by their
/// strengths. Each offset vector has expected squared norm 1.
struct SynthSpec {
  std::size_t speakers = 8;
  std::size_t utts_per_speaker = 10;
  std::size_t conditions = 14;
  std::size_t noises = 7;
  std::size_t genders = 2;
  std::size_t frames = 50;
  std::size_t dim = 40;
  double speaker_strength = 1.0;
  double condition_strength = 1.0;
  double noise_strength = 1.0;
  double gender_strength = 1.0;
  std::uint64_t seed = 0;
  /// Index of the first speaker; corpora with the same seed and disjoint
  /// speaker ranges share condition/noise/gender offsets but not speakers.
  std::size_t first_speaker = 0;
};

/// Deterministic in the spec. Speaker i has gender i mod genders; each
/// utterance draws a condition uniformly and its noise type is the condition
/// index mod noises.
std::vector<UtteranceFeatures> SynthCorpus(const SynthSpec &spec);

}  // namespace uttemb

#endif  // UTTEMB_SYNTH_HPP_
