// tests/test_synth.cpp

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

#include <fstream>
#include <iterator>

#include <doctest.h>

#include "experiment.hpp"
#include "test_util.hpp"
#include "uttemb/synth.hpp"

using namespace uttemb;
using testutil::CodeOf;
using testutil::TempPath;

namespace {

std::vector<EmbeddingRecord> InputRecords(const SynthSpec &spec) {
  std::vector<EmbeddingRecord> out;
  for (const auto &u : SynthCorpus(spec)) out.push_back(InputEmbedding(u, 0, 0));
  return out;
}

double SpeakerEer(const SynthSpec &spec) {
  auto recs = InputRecords(spec);
  return experiment::TrialEer(recs, LabelKind::kSpeaker, spec.seed,
                              experiment::Cosine(experiment::MeanOf(recs)));
}

}  // namespace

TEST_CASE("synthetic corpus labels and determinism") {
  SynthSpec spec;
  spec.speakers = 4;
  spec.utts_per_speaker = 3;
  spec.seed = 5;
  auto a = SynthCorpus(spec), b = SynthCorpus(spec);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].matrix == b[i].matrix);
    CHECK(a[i].labels == b[i].labels);
    CHECK(a[i].matrix.rows() == 50);
    CHECK(a[i].matrix.cols() == 40);
    CHECK(!a[i].labels.condition.empty());
  }
  CHECK(a[0].labels.speaker == "spk000");
  CHECK(a[3].labels.speaker == "spk001");
  CHECK(a[0].labels.gender != a[3].labels.gender);
  SaveCorpus(a, TempPath("s1.utt"));
  SaveCorpus(b, TempPath("s2.utt"));
  std::ifstream f1(TempPath("s1.utt"), std::ios::binary), f2(TempPath("s2.utt"), std::ios::binary);
  std::string c1((std::istreambuf_iterator<char>(f1)), {}), c2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(c1 == c2);

  spec.first_speaker = 100;
  auto disjoint = SynthCorpus(spec);
  CHECK(disjoint[0].labels.speaker == "spk100");

  spec.speakers = 0;
  CHECK(CodeOf([&] { SynthCorpus(spec); }) == ErrorCode::kUsage);
  spec.speakers = 2;
  spec.noise_strength = -1;
  CHECK(CodeOf([&] { SynthCorpus(spec); }) == ErrorCode::kUsage);
}

TEST_CASE("zero signal gives chance EER, strong speaker signal separates") {
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthSpec silent;
    silent.speakers = 20;
    silent.utts_per_speaker = 20;
    silent.frames = 20;
    silent.dim = 10;
    silent.speaker_strength = silent.condition_strength = silent.noise_strength = silent.gender_strength = 0.0;
    silent.seed = seed;
    sum += SpeakerEer(silent);
  }
  CHECK(std::abs(sum / 5 - 0.5) < 0.05);

  SynthSpec loud;
  loud.speakers = 8;
  loud.speaker_strength = 10.0;
  loud.condition_strength = loud.noise_strength = loud.gender_strength = 0.0;
  loud.seed = 3;
  CHECK(SpeakerEer(loud) < 0.05);
}
