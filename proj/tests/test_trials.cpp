// tests/test_trials.cpp

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

#include <random>
#include <set>

#include <doctest.h>

#include "oracles.hpp"
#include "test_util.hpp"
#include "uttemb/backends.hpp"
#include "uttemb/synth.hpp"
#include "uttemb/trials.hpp"

using namespace uttemb;
using testutil::CodeOf;
using testutil::TempPath;

namespace {

std::vector<LabeledUtt> Speakers(std::size_t speakers, std::size_t utts) {
  std::vector<LabeledUtt> out;
  for (std::size_t s = 0; s < speakers; ++s)
    for (std::size_t u = 0; u < utts; ++u)
      out.push_back({"s" + std::to_string(s) + "_" + std::to_string(u), "s" + std::to_string(s)});
  return out;
}

EmbeddingRecord Rec(const std::string &id, const std::string &speaker, Eigen::VectorXd v = Eigen::VectorXd::Ones(2)) {
  EmbeddingRecord r;
  r.utt_id = id;
  r.source = "x";
  r.vector = std::move(v);
  r.labels.speaker = speaker;
  return r;
}

EnrollmentSet Keys(std::size_t n) {
  std::vector<EmbeddingRecord> recs;
  for (std::size_t k = 0; k < n; ++k) recs.push_back(Rec("e" + std::to_string(k), "k" + std::to_string(k)));
  return AverageEnrollment(recs, LabelKind::kSpeaker);
}

std::vector<EmbeddingRecord> EvalSet(std::size_t keys, std::size_t per_key) {
  std::vector<EmbeddingRecord> out;
  for (std::size_t k = 0; k < keys; ++k)
    for (std::size_t i = 0; i < per_key; ++i)
      out.push_back(Rec("v" + std::to_string(k) + "_" + std::to_string(i), "k" + std::to_string(k)));
  return out;
}

std::vector<ScoredTrial> Scored(const std::vector<double> &t, const std::vector<double> &n) {
  std::vector<ScoredTrial> out;
  for (double s : t) out.push_back({s, true});
  for (double s : n) out.push_back({s, false});
  return out;
}

void CheckCountsBalanced(const std::vector<LabeledUtt> &corpus, const Split &split) {
  std::map<std::string, std::string> spk;
  for (const auto &u : corpus) spk[u.utt_id] = u.speaker;
  std::map<std::string, long> balance;
  std::set<std::string> seen;
  for (const auto &id : split.enroll) {
    ++balance[spk.at(id)];
    CHECK(seen.insert(id).second);
  }
  for (const auto &id : split.eval) {
    --balance[spk.at(id)];
    CHECK(seen.insert(id).second);
  }
  CHECK(seen.size() == corpus.size());
  for (const auto &[s, d] : balance) CHECK(std::abs(d) <= 1);
}

}  // namespace

TEST_CASE("splits are balanced, disjoint and seeded") {
  auto two = Speakers(2, 4);
  auto s = MakeSplits(two, 99);
  CHECK(s.enroll.size() == 4);
  CHECK(s.eval.size() == 4);
  CheckCountsBalanced(two, s);

  auto eight = Speakers(8, 10);
  auto a = MakeSplits(eight, 5), b = MakeSplits(eight, 5), c = MakeSplits(eight, 6);
  CHECK(a.enroll == b.enroll);
  CHECK(a.eval == b.eval);
  CHECK(a.enroll != c.enroll);
  CHECK(a.enroll.size() == 40);
  CHECK(a.eval.size() == 40);
  CheckCountsBalanced(eight, a);

  auto odd = Speakers(3, 5);
  auto o = MakeSplits(odd, 1);
  CheckCountsBalanced(odd, o);
  CHECK(o.enroll.size() + o.eval.size() == 15);

  auto lone = two;
  lone.push_back({"x", "solo"});
  CHECK(CodeOf([&] { MakeSplits(lone, 1); }) == ErrorCode::kInsufficientData);
}

TEST_CASE("enrollment averaging") {
  std::mt19937_64 rng(1);
  Eigen::VectorXd v = oracle::RandomMatrix(rng, 3, 1).col(0);
  auto single = AverageEnrollment({Rec("a", "p", v)}, LabelKind::kSpeaker);
  CHECK(single.vectors.at("p") == v);
  auto twice = AverageEnrollment({Rec("a", "p", v), Rec("b", "p", v)}, LabelKind::kSpeaker);
  CHECK((twice.vectors.at("p") - v).cwiseAbs().maxCoeff() < 1e-15);

  std::vector<EmbeddingRecord> recs;
  std::map<std::string, oracle::Vec> sums;
  std::map<std::string, double> counts;
  std::uniform_int_distribution<int> key(0, 4);
  for (int i = 0; i < 60; ++i) {
    std::string k = "k" + std::to_string(key(rng));
    Eigen::VectorXd x = oracle::RandomMatrix(rng, 4, 1).col(0);
    recs.push_back(Rec("r" + std::to_string(i), k, x));
    auto &s = sums[k];
    s.resize(4, 0.0);
    for (int j = 0; j < 4; ++j) s[j] += x(j);
    counts[k] += 1;
  }
  auto set = AverageEnrollment(recs, LabelKind::kSpeaker);
  CHECK(set.vectors.size() == sums.size());
  for (auto &[k, s] : sums) {
    for (double &x : s) x /= counts[k];
    CHECK(oracle::MaxAbsDiff(s, set.vectors.at(k)) < 1e-12);
  }
  CHECK(CodeOf([&] { AverageEnrollment(recs, LabelKind::kCondition); }) == ErrorCode::kMissingLabel);
}

TEST_CASE("trial list examples") {
  auto all = MakeTrials(Keys(1), EvalSet(1, 6), 1.0, 3);
  CHECK(all.trials.size() == 6);
  CHECK(all.NumTargets() == 6);

  auto big = MakeTrials(Keys(10), EvalSet(10, 231), 0.5, 4);
  CHECK(big.NumTargets() == 2310);
  CHECK(big.trials.size() == 4620);

  auto small = MakeTrials(Keys(4), EvalSet(4, 5), 0.5, 5);
  std::size_t matching = 0, mismatching = 0;
  for (const auto &e : EvalSet(4, 5))
    for (const auto &[k, v] : Keys(4).vectors) (e.labels.speaker == k ? matching : mismatching)++;
  CHECK(small.NumTargets() == matching);
  CHECK(small.NumNontargets() == matching);
  CHECK(mismatching == 60);
  std::set<std::pair<std::string, std::string>> pairs;
  std::set<std::string> covered;
  for (const auto &t : small.trials) {
    CHECK(pairs.insert({t.enroll_key, t.eval_utt_id}).second);
    CHECK(t.is_target == (t.eval_utt_id.substr(1, 1) == t.enroll_key.substr(1)));
    covered.insert(t.eval_utt_id);
  }
  CHECK(covered.size() == 20);
}

TEST_CASE("trial generation covers unenrolled utterances and rejects infeasible requests") {
  auto eval = EvalSet(3, 4);
  eval.push_back(Rec("stranger", "nobody"));
  auto list = MakeTrials(Keys(3), eval, 0.5, 1);
  std::set<std::string> covered;
  for (const auto &t : list.trials) covered.insert(t.eval_utt_id);
  CHECK(covered.count("stranger") == 1);
  CHECK(list.NumTargets() == 12);
  CHECK(list.NumNontargets() == 12);

  CHECK(CodeOf([] { MakeTrials(Keys(2), EvalSet(2, 3), 0.1, 1); }) == ErrorCode::kInfeasible);
  CHECK(CodeOf([] { MakeTrials(Keys(1), EvalSet(1, 3), 0.5, 1); }) == ErrorCode::kInfeasible);
  CHECK(CodeOf([] { MakeTrials(Keys(1), EvalSet(1, 3), 0.0, 1); }) == ErrorCode::kInfeasible);
  CHECK(CodeOf([] { MakeTrials(Keys(2), EvalSet(2, 3), 1.5, 1); }) == ErrorCode::kOutOfRange);
}

TEST_CASE("trial sampling is seeded") {
  auto a = MakeTrials(Keys(8), EvalSet(8, 20), 0.5, 11);
  auto b = MakeTrials(Keys(8), EvalSet(8, 20), 0.5, 11);
  auto c = MakeTrials(Keys(8), EvalSet(8, 20), 0.5, 12);
  CHECK(a.trials == b.trials);
  CHECK(a.trials != c.trials);
}

TEST_CASE("eer examples") {
  CHECK(ComputeEer(Scored({2, 3}, {0, 1})).eer == 0.0);
  CHECK(ComputeEer(Scored({1, 2, 3}, {1, 2, 3})).eer == doctest::Approx(0.5).epsilon(1e-15));
  std::vector<double> t = {0.9, 0.4, 0.6}, n = {0.5, 0.1, 0.7};
  auto r = ComputeEer(Scored(t, n));
  CHECK(std::abs(r.eer - oracle::BruteForceEer(t, n)) < 1e-12);
  CHECK(r.num_targets == 3);
  CHECK(r.num_nontargets == 3);
  CHECK(CodeOf([] { ComputeEer(Scored({1, 2}, {})); }) == ErrorCode::kInsufficientData);
}

TEST_CASE("eer matches brute force and rank invariances") {
  std::mt19937_64 rng(21);
  for (int set = 0; set < 200; ++set) {
    std::uniform_int_distribution<int> size(1, 30);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> coarse(0, 6);
    std::vector<double> t, n;
    int nt = size(rng), nn = size(rng);
    bool ties = set % 3 == 0;
    for (int i = 0; i < nt; ++i) t.push_back(ties ? coarse(rng) + 1.0 : normal(rng) + 1.0);
    for (int i = 0; i < nn; ++i) n.push_back(ties ? coarse(rng) : normal(rng));
    auto r = ComputeEer(Scored(t, n));
    CHECK(std::abs(r.eer - oracle::BruteForceEer(t, n)) < 1e-9);
    CHECK(r.eer >= 0.0);
    CHECK(r.eer <= 1.0);

    std::vector<double> tt, nn2, tneg, nneg;
    for (double s : t) {
      tt.push_back(std::exp(s) * 3 + 1);
      tneg.push_back(-s);
    }
    for (double s : n) {
      nn2.push_back(std::exp(s) * 3 + 1);
      nneg.push_back(-s);
    }
    CHECK(ComputeEer(Scored(tt, nn2)).eer == r.eer);
    CHECK(std::abs(ComputeEer(Scored(nneg, tneg)).eer - r.eer) < 1e-12);
  }
}

TEST_CASE("trial, score and report files") {
  auto list = MakeTrials(Keys(3), EvalSet(3, 2), 0.5, 2);
  SaveTrials(list, TempPath("t.trials"));
  CHECK(LoadTrials(TempPath("t.trials")).trials == list.trials);

  std::vector<ScoreLine> lines;
  for (std::size_t i = 0; i < list.trials.size(); ++i) lines.push_back({list.trials[i], 0.1 * i - 1.0 / 3});
  SaveScores(lines, TempPath("t.scores"));
  auto back = LoadScores(TempPath("t.scores"));
  REQUIRE(back.size() == lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    CHECK(back[i].trial == lines[i].trial);
    CHECK(back[i].score == lines[i].score);
  }

  auto report = FormatEerReport(ComputeEer(Scored({2, 3}, {0, 1})));
  CHECK(report.find("EER 0.00%") == 0);
  auto json = FormatEerReport(ComputeEer(Scored({2, 3}, {0, 1})), true);
  CHECK(json.find("\"eer\"") != std::string::npos);
}

TEST_CASE("speaker EER falls as the planted signal grows") {
  std::vector<double> mean_eer;
  for (double strength : {0.0, 0.25, 0.5, 1.0, 2.0}) {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SynthSpec spec;
      spec.speakers = 8;
      spec.utts_per_speaker = 10;
      spec.frames = 20;
      spec.dim = 10;
      spec.speaker_strength = strength;
      spec.condition_strength = spec.noise_strength = spec.gender_strength = 0.0;
      spec.seed = seed;
      auto corpus = SynthCorpus(spec);
      std::vector<EmbeddingRecord> recs;
      std::vector<LabeledUtt> utts;
      for (const auto &u : corpus) {
        recs.push_back(InputEmbedding(u, 0, 0));
        utts.push_back({u.utt_id, u.labels.speaker});
      }
      auto split = MakeSplits(utts, seed);
      std::map<std::string, EmbeddingRecord> by_id;
      for (const auto &r : recs) by_id[r.utt_id] = r;
      std::vector<EmbeddingRecord> enroll, eval;
      for (const auto &id : split.enroll) enroll.push_back(by_id[id]);
      for (const auto &id : split.eval) eval.push_back(by_id[id]);
      auto set = AverageEnrollment(enroll, LabelKind::kSpeaker);
      auto trials = MakeTrials(set, eval, 0.5, seed);
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(10);
      for (const auto &r : recs) mean += r.vector / recs.size();
      std::vector<ScoredTrial> scored;
      for (const auto &t : trials.trials)
        scored.push_back({CosineScore(set.vectors.at(t.enroll_key), by_id[t.eval_utt_id].vector, mean),
                          t.is_target});
      sum += ComputeEer(scored).eer;
    }
    mean_eer.push_back(sum / 10);
  }
  for (std::size_t i = 1; i < mean_eer.size(); ++i) CHECK(mean_eer[i] <= mean_eer[i - 1]);
  CHECK(std::abs(mean_eer.front() - 0.5) < 0.1);
  CHECK(mean_eer.back() < 0.05);
}
