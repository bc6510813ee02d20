// src/trials.cpp

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

#include "uttemb/trials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "uttemb/error.hpp"

namespace uttemb {

std::size_t TrialList::NumTargets() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const Trial &t) { return t.is_target; }));
}

Split MakeSplits(const std::vector<LabeledUtt> &corpus, std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto &u : corpus) {
    if (u.speaker.empty()) Fail(ErrorCode::kMissingLabel, "utterance " + u.utt_id + " has no speaker");
    by_speaker[u.speaker].push_back(u.utt_id);
  }
  std::mt19937_64 rng(seed);
  Split split;
  bool extra_to_enroll = true;
  for (auto &[speaker, utts] : by_speaker) {
    if (utts.size() < 2)
      Fail(ErrorCode::kInsufficientData,
           "speaker " + speaker + " has a single utterance and cannot be split");
    std::shuffle(utts.begin(), utts.end(), rng);
    std::size_t n_enroll = utts.size() / 2;
    if (utts.size() % 2 == 1) {
      if (extra_to_enroll) ++n_enroll;
      extra_to_enroll = !extra_to_enroll;
    }
    split.enroll.insert(split.enroll.end(), utts.begin(), utts.begin() + n_enroll);
    split.eval.insert(split.eval.end(), utts.begin() + n_enroll, utts.end());
  }
  return split;
}

EnrollmentSet AverageEnrollment(const std::vector<EmbeddingRecord> &records,
                                LabelKind key_kind) {
  EnrollmentSet set;
  set.key_kind = key_kind;
  for (const auto &r : records) {
    const std::string &key = r.labels.Get(key_kind);
    if (key.empty())
      Fail(ErrorCode::kMissingLabel, "record " + r.utt_id + " has no " +
                                         std::string(LabelKindName(key_kind)) + " label");
    auto it = set.vectors.find(key);
    if (it == set.vectors.end()) {
      set.vectors.emplace(key, r.vector);
      set.counts[key] = 1;
    } else {
      if (it->second.size() != r.vector.size())
        Fail(ErrorCode::kDimensionMismatch, "enrollment vectors differ in dimension");
      it->second += r.vector;
      ++set.counts[key];
    }
  }
  for (auto &[key, v] : set.vectors) v /= static_cast<double>(set.counts[key]);
  return set;
}

TrialList MakeTrials(const EnrollmentSet &enroll,
                     const std::vector<EmbeddingRecord> &eval,
                     double target_proportion, std::uint64_t seed) {
  if (enroll.vectors.empty()) Fail(ErrorCode::kInsufficientData, "no enrollment keys");
  if (eval.empty()) Fail(ErrorCode::kInsufficientData, "no evaluation records");
  if (!(target_proportion >= 0.0 && target_proportion <= 1.0))
    Fail(ErrorCode::kOutOfRange, "target proportion must lie in [0, 1]");

  std::vector<std::string> keys;
  for (const auto &[key, v] : enroll.vectors) keys.push_back(key);

  std::vector<Trial> targets;
  std::vector<bool> covered(eval.size(), false);
  // Mismatched pairs as (eval index, key index), in enumeration order.
  std::vector<std::pair<std::size_t, std::size_t>> mismatched;
  for (std::size_t e = 0; e < eval.size(); ++e) {
    const std::string &key = eval[e].labels.Get(enroll.key_kind);
    if (key.empty())
      Fail(ErrorCode::kMissingLabel, "eval record " + eval[e].utt_id + " has no " +
                                         std::string(LabelKindName(enroll.key_kind)) +
                                         " label");
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (keys[k] == key) {
        if (target_proportion > 0.0) {
          targets.push_back({key, eval[e].utt_id, true});
          covered[e] = true;
        }
      } else {
        mismatched.emplace_back(e, k);
      }
    }
  }

  std::size_t num_nontargets;
  if (target_proportion == 0.0) {
    num_nontargets = mismatched.size();
  } else if (target_proportion == 1.0) {
    num_nontargets = 0;
  } else {
    num_nontargets = static_cast<std::size_t>(std::llround(
        static_cast<double>(targets.size()) * (1.0 - target_proportion) / target_proportion));
  }
  if (target_proportion > 0.0 && targets.empty())
    Fail(ErrorCode::kInfeasible, "no target pairs available");
  if (num_nontargets > mismatched.size())
    Fail(ErrorCode::kInfeasible,
         "need " + std::to_string(num_nontargets) + " nontarget trials but only " +
             std::to_string(mismatched.size()) + " mismatched pairs exist");

  std::mt19937_64 rng(seed);
  std::vector<bool> chosen(mismatched.size(), false);
  std::size_t picked = 0;
  // Utterances without a target trial get one nontarget first.
  for (std::size_t e = 0; e < eval.size(); ++e) {
    if (covered[e]) continue;
    if (picked == num_nontargets)
      Fail(ErrorCode::kInfeasible,
           "target proportion leaves eval utterance " + eval[e].utt_id + " without a trial");
    auto first = std::lower_bound(mismatched.begin(), mismatched.end(),
                                  std::make_pair(e, std::size_t{0}));
    auto last = std::lower_bound(mismatched.begin(), mismatched.end(),
                                 std::make_pair(e + 1, std::size_t{0}));
    auto span = static_cast<std::size_t>(last - first);
    if (span == 0)
      Fail(ErrorCode::kInfeasible, "eval utterance " + eval[e].utt_id + " has no nontarget pair");
    std::uniform_int_distribution<std::size_t> pick(0, span - 1);
    chosen[static_cast<std::size_t>(first - mismatched.begin()) + pick(rng)] = true;
    ++picked;
  }
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < mismatched.size(); ++i)
    if (!chosen[i]) pool.push_back(i);
  // Partial Fisher-Yates: uniform sample without replacement.
  for (std::size_t i = 0; picked < num_nontargets; ++i, ++picked) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    chosen[pool[i]] = true;
  }

  TrialList list;
  list.trials = std::move(targets);
  for (std::size_t i = 0; i < mismatched.size(); ++i)
    if (chosen[i])
      list.trials.push_back(
          {keys[mismatched[i].second], eval[mismatched[i].first].utt_id, false});
  return list;
}

EerResult ComputeEer(const std::vector<ScoredTrial> &scores) {
  EerResult result;
  std::vector<double> tgt, non;
  for (const auto &s : scores) {
    if (!std::isfinite(s.score)) Fail(ErrorCode::kNonFinite, "non-finite score");
    (s.is_target ? tgt : non).push_back(s.score);
  }
  result.num_targets = tgt.size();
  result.num_nontargets = non.size();
  if (tgt.empty() || non.empty())
    Fail(ErrorCode::kInsufficientData, "EER needs both target and nontarget trials");
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());
  std::vector<double> thresholds;
  thresholds.reserve(tgt.size() + non.size() + 1);
  std::merge(tgt.begin(), tgt.end(), non.begin(), non.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double nt = static_cast<double>(tgt.size()), nn = static_cast<double>(non.size());
  std::size_t ti = 0, ni = 0;  // scores strictly below the current threshold
  double prev_far = 1.0, prev_frr = 0.0, prev_thr = thresholds.front();
  for (double thr : thresholds) {
    while (ti < tgt.size() && tgt[ti] < thr) ++ti;
    while (ni < non.size() && non[ni] < thr) ++ni;
    const double frr = static_cast<double>(ti) / nt;
    const double far = (nn - static_cast<double>(ni)) / nn;
    if (frr >= far) {
      const double d_prev = prev_frr - prev_far, d_cur = frr - far;
      if (d_cur == 0.0 || d_prev >= 0.0) {
        result.eer = frr;
        result.threshold = thr;
      } else {
        const double alpha = -d_prev / (d_cur - d_prev);
        result.eer = prev_far + alpha * (far - prev_far);
        result.threshold = std::isfinite(thr) ? prev_thr + alpha * (thr - prev_thr) : prev_thr;
      }
      return result;
    }
    prev_far = far;
    prev_frr = frr;
    prev_thr = thr;
  }
  return result;  // unreachable: FRR reaches 1 at +inf
}

namespace {

Trial ParseTrial(std::istringstream &ss, const std::string &line, const std::string &path) {
  Trial t;
  std::string kind;
  if (!(ss >> t.enroll_key >> t.eval_utt_id >> kind))
    Fail(ErrorCode::kMalformedArchive, path + ": bad trial line '" + line + "'");
  if (kind == "target") t.is_target = true;
  else if (kind != "nontarget")
    Fail(ErrorCode::kMalformedArchive, path + ": bad trial label '" + kind + "'");
  return t;
}

std::ifstream OpenText(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  return in;
}

std::ofstream CreateText(const std::string &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  return out;
}

}  // namespace

void SaveTrials(const TrialList &trials, const std::string &path) {
  std::ofstream out = CreateText(path);
  for (const auto &t : trials.trials)
    out << t.enroll_key << ' ' << t.eval_utt_id << ' '
        << (t.is_target ? "target" : "nontarget") << '\n';
  if (!out) Fail(ErrorCode::kIo, "write failed on " + path);
}

TrialList LoadTrials(const std::string &path) {
  std::ifstream in = OpenText(path);
  TrialList list;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    list.trials.push_back(ParseTrial(ss, line, path));
  }
  return list;
}

void SaveScores(const std::vector<ScoreLine> &scores, const std::string &path) {
  std::ofstream out = CreateText(path);
  out << std::setprecision(17);
  for (const auto &s : scores)
    out << s.trial.enroll_key << ' ' << s.trial.eval_utt_id << ' '
        << (s.trial.is_target ? "target" : "nontarget") << ' ' << s.score << '\n';
  if (!out) Fail(ErrorCode::kIo, "write failed on " + path);
}

std::vector<ScoreLine> LoadScores(const std::string &path) {
  std::ifstream in = OpenText(path);
  std::vector<ScoreLine> scores;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    ScoreLine s;
    s.trial = ParseTrial(ss, line, path);
    if (!(ss >> s.score))
      Fail(ErrorCode::kMalformedArchive, path + ": missing score in '" + line + "'");
    scores.push_back(std::move(s));
  }
  return scores;
}

std::string FormatEerReport(const EerResult &result, bool json) {
  std::ostringstream out;
  out << std::fixed;
  if (json) {
    out << std::setprecision(10) << "{\"eer\": " << result.eer
        << ", \"threshold\": " << result.threshold
        << ", \"targets\": " << result.num_targets
        << ", \"nontargets\": " << result.num_nontargets
        << ", \"trials\": " << result.num_targets + result.num_nontargets << "}\n";
    return out.str();
  }
  out << "EER " << std::setprecision(2) << 100.0 * result.eer << "%\n"
      << "threshold " << std::setprecision(6) << result.threshold << '\n'
      << "targets " << result.num_targets << '\n'
      << "nontargets " << result.num_nontargets << '\n'
      << "trials " << result.num_targets + result.num_nontargets << '\n';
  return out.str();
}

}  // namespace uttemb
