// include/uttemb/trials.hpp

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

#ifndef UTTEMB_TRIALS_HPP_
#define UTTEMB_TRIALS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "uttemb/embed.hpp"
#include "uttemb/features.hpp"

namespace uttemb {

struct Trial {
  std::string enroll_key;
  std::string eval_utt_id;
  bool is_target = false;
  bool operator==(const Trial &) const = default;
};

struct TrialList {
  std::vector<Trial> trials;

  std::size_t NumTargets() const;
  std::size_t NumNontargets() const { return trials.size() - NumTargets(); }
};

struct EnrollmentSet {
  LabelKind key_kind = LabelKind::kSpeaker;
  std::map<std::string, Eigen::VectorXd> vectors;
  std::map<std::string, std::size_t> counts;
};

struct Split {
  std::vector<std::string> enroll;
  std::vector<std::string> eval;
};

/// Utterance id with the speaker it belongs to.
struct LabeledUtt {
  std::string utt_id;
  std::string speaker;
};

/// Disjoint enroll/eval sets, balanced per speaker (counts differ by at most
/// one; odd speakers alternate which side gets the extra utterance).
Split MakeSplits(const std::vector<LabeledUtt> &corpus, std::uint64_t seed);

/// Per-key mean of the raw vectors.
EnrollmentSet AverageEnrollment(const std::vector<EmbeddingRecord> &records,
                                LabelKind key_kind);

/// Every eval record is paired with its own key as a target trial (when the
/// key is enrolled); nontargets are drawn without replacement from the
/// mismatched pairs so the target fraction is `target_proportion`.
TrialList MakeTrials(const EnrollmentSet &enroll,
                     const std::vector<EmbeddingRecord> &eval,
                     double target_proportion, std::uint64_t seed);

struct ScoredTrial {
  double score = 0.0;
  bool is_target = false;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t num_targets = 0;
  std::size_t num_nontargets = 0;
};

/// Equal error rate. Trials with score >= threshold are accepted; the EER is
/// read off the ROC by linear interpolation between the two vertices that
/// bracket FAR = FRR.
EerResult ComputeEer(const std::vector<ScoredTrial> &scores);

/// Trial list text: "<enroll_key> <eval_utt_id> <target|nontarget>".
void SaveTrials(const TrialList &trials, const std::string &path);
TrialList LoadTrials(const std::string &path);

struct ScoreLine {
  Trial trial;
  double score = 0.0;
};
/// Score file: trial line followed by the score.
void SaveScores(const std::vector<ScoreLine> &scores, const std::string &path);
std::vector<ScoreLine> LoadScores(const std::string &path);

/// Plain-text EER report with stable field order; `json` gives the
/// machine-readable variant.
std::string FormatEerReport(const EerResult &result, bool json = false);

}  // namespace uttemb

#endif  // UTTEMB_TRIALS_HPP_
