// tools/uttembed.cpp

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

// Command-line front end: one subcommand per pipeline stage. Every run writes
// <out>.manifest.json next to its primary output.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uttemb/backends.hpp"
#include "uttemb/embed.hpp"
#include "uttemb/error.hpp"
#include "uttemb/features.hpp"
#include "uttemb/ivector.hpp"
#include "uttemb/netio.hpp"
#include "uttemb/synth.hpp"
#include "uttemb/trials.hpp"

#ifndef UTTEMB_VERSION
#define UTTEMB_VERSION "unknown"
#endif

namespace {

using namespace uttemb;
using json = nlohmann::ordered_json;

constexpr std::size_t kDefaultPcaDim = 80;

class Manifest {
 public:
  explicit Manifest(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  void Input(const std::string &key, const std::string &path) { inputs_[key] = path; }
  template <typename T>
  void Param(const std::string &key, const T &value) { params_[key] = value; }
  void Output(const std::string &path) { outputs_.push_back(path); }
  void Result(const std::string &key, json value) { results_[key] = std::move(value); }

  void Write(const std::string &primary_output) const {
    json j;
    j["tool"] = "uttembed";
    j["version"] = UTTEMB_VERSION;
    j["subcommand"] = subcommand_;
    j["inputs"] = inputs_;
    j["parameters"] = params_;
    j["outputs"] = outputs_;
    if (!results_.empty()) j["results"] = results_;
    j["timestamp"] = Timestamp();
    std::ofstream out(primary_output + ".manifest.json", std::ios::trunc);
    if (!out) Fail(ErrorCode::kIo, "cannot write manifest for " + primary_output);
    out << j.dump(2) << '\n';
  }

 private:
  static std::string Timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
  }

  std::string subcommand_;
  json inputs_ = json::object();
  json params_ = json::object();
  json outputs_ = json::array();
  json results_ = json::object();
};

std::vector<std::string> ReadIdList(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::string> ids;
  std::string id;
  while (in >> id) ids.push_back(id);
  return ids;
}

void WriteIdList(const std::vector<std::string> &ids, const std::string &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  for (const auto &id : ids) out << id << '\n';
}

void WriteText(const std::string &text, const std::string &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

std::vector<EmbeddingRecord> SelectRecords(const EmbeddingArchive &archive,
                                           const std::vector<std::string> &ids) {
  std::map<std::string, const EmbeddingRecord *> index;
  for (const auto &r : archive.records) index[r.utt_id] = &r;
  std::vector<EmbeddingRecord> out;
  for (const auto &id : ids) {
    auto it = index.find(id);
    if (it == index.end()) Fail(ErrorCode::kMissingLabel, "utterance " + id + " not in archive");
    out.push_back(*it->second);
  }
  return out;
}

std::vector<LabeledVector> ToLabeled(const std::vector<EmbeddingRecord> &records,
                                     LabelKind kind, bool length_norm,
                                     const LDAModel *lda = nullptr) {
  std::vector<LabeledVector> out;
  for (const auto &r : records) {
    const std::string &label = r.labels.Get(kind);
    if (label.empty())
      Fail(ErrorCode::kMissingLabel, "record " + r.utt_id + " has no " +
                                         std::string(LabelKindName(kind)) + " label");
    Eigen::VectorXd v = length_norm ? LengthNormalize(r.vector) : r.vector;
    if (lda) v = ApplyLda(*lda, v);
    out.push_back({std::move(v), label});
  }
  return out;
}

std::vector<double> ParseDoubles(const std::string &text, std::size_t expected) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception &) {
      Fail(ErrorCode::kUsage, "bad number '" + item + "'");
    }
  }
  if (out.size() != expected)
    Fail(ErrorCode::kUsage, "expected " + std::to_string(expected) + " values in '" + text + "'");
  return out;
}

// ---------------------------------------------------------------------------

struct Options {
  std::string corpus, model, in, out, source = kWholeModelSource, arch;
  std::size_t pca_k = 0;
  double pca_var = 0.0;
  std::size_t lda_dim = 10;
  std::string backend = "cosine";
  double target_prop = 0.5;
  std::uint64_t seed = 0;
  std::size_t iters = 10;
  std::size_t components = 16;
  std::size_t rank = 20;
  std::size_t jobs = 1;
  std::string label = "speaker";
  std::string enroll_list, eval_list, trials, train, lda, plda, chain;
  bool no_cmvn = false, no_length_norm = false, json_report = false;
  std::size_t context = 5;
  double bias_scale = 0.1;
  // synth-corpus
  SynthSpec synth;
  std::string strengths = "1,1,1,1";
};

void RunSynthCorpus(Options &o) {
  auto s = ParseDoubles(o.strengths, 4);
  o.synth.speaker_strength = s[0];
  o.synth.condition_strength = s[1];
  o.synth.noise_strength = s[2];
  o.synth.gender_strength = s[3];
  o.synth.seed = o.seed;
  SaveCorpus(SynthCorpus(o.synth), o.out);
  Manifest m("synth-corpus");
  m.Param("speakers", o.synth.speakers);
  m.Param("first_speaker", o.synth.first_speaker);
  m.Param("utts_per_speaker", o.synth.utts_per_speaker);
  m.Param("conditions", o.synth.conditions);
  m.Param("noises", o.synth.noises);
  m.Param("genders", o.synth.genders);
  m.Param("frames", o.synth.frames);
  m.Param("dim", o.synth.dim);
  m.Param("strengths", s);
  m.Param("seed", o.seed);
  m.Output(o.out);
  m.Write(o.out);
}

void RunInitModel(const Options &o) {
  NetworkModel model = InitModelFromArch(o.arch, o.seed, o.bias_scale);
  SaveModel(model, o.out);
  Manifest m("init-model");
  m.Input("arch", o.arch);
  m.Param("seed", o.seed);
  m.Param("bias_scale", o.bias_scale);
  std::size_t dim = 0;
  for (const auto &span : WholeModelSpans(model)) dim += span.length;
  m.Result("whole_model_dim", dim);
  m.Output(o.out);
  m.Write(o.out);
}

void RunExtractEmbeddings(const Options &o) {
  auto corpus = LoadCorpus(o.corpus);
  EmbeddingArchive archive;
  Manifest m("extract-embeddings");
  m.Input("corpus", o.corpus);
  if (o.model.empty()) {
    if (o.source != kInputSource)
      Fail(ErrorCode::kUsage, "--model is required unless --source input");
    std::vector<EmbeddingRecord> records;
    for (const auto &utt : corpus)
      records.push_back(InputEmbedding(o.no_cmvn ? utt : Cmvn(utt), o.context, o.context));
    archive = MakeArchive(std::move(records));
    m.Param("context", o.context);
  } else {
    NetworkModel model = LoadModel(o.model);
    archive = ExtractEmbeddings(corpus, model, o.source, !o.no_cmvn, o.jobs);
    m.Input("model", o.model);
  }
  SaveEmbeddings(archive, o.out);
  m.Param("source", o.source);
  m.Param("cmvn", !o.no_cmvn);
  m.Result("dimension", archive.dim);
  m.Result("records", archive.records.size());
  m.Output(o.out);
  m.Write(o.out);
}

void RunTrainPca(const Options &o) {
  if (o.pca_k > 0 && o.pca_var > 0.0)
    Fail(ErrorCode::kUsage, "give at most one of --pca-k or --pca-var");
  EmbeddingArchive archive = LoadEmbeddings(o.in);
  PcaSelection sel = o.pca_var > 0.0 ? PcaSelection::VarianceThreshold(o.pca_var)
                                     : PcaSelection::FixedK(o.pca_k > 0 ? o.pca_k : kDefaultPcaDim);
  PCAModel pca = TrainPca(archive.records, sel, archive.spans, o.jobs);
  SavePca(pca, o.out);
  Manifest m("train-pca");
  m.Input("in", o.in);
  if (o.pca_var > 0.0) m.Param("pca_var", o.pca_var);
  else m.Param("pca_k", o.pca_k > 0 ? o.pca_k : kDefaultPcaDim);
  m.Result("components", pca.NumComponents());
  m.Output(o.out);
  m.Write(o.out);
}

void RunApplyPca(const Options &o) {
  EmbeddingArchive archive = LoadEmbeddings(o.in);
  PCAModel pca = LoadPca(o.model);
  std::vector<EmbeddingRecord> records;
  for (const auto &r : archive.records) records.push_back(ApplyPca(pca, r));
  SaveEmbeddings(MakeArchive(std::move(records)), o.out);
  Manifest m("apply-pca");
  m.Input("in", o.in);
  m.Input("model", o.model);
  m.Output(o.out);
  m.Write(o.out);
}

void RunAttributePca(const Options &o) {
  PCAModel pca = LoadPca(o.model);
  auto table = ComponentAttribution(pca);
  std::ostringstream report;
  report << std::fixed << std::setprecision(2);
  report << "components " << pca.NumComponents() << '\n';
  for (const auto &[name, pct] : table) report << name << ' ' << pct << "%\n";
  WriteText(report.str(), o.out);
  std::cout << report.str();
  Manifest m("attribute-pca");
  m.Input("model", o.model);
  m.Output(o.out);
  m.Write(o.out);
}

void RunTrainLda(const Options &o) {
  EmbeddingArchive archive = LoadEmbeddings(o.in);
  LDAModel lda = TrainLda(ToLabeled(archive.records, ParseLabelKind(o.label), !o.no_length_norm),
                          o.lda_dim);
  SaveLda(lda, o.out);
  Manifest m("train-lda");
  m.Input("in", o.in);
  m.Param("label", o.label);
  m.Param("lda_dim", o.lda_dim);
  m.Param("length_norm", !o.no_length_norm);
  m.Output(o.out);
  m.Write(o.out);
}

void RunTrainPlda(const Options &o) {
  EmbeddingArchive archive = LoadEmbeddings(o.in);
  std::optional<LDAModel> lda;
  if (!o.lda.empty()) lda = LoadLda(o.lda);
  PldaTrainOptions opts;
  opts.iters = o.iters;
  auto result = TrainPlda(
      ToLabeled(archive.records, ParseLabelKind(o.label), !o.no_length_norm, lda ? &*lda : nullptr),
      opts);
  SavePlda(result.model, o.out);
  Manifest m("train-plda");
  m.Input("in", o.in);
  if (lda) m.Input("lda", o.lda);
  m.Param("label", o.label);
  m.Param("iters", o.iters);
  m.Param("length_norm", !o.no_length_norm);
  m.Result("log_likelihood", result.log_likelihood);
  m.Output(o.out);
  m.Write(o.out);
}

void RunMakeSplits(const Options &o) {
  std::vector<LabeledUtt> utts;
  Manifest m("make-splits");
  if (!o.corpus.empty()) {
    for (const auto &u : LoadCorpus(o.corpus)) utts.push_back({u.utt_id, u.labels.speaker});
    m.Input("corpus", o.corpus);
  } else if (!o.in.empty()) {
    for (const auto &r : LoadEmbeddings(o.in).records) utts.push_back({r.utt_id, r.labels.speaker});
    m.Input("in", o.in);
  } else {
    Fail(ErrorCode::kUsage, "make-splits needs --corpus or --in");
  }
  Split split = MakeSplits(utts, o.seed);
  WriteIdList(split.enroll, o.out + ".enroll");
  WriteIdList(split.eval, o.out + ".eval");
  m.Param("seed", o.seed);
  m.Result("enroll", split.enroll.size());
  m.Result("eval", split.eval.size());
  m.Output(o.out + ".enroll");
  m.Output(o.out + ".eval");
  m.Write(o.out);
}

void RunMakeTrials(const Options &o) {
  EmbeddingArchive archive = LoadEmbeddings(o.in);
  LabelKind kind = ParseLabelKind(o.label);
  EnrollmentSet enroll = AverageEnrollment(SelectRecords(archive, ReadIdList(o.enroll_list)), kind);
  TrialList trials =
      MakeTrials(enroll, SelectRecords(archive, ReadIdList(o.eval_list)), o.target_prop, o.seed);
  SaveTrials(trials, o.out);
  Manifest m("make-trials");
  m.Input("in", o.in);
  m.Input("enroll_list", o.enroll_list);
  m.Input("eval_list", o.eval_list);
  m.Param("label", o.label);
  m.Param("target_prop", o.target_prop);
  m.Param("seed", o.seed);
  m.Result("targets", trials.NumTargets());
  m.Result("nontargets", trials.NumNontargets());
  m.Output(o.out);
  m.Write(o.out);
}

void RunScore(const Options &o) {
  EmbeddingArchive archive = LoadEmbeddings(o.in);
  LabelKind kind = ParseLabelKind(o.label);
  EnrollmentSet enroll = AverageEnrollment(SelectRecords(archive, ReadIdList(o.enroll_list)), kind);
  TrialList trials = LoadTrials(o.trials);
  std::map<std::string, const EmbeddingRecord *> index;
  for (const auto &r : archive.records) index[r.utt_id] = &r;

  Manifest m("score");
  m.Input("in", o.in);
  m.Input("enroll_list", o.enroll_list);
  m.Input("trials", o.trials);
  m.Param("backend", o.backend);
  m.Param("label", o.label);

  const bool needs_lda = o.backend == "lda" || o.backend == "lda_plda";
  const bool needs_plda = o.backend == "plda" || o.backend == "lda_plda";
  if (!needs_lda && !needs_plda && o.backend != "cosine")
    Fail(ErrorCode::kUsage, "unknown backend '" + o.backend + "'");
  std::optional<LDAModel> lda;
  std::optional<PLDAModel> plda;
  if (needs_lda) {
    if (o.lda.empty()) Fail(ErrorCode::kUsage, "backend " + o.backend + " needs --lda");
    lda = LoadLda(o.lda);
    m.Input("lda", o.lda);
  }
  if (needs_plda) {
    if (o.plda.empty()) Fail(ErrorCode::kUsage, "backend " + o.backend + " needs --plda");
    plda = LoadPlda(o.plda);
    m.Input("plda", o.plda);
  }
  Eigen::VectorXd global_mean;
  if (o.backend == "cosine") {
    const EmbeddingArchive train = o.train.empty() ? EmbeddingArchive{} : LoadEmbeddings(o.train);
    const auto &pool = o.train.empty() ? archive.records : train.records;
    global_mean = StackRecords(pool).colwise().mean().transpose();
    if (!o.train.empty()) m.Input("train", o.train);
  }
  auto transform = [&](const Eigen::VectorXd &v) -> Eigen::VectorXd {
    if (o.backend == "cosine") return v;
    Eigen::VectorXd x = LengthNormalize(v);
    return lda ? ApplyLda(*lda, x) : x;
  };
  std::map<std::string, Eigen::VectorXd> enroll_vecs;
  for (const auto &[key, v] : enroll.vectors) enroll_vecs[key] = transform(v);

  std::vector<ScoreLine> scores;
  for (const auto &t : trials.trials) {
    auto e = enroll_vecs.find(t.enroll_key);
    if (e == enroll_vecs.end()) Fail(ErrorCode::kMissingLabel, "key " + t.enroll_key + " not enrolled");
    auto it = index.find(t.eval_utt_id);
    if (it == index.end()) Fail(ErrorCode::kMissingLabel, "utterance " + t.eval_utt_id + " not in archive");
    Eigen::VectorXd x = transform(it->second->vector);
    double score;
    if (plda) {
      score = plda->Score(e->second, x);
    } else if (lda) {
      score = CosineScore(e->second, x, Eigen::VectorXd::Zero(x.size()));
    } else {
      score = CosineScore(e->second, x, global_mean);
    }
    scores.push_back({t, score});
  }
  SaveScores(scores, o.out);
  m.Output(o.out);
  m.Write(o.out);
}

void RunEvalEer(const Options &o) {
  std::vector<ScoredTrial> scored;
  for (const auto &s : LoadScores(o.in)) scored.push_back({s.score, s.trial.is_target});
  EerResult eer = ComputeEer(scored);
  std::string report = FormatEerReport(eer, o.json_report);
  WriteText(report, o.out);
  std::cout << report;
  Manifest m("eval-eer");
  m.Input("in", o.in);
  m.Result("eer", eer.eer);
  m.Output(o.out);
  m.Write(o.out);
}

std::vector<UtteranceFeatures> LoadFeatures(const Options &o) {
  auto corpus = LoadCorpus(o.corpus);
  if (!o.no_cmvn)
    for (auto &u : corpus) u = Cmvn(u);
  return corpus;
}

void RunTrainUbm(const Options &o) {
  UbmTrainOptions opts;
  opts.components = o.components;
  opts.iters = o.iters;
  opts.seed = o.seed;
  UbmTrainResult result = TrainUbm(PoolFrames(LoadFeatures(o)), opts);
  SaveGmm(result.gmm, o.out);
  Manifest m("train-ubm");
  m.Input("corpus", o.corpus);
  m.Param("components", o.components);
  m.Param("iters", o.iters);
  m.Param("seed", o.seed);
  m.Param("cmvn", !o.no_cmvn);
  m.Result("log_likelihood", result.log_likelihood);
  m.Result("floored_eigenvalues", result.floored_eigenvalues);
  m.Result("collapsed_components", result.collapsed_components);
  m.Output(o.out);
  m.Write(o.out);
}

void RunAccumulateStats(const Options &o) {
  GMM ubm = LoadGmm(o.model);
  SaveStats(AccumulateStats(ubm, LoadFeatures(o), o.jobs), o.out);
  Manifest m("accumulate-stats");
  m.Input("corpus", o.corpus);
  m.Input("model", o.model);
  m.Param("cmvn", !o.no_cmvn);
  m.Output(o.out);
  m.Write(o.out);
}

void RunTrainTv(const Options &o) {
  GMM ubm = LoadGmm(o.model);
  TvTrainOptions opts;
  opts.rank = o.rank;
  opts.iters = o.iters;
  opts.seed = o.seed;
  TvTrainResult result = TrainTv(ubm, LoadStats(o.in), opts);
  SaveTv(result.model, o.out);
  Manifest m("train-tv");
  m.Input("in", o.in);
  m.Input("model", o.model);
  m.Param("rank", o.rank);
  m.Param("iters", o.iters);
  m.Param("seed", o.seed);
  m.Result("objective", result.objective);
  m.Output(o.out);
  m.Write(o.out);
}

void RunExtractIvectors(const Options &o) {
  TVModel tv = LoadTv(o.model);
  SaveEmbeddings(ExtractIvectors(tv, LoadStats(o.in), o.jobs), o.out);
  Manifest m("extract-ivectors");
  m.Input("in", o.in);
  m.Input("model", o.model);
  m.Output(o.out);
  m.Write(o.out);
}

void RunExportAux(const Options &o) {
  EmbeddingArchive archive = LoadEmbeddings(o.in);
  struct Step {
    std::string kind;
    std::optional<PCAModel> pca;
    std::optional<LDAModel> lda;
  };
  std::vector<Step> steps;
  std::stringstream ss(o.chain);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto colon = item.find(':');
    std::string kind = item.substr(0, colon);
    std::string path = colon == std::string::npos ? "" : item.substr(colon + 1);
    if (kind == "pca" && !path.empty()) steps.push_back({kind, LoadPca(path), std::nullopt});
    else if (kind == "lda" && !path.empty()) steps.push_back({kind, std::nullopt, LoadLda(path)});
    else if (kind == "norm" && path.empty()) steps.push_back({kind, std::nullopt, std::nullopt});
    else Fail(ErrorCode::kUsage, "bad chain element '" + item + "'");
  }
  EmbeddingArchive out = archive;
  if (!steps.empty()) {
    std::vector<EmbeddingRecord> records;
    for (const auto &r : archive.records) {
      EmbeddingRecord x = r;
      for (const auto &step : steps) {
        if (step.pca) x.vector = ApplyPca(*step.pca, x.vector);
        else if (step.lda) x.vector = ApplyLda(*step.lda, x.vector);
        else x.vector = LengthNormalize(x.vector);
      }
      x.source = r.source + "+aux";
      records.push_back(std::move(x));
    }
    out = MakeArchive(std::move(records));
  }
  SaveEmbeddings(out, o.out);
  Manifest m("export-aux");
  m.Input("in", o.in);
  m.Param("chain", o.chain);
  m.Result("dimension", out.dim);
  m.Output(o.out);
  m.Write(o.out);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Utterance embeddings from acoustic models, with PCA/LDA/PLDA "
               "backends, EER scoring and an i-vector baseline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", UTTEMB_VERSION);
  Options o;

  auto add = [&](const std::string &name, const std::string &desc) {
    auto *sub = app.add_subcommand(name, desc);
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    return sub;
  };
  auto out_opt = [&](CLI::App *sub) { sub->add_option("--out", o.out, "output path")->required(); };
  auto seed_opt = [&](CLI::App *sub) { sub->add_option("--seed", o.seed, "random seed")->required(); };

  auto *synth = add("synth-corpus", "generate a labeled synthetic corpus");
  synth->add_option("--speakers", o.synth.speakers);
  synth->add_option("--first-speaker", o.synth.first_speaker);
  synth->add_option("--utts", o.synth.utts_per_speaker, "utterances per speaker");
  synth->add_option("--conditions", o.synth.conditions);
  synth->add_option("--noises", o.synth.noises);
  synth->add_option("--genders", o.synth.genders);
  synth->add_option("--frames", o.synth.frames, "frames per utterance");
  synth->add_option("--dim", o.synth.dim, "feature dimension");
  synth->add_option("--strengths", o.strengths, "speaker,condition,noise,gender");
  out_opt(synth);
  seed_opt(synth);

  auto *init = add("init-model", "random weights for an architecture config");
  init->add_option("--arch", o.arch)->required()->check(CLI::ExistingFile);
  init->add_option("--bias-scale", o.bias_scale);
  out_opt(init);
  seed_opt(init);

  auto *extract = add("extract-embeddings", "pool model activations per utterance");
  extract->add_option("--corpus", o.corpus)->required();
  extract->add_option("--model", o.model);
  extract->add_option("--source", o.source, "whole-model, a tap name, input or output");
  extract->add_option("--context", o.context, "splice context when no model is given");
  extract->add_flag("--no-cmvn", o.no_cmvn);
  out_opt(extract);

  auto *train_pca = add("train-pca", "fit PCA on an embedding archive");
  train_pca->add_option("--in", o.in)->required();
  train_pca->add_option("--pca-k", o.pca_k, "components to keep (default 80)");
  train_pca->add_option("--pca-var", o.pca_var);
  out_opt(train_pca);

  auto *apply_pca = add("apply-pca", "project an archive with a PCA model");
  apply_pca->add_option("--in", o.in)->required();
  apply_pca->add_option("--model", o.model)->required();
  out_opt(apply_pca);

  auto *attr = add("attribute-pca", "per-source share of PCA components");
  attr->add_option("--model", o.model)->required();
  out_opt(attr);

  auto *train_lda = add("train-lda", "fit LDA on labeled embeddings");
  train_lda->add_option("--in", o.in)->required();
  train_lda->add_option("--lda-dim", o.lda_dim);
  train_lda->add_option("--label", o.label);
  train_lda->add_flag("--no-length-norm", o.no_length_norm);
  out_opt(train_lda);

  auto *train_plda = add("train-plda", "fit two-covariance PLDA");
  train_plda->add_option("--in", o.in)->required();
  train_plda->add_option("--lda", o.lda, "LDA applied before PLDA");
  train_plda->add_option("--iters", o.iters);
  train_plda->add_option("--label", o.label);
  train_plda->add_flag("--no-length-norm", o.no_length_norm);
  out_opt(train_plda);

  auto *splits = add("make-splits", "balanced enroll/eval split");
  splits->add_option("--corpus", o.corpus);
  splits->add_option("--in", o.in);
  out_opt(splits);
  seed_opt(splits);

  auto *make_trials = add("make-trials", "build a trial list");
  make_trials->add_option("--in", o.in)->required();
  make_trials->add_option("--enroll-list", o.enroll_list)->required();
  make_trials->add_option("--eval-list", o.eval_list)->required();
  make_trials->add_option("--label", o.label);
  make_trials->add_option("--target-prop", o.target_prop);
  out_opt(make_trials);
  seed_opt(make_trials);

  auto *score = add("score", "score a trial list");
  score->add_option("--in", o.in)->required();
  score->add_option("--enroll-list", o.enroll_list)->required();
  score->add_option("--trials", o.trials)->required();
  score->add_option("--label", o.label);
  score->add_option("--backend", o.backend)->check(CLI::IsMember({"cosine", "lda", "lda_plda", "plda"}));
  score->add_option("--train", o.train, "archive for the cosine global mean");
  score->add_option("--lda", o.lda);
  score->add_option("--plda", o.plda);
  out_opt(score);

  auto *eer = add("eval-eer", "equal error rate of a score file");
  eer->add_option("--in", o.in)->required();
  eer->add_flag("--json", o.json_report);
  out_opt(eer);

  auto *ubm = add("train-ubm", "full-covariance UBM by EM");
  ubm->add_option("--corpus", o.corpus)->required();
  ubm->add_option("--components", o.components);
  ubm->add_option("--iters", o.iters);
  ubm->add_flag("--no-cmvn", o.no_cmvn);
  out_opt(ubm);
  seed_opt(ubm);

  auto *acc = add("accumulate-stats", "Baum-Welch statistics per utterance");
  acc->add_option("--corpus", o.corpus)->required();
  acc->add_option("--model", o.model)->required();
  acc->add_flag("--no-cmvn", o.no_cmvn);
  out_opt(acc);

  auto *tv = add("train-tv", "total-variability matrix by EM");
  tv->add_option("--in", o.in)->required();
  tv->add_option("--model", o.model)->required();
  tv->add_option("--rank", o.rank);
  tv->add_option("--iters", o.iters);
  out_opt(tv);
  seed_opt(tv);

  auto *ivec = add("extract-ivectors", "posterior-mean i-vectors");
  ivec->add_option("--in", o.in)->required();
  ivec->add_option("--model", o.model)->required();
  out_opt(ivec);

  auto *aux = add("export-aux", "auxiliary features through a transform chain");
  aux->add_option("--in", o.in)->required();
  aux->add_option("--chain", o.chain, "comma list of pca:FILE, lda:FILE, norm");
  out_opt(aux);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error code=usage status=1 message=\"" << e.what() << "\"\n";
    return 1;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "synth-corpus") RunSynthCorpus(o);
    else if (name == "init-model") RunInitModel(o);
    else if (name == "extract-embeddings") RunExtractEmbeddings(o);
    else if (name == "train-pca") RunTrainPca(o);
    else if (name == "apply-pca") RunApplyPca(o);
    else if (name == "attribute-pca") RunAttributePca(o);
    else if (name == "train-lda") RunTrainLda(o);
    else if (name == "train-plda") RunTrainPlda(o);
    else if (name == "make-splits") RunMakeSplits(o);
    else if (name == "make-trials") RunMakeTrials(o);
    else if (name == "score") RunScore(o);
    else if (name == "eval-eer") RunEvalEer(o);
    else if (name == "train-ubm") RunTrainUbm(o);
    else if (name == "accumulate-stats") RunAccumulateStats(o);
    else if (name == "train-tv") RunTrainTv(o);
    else if (name == "extract-ivectors") RunExtractIvectors(o);
    else if (name == "export-aux") RunExportAux(o);
  } catch (const Error &e) {
    std::cerr << "error code=" << ErrorCodeName(e.code()) << " status=" << ExitStatus(e.code())
              << " message=\"" << e.what() << "\"\n";
    return ExitStatus(e.code());
  } catch (const std::exception &e) {
    std::cerr << "error code=internal status=3 message=\"" << e.what() << "\"\n";
    return 3;
  }
  return 0;
}
