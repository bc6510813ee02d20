// tests/acceptance.cpp

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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include <json.hpp>

#include "experiment.hpp"
#include "oracles.hpp"
#include "uttemb/backends.hpp"
#include "uttemb/embed.hpp"
#include "uttemb/ivector.hpp"
#include "uttemb/netio.hpp"
#include "uttemb/synth.hpp"
#include "uttemb/trials.hpp"

using namespace uttemb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void Require(bool ok, const std::string &why) {
    if (!ok) {
      if (!pass) detail << "; ";
      else detail.str("");
      pass = false;
      detail << why;
    }
  }
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string Fmt(double v, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

NetworkModel RandomModel(std::mt19937_64 &rng, std::uint64_t seed) {
  std::uniform_int_distribution<int> coin(0, 1), width(1, 12), depth(1, 3), ctx(0, 2), freq(2, 8);
  NetworkModel m;
  m.name = "random";
  const std::size_t c = 2 * static_cast<std::size_t>(ctx(rng)) + 1, f = static_cast<std::size_t>(freq(rng));
  m.input_shape = TensorShape::Map(1, c, f);
  const int layers = depth(rng);
  if (coin(rng)) {
    std::size_t prev = c * f;
    for (int i = 0; i < layers; ++i) {
      std::size_t w = static_cast<std::size_t>(width(rng));
      m.tap_points.push_back(m.layers.size());
      m.layers.push_back({"", DenseLayer{Eigen::MatrixXd::Zero(w, prev), Eigen::VectorXd::Zero(w)}});
      m.layers.push_back({"", ReLULayer{}});
      prev = w;
    }
  } else {
    std::size_t prev = 1;
    for (int i = 0; i < layers; ++i) {
      std::size_t ch = static_cast<std::size_t>(width(rng)) % 4 + 1;
      Conv2DLayer conv;
      conv.in_channels = prev;
      conv.out_channels = ch;
      conv.kernel.assign(prev * ch * 9, 0.0);
      conv.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ch));
      m.tap_points.push_back(m.layers.size());
      m.layers.push_back({"", conv});
      m.layers.push_back({"", ReLULayer{}});
      prev = ch;
    }
  }
  InitRandomWeights(m, seed);
  return m;
}

// ---------------------------------------------------------------------------

Outcome DenseReference() {
  Outcome o;
  auto model = InitModelFromArch(std::string(UTTEMB_DATA_DIR) + "/dense_6x2048.arch", 1);
  std::mt19937_64 rng(1);
  auto utt = oracle::RandomUtterance(rng, 100, 40);
  double best = 1e9;
  EmbeddingRecord rec;
  for (int i = 0; i < 3; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    rec = WholeModelEmbedding(utt, model);
    best = std::min(best, Seconds(t0));
  }
  o.detail << "dim=" << rec.vector.size() << " time=" << Fmt(best) << "s (best of 3)";
  o.Require(rec.vector.size() == 12288, "dimension " + std::to_string(rec.vector.size()) + " != 12288");
  o.Require(best < 1.0, "runtime " + Fmt(best) + "s >= 1s");
  return o;
}

Outcome PoolingOracle() {
  Outcome o;
  std::mt19937_64 rng(2);
  double worst = 0.0;
  std::size_t mismatched_spans = 0;
  std::uniform_int_distribution<int> frames(1, 9);
  for (int pair = 0; pair < 1000; ++pair) {
    NetworkModel m = RandomModel(rng, 1000 + pair);
    auto utt = oracle::RandomUtterance(rng, static_cast<std::size_t>(frames(rng)), m.input_shape.freq);
    auto whole = WholeModelEmbedding(utt, m);
    auto spans = WholeModelSpans(m);
    auto [left, right] = ModelContext(m);
    auto fwd = Forward(m, Splice(utt, left, right));
    for (std::size_t k = 0; k < spans.size(); ++k) {
      Eigen::VectorXd span = whole.vector.segment(spans[k].start, spans[k].length);
      if (span != LayerEmbedding(utt, m, spans[k].name).vector) ++mismatched_spans;
      // naive mean over frames, and over the map time axis for conv taps
      const TensorShape &shape = fwd.tap_shapes[k];
      const Eigen::MatrixXd &tap = fwd.taps[k];
      const std::size_t nt = shape.flat ? 1 : shape.time, nf = shape.flat ? 1 : shape.freq;
      for (std::size_t c = 0; c < shape.channels; ++c)
        for (std::size_t f = 0; f < nf; ++f) {
          double sum = 0.0;
          for (Eigen::Index t = 0; t < tap.cols(); ++t)
            for (std::size_t s = 0; s < nt; ++s) sum += tap(static_cast<Eigen::Index>((c * nt + s) * nf + f), t);
          double mean = sum / static_cast<double>(tap.cols() * static_cast<Eigen::Index>(nt));
          worst = std::max(worst, std::abs(mean - span(static_cast<Eigen::Index>(c * nf + f))));
        }
    }
  }
  o.detail << "1000 pairs, span mismatches=" << mismatched_spans << " max |pooled - naive mean|=" << worst;
  o.Require(mismatched_spans == 0, std::to_string(mismatched_spans) + " spans differ from layer embeddings");
  o.Require(worst <= 1e-12, "naive mean deviation " + Fmt(worst) + " > 1e-12");
  return o;
}

Outcome PcaCriterion() {
  Outcome o;
  std::mt19937_64 rng(3);
  Eigen::MatrixXd data = oracle::RandomMatrix(rng, 200, 50) * oracle::RandomMatrix(rng, 50, 50);
  auto pca = TrainPca(data, PcaSelection::FixedK(50));
  std::vector<oracle::Vec> rows;
  for (Eigen::Index i = 0; i < 200; ++i) rows.push_back(oracle::FromEigen(Eigen::VectorXd(data.row(i).transpose())));
  auto [values, vectors] = oracle::JacobiEigen(oracle::SampleCovariance(rows));
  double value_err = 0.0, vector_err = 0.0;
  for (int k = 0; k < 50; ++k) {
    value_err = std::max(value_err, std::abs(values[k] - pca.eigenvalues(k)));
    double dot = 0.0;
    for (int j = 0; j < 50; ++j) dot += vectors[k][j] * pca.components(k, j);
    vector_err = std::max(vector_err, 1.0 - std::abs(dot));
  }
  o.Require(value_err < 1e-8, "eigenvalue error " + Fmt(value_err));
  o.Require(vector_err < 1e-8, "eigenvector error " + Fmt(vector_err));

  // Data with an exactly known sample spectrum.
  std::size_t wrong_k = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 60, d = 12;
    Eigen::MatrixXd z = oracle::RandomMatrix(rng, n, d);
    z.rowwise() -= z.colwise().mean();
    Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(z).householderQ() * Eigen::MatrixXd::Identity(n, d);
    Eigen::MatrixXd rot = Eigen::HouseholderQR<Eigen::MatrixXd>(oracle::RandomMatrix(rng, d, d)).householderQ();
    Eigen::VectorXd lambda(d);
    const double decay = 0.2 + 0.05 * trial;
    for (Eigen::Index i = 0; i < d; ++i) lambda(i) = std::pow(decay, static_cast<double>(i));
    Eigen::MatrixXd x = std::sqrt(static_cast<double>(n - 1)) * q * lambda.cwiseSqrt().asDiagonal() * rot.transpose();
    double total = lambda.sum(), cum = 0.0;
    std::size_t analytic = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      cum += lambda(i);
      if (cum / total > 0.999) {
        analytic = static_cast<std::size_t>(i + 1);
        break;
      }
    }
    if (TrainPca(x, PcaSelection::VarianceThreshold(0.999)).NumComponents() != analytic) ++wrong_k;
  }
  o.Require(wrong_k == 0, std::to_string(wrong_k) + "/20 spectra gave a non-minimal K");

  Eigen::MatrixXd attr_data = oracle::RandomMatrix(rng, 200, 50);
  attr_data.middleCols(10, 15) *= 4.0;
  auto attr = TrainPca(attr_data, PcaSelection::FixedK(30),
                       {{"a", 0, 10}, {"b", 10, 15}, {"c", 25, 20}, {"d", 45, 5}});
  double sum = 0.0;
  for (const auto &[name, pct] : ComponentAttribution(attr)) sum += pct;
  o.Require(std::abs(sum - 100.0) <= 1e-9, "attribution sums to " + Fmt(sum, 17));
  if (o.pass)
    o.detail << "max eigenvalue err=" << value_err << " max 1-|cos|=" << vector_err
             << " K minimal on 20/20 spectra, attribution sum=" << Fmt(sum, 15);
  return o;
}

Outcome EerCriterion() {
  Outcome o;
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int set = 0; set < 500; ++set) {
    std::uniform_int_distribution<int> size(1, 60), coarse(0, 9);
    std::normal_distribution<double> normal;
    std::vector<ScoredTrial> scored;
    oracle::Vec t, n;
    const int nt = size(rng), nn = size(rng);
    const bool ties = set % 4 == 0;
    for (int i = 0; i < nt; ++i) t.push_back(ties ? coarse(rng) + 0.5 : normal(rng) + 0.7);
    for (int i = 0; i < nn; ++i) n.push_back(ties ? coarse(rng) : normal(rng));
    for (double s : t) scored.push_back({s, true});
    for (double s : n) scored.push_back({s, false});
    worst = std::max(worst, std::abs(ComputeEer(scored).eer - oracle::BruteForceEer(t, n)));
  }
  double perfect = ComputeEer({{2, true}, {3, true}, {0, false}, {1, false}}).eer;
  std::vector<ScoredTrial> same;
  std::normal_distribution<double> normal;
  for (int i = 0; i < 101; ++i) {
    double s = normal(rng);
    same.push_back({s, true});
    same.push_back({s, false});
  }
  double identical = ComputeEer(same).eer;
  o.detail << "500 sets max |eer - brute force|=" << worst << " perfect=" << perfect << " identical=" << identical;
  o.Require(worst <= 1e-9, "oracle deviation " + Fmt(worst));
  o.Require(perfect == 0.0, "perfect separation gave " + Fmt(perfect));
  o.Require(std::abs(identical - 0.5) < 1e-12, "identical distributions gave " + Fmt(identical));
  return o;
}

std::vector<LabeledVector> SampleTwoCov(std::mt19937_64 &rng, const Eigen::MatrixXd &b, const Eigen::MatrixXd &w,
                                        std::size_t classes, std::size_t per_class) {
  Eigen::MatrixXd lb = Eigen::LLT<Eigen::MatrixXd>(b).matrixL(), lw = Eigen::LLT<Eigen::MatrixXd>(w).matrixL();
  std::vector<LabeledVector> out;
  for (std::size_t c = 0; c < classes; ++c) {
    Eigen::VectorXd y = lb * oracle::RandomMatrix(rng, b.rows(), 1).col(0);
    for (std::size_t i = 0; i < per_class; ++i)
      out.push_back({y + lw * oracle::RandomMatrix(rng, w.rows(), 1).col(0), "c" + std::to_string(c)});
  }
  return out;
}

Outcome PldaCriterion() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::size_t drops = 0;
  for (int set = 0; set < 50; ++set) {
    const int d = 2 + set % 5;
    Eigen::MatrixXd c = oracle::RandomMatrix(rng, d, d), e = oracle::RandomMatrix(rng, d, d);
    auto data = SampleTwoCov(rng, c * c.transpose() + 0.05 * Eigen::MatrixXd::Identity(d, d),
                             e * e.transpose() + 0.05 * Eigen::MatrixXd::Identity(d, d), 5 + set % 20,
                             2 + set % 7);
    PldaTrainOptions opts;
    opts.iters = 10;
    auto fit = TrainPlda(data, opts);
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i)
      if (fit.log_likelihood[i] < fit.log_likelihood[i - 1] - 1e-8 * std::abs(fit.log_likelihood[i - 1])) ++drops;
  }
  Eigen::Matrix2d b = Eigen::Vector2d(4, 0.25).asDiagonal(), w = Eigen::Matrix2d::Identity();
  auto fit = TrainPlda(SampleTwoCov(rng, b, w, 200, 10));
  double eb = (fit.model.between_cov() - b).norm() / b.norm();
  double ew = (fit.model.within_cov() - w).norm() / w.norm();
  double asym = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd x = 2 * oracle::RandomMatrix(rng, 2, 1).col(0), y = 2 * oracle::RandomMatrix(rng, 2, 1).col(0);
    asym = std::max(asym, std::abs(fit.model.Score(x, y) - fit.model.Score(y, x)));
  }
  o.detail << "50 datasets LL drops=" << drops << " between err=" << Fmt(eb) << " within err=" << Fmt(ew)
           << " max |s(a,b)-s(b,a)|=" << asym;
  o.Require(drops == 0, std::to_string(drops) + " log-likelihood decreases");
  o.Require(eb < 0.15 && ew < 0.15, "recovery error between " + Fmt(eb) + " within " + Fmt(ew));
  o.Require(asym <= 1e-10, "asymmetry " + Fmt(asym));
  return o;
}

Outcome LdaCriterion() {
  Outcome o;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 2 + trial % 4;
    std::vector<LabeledVector> data;
    // Noise draws are mirrored in the off-axis coordinates, so axis 0 is the
    // exact sample optimum as well as the population one.
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd v(d);
        for (int j = 0; j < d; ++j) v(j) = (1.0 + 0.3 * j) * normal(rng);
        v(0) += 3.0 * c;
        Eigen::VectorXd m = -v;
        m(0) = v(0);
        data.push_back({v, c ? "b" : "a"});
        data.push_back({m, c ? "b" : "a"});
      }
    auto lda = TrainLda(data, 1);
    Eigen::VectorXd w = lda.transform.row(0).transpose().normalized();
    worst = std::max(worst, std::acos(std::min(1.0, std::abs(w(0)))));
  }
  bool rejected = false;
  std::vector<LabeledVector> three;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 5; ++i) three.push_back({oracle::RandomMatrix(rng, 4, 1).col(0), std::to_string(c)});
  try {
    TrainLda(three, 3);
  } catch (const Error &e) {
    rejected = e.code() == ErrorCode::kOutOfRange;
  }
  o.detail << "max angle to true axis=" << worst << " rad over 10 sets, R=3 with C=3 rejected=" << rejected;
  o.Require(worst < 1e-3, "angle " + Fmt(worst) + " rad");
  o.Require(rejected, "R > C-1 was accepted");
  return o;
}

Outcome IvectorCriterion() {
  Outcome o;
  std::mt19937_64 rng(7);
  // scalar closed form
  double scalar_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::uniform_real_distribution<double> u(0.1, 3.0);
    double t = u(rng) - 1.5, sigma = u(rng), n = 10 * u(rng), f = 5 * (u(rng) - 1.5);
    TVModel tv{GMM(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1), {Eigen::MatrixXd::Constant(1, 1, sigma)}),
               Eigen::MatrixXd::Constant(1, 1, t)};
    BaumWelchStats s{"s", {}, Eigen::VectorXd::Constant(1, n), Eigen::MatrixXd::Constant(1, 1, f)};
    scalar_err = std::max(scalar_err, std::abs(ExtractIvector(tv, s)(0) - oracle::ScalarIvector(t, sigma, n, f)));
  }
  o.Require(scalar_err <= 1e-12, "scalar i-vector error " + Fmt(scalar_err));

  std::size_t ubm_drops = 0;
  double worst_gap = 1.0, slowest = 0.0;
  std::ostringstream gaps;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto t0 = std::chrono::steady_clock::now();
    SynthSpec spec;
    spec.speakers = 50;
    spec.utts_per_speaker = 10;
    spec.frames = 50;
    spec.dim = 8;
    spec.condition_strength = spec.noise_strength = spec.gender_strength = 0.0;
    spec.seed = 100 + seed;
    auto corpus = SynthCorpus(spec);
    UbmTrainOptions uopts;
    uopts.components = 16;
    uopts.iters = 10;
    uopts.seed = seed;
    auto ubm = TrainUbm(PoolFrames(corpus), uopts);
    for (std::size_t i = 1; i < ubm.log_likelihood.size(); ++i)
      if (ubm.log_likelihood[i] < ubm.log_likelihood[i - 1] - 1e-8 * std::abs(ubm.log_likelihood[i - 1])) ++ubm_drops;
    auto stats = AccumulateStats(ubm.gmm, corpus);
    TvTrainOptions topts;
    topts.rank = 20;
    topts.iters = 10;
    topts.seed = seed;
    auto tv = TrainTv(ubm.gmm, stats, topts);
    auto ivecs = ExtractIvectors(tv.model, stats).records;
    slowest = std::max(slowest, Seconds(t0));
    auto cosine = experiment::Cosine(experiment::MeanOf(ivecs));
    double real = experiment::TrialEer(ivecs, LabelKind::kSpeaker, seed, cosine);
    auto shuffled = ivecs;
    std::vector<std::string> labels;
    for (const auto &r : shuffled) labels.push_back(r.labels.speaker);
    std::mt19937_64 shuffle_rng(seed);
    std::shuffle(labels.begin(), labels.end(), shuffle_rng);
    for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].labels.speaker = labels[i];
    double control = experiment::TrialEer(shuffled, LabelKind::kSpeaker, seed, cosine);
    worst_gap = std::min(worst_gap, control - real);
    gaps << (seed ? "," : "") << Fmt(100 * real, 3) << "/" << Fmt(100 * control, 3);
  }
  o.Require(ubm_drops == 0, std::to_string(ubm_drops) + " UBM log-likelihood decreases");
  o.Require(worst_gap >= 0.20, "smallest EER gap " + Fmt(100 * worst_gap) + " points");
  o.Require(slowest < 60.0, "pipeline took " + Fmt(slowest) + "s");
  if (o.pass)
    o.detail << "scalar err=" << scalar_err << " UBM drops=0 EER% planted/shuffled=" << gaps.str()
             << " min gap=" << Fmt(100 * worst_gap) << " points, slowest run " << Fmt(slowest) << "s";
  return o;
}

Outcome LdaContrast() {
  Outcome o;
  auto model = InitModelFromArch(std::string(UTTEMB_DATA_DIR) + "/toy_dense.arch", 11);
  std::ostringstream trace;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthSpec train;
    train.speakers = 120;
    train.utts_per_speaker = 8;
    train.frames = 30;
    train.first_speaker = 1000;
    train.seed = 200 + seed;
    SynthSpec eval = train;
    eval.speakers = 16;
    eval.utts_per_speaker = 10;
    eval.first_speaker = 0;
    auto train_emb = ExtractEmbeddings(SynthCorpus(train), model, kWholeModelSource, false).records;
    auto eval_emb = ExtractEmbeddings(SynthCorpus(eval), model, kWholeModelSource, false).records;
    auto pca = TrainPca(train_emb, PcaSelection::FixedK(60));
    std::vector<EmbeddingRecord> train_p, eval_p;
    for (const auto &r : train_emb) train_p.push_back(ApplyPca(pca, r));
    for (const auto &r : eval_emb) eval_p.push_back(ApplyPca(pca, r));
    std::vector<LabeledVector> labeled;
    for (const auto &r : train_p) labeled.push_back({LengthNormalize(r.vector), r.labels.speaker});
    auto lda = TrainLda(labeled, 40);
    auto eval_l = eval_p;
    for (auto &r : eval_l) r.vector = ApplyLda(lda, LengthNormalize(r.vector));

    auto raw_cos = experiment::Cosine(experiment::MeanOf(train_p));
    auto lda_cos = experiment::Cosine(Eigen::VectorXd::Zero(40));
    double raw_spk = experiment::TrialEer(eval_p, LabelKind::kSpeaker, seed, raw_cos);
    double lda_spk = experiment::TrialEer(eval_l, LabelKind::kSpeaker, seed, lda_cos);
    double raw_cond = experiment::TrialEer(eval_p, LabelKind::kCondition, seed, raw_cos);
    double lda_cond = experiment::TrialEer(eval_l, LabelKind::kCondition, seed, lda_cos);
    trace << (seed ? " " : "") << "s" << seed << ":spk " << Fmt(100 * raw_spk) << "->" << Fmt(100 * lda_spk)
          << " cond " << Fmt(100 * raw_cond) << "->" << Fmt(100 * lda_cond);
    o.Require(lda_spk < raw_spk, "seed " + std::to_string(seed) + " speaker EER did not drop");
    o.Require(lda_cond > raw_cond, "seed " + std::to_string(seed) + " condition EER did not rise");
  }
  std::string prefix = o.pass ? "" : o.detail.str() + " | ";
  o.detail.str("");
  o.detail << prefix << "EER% raw->LDA " << trace.str();
  return o;
}

Outcome TrialProtocol() {
  Outcome o;
  SynthSpec spec;
  spec.speakers = 8;
  spec.utts_per_speaker = 10;
  spec.frames = 10;
  spec.seed = 8;
  std::vector<EmbeddingRecord> recs;
  std::vector<LabeledUtt> utts;
  for (const auto &u : SynthCorpus(spec)) {
    recs.push_back(InputEmbedding(u, 0, 0));
    utts.push_back({u.utt_id, u.labels.speaker});
  }
  Split split = MakeSplits(utts, 8);
  std::map<std::string, EmbeddingRecord> by_id;
  for (const auto &r : recs) by_id[r.utt_id] = r;
  std::vector<EmbeddingRecord> enroll, eval;
  for (const auto &id : split.enroll) enroll.push_back(by_id[id]);
  for (const auto &id : split.eval) eval.push_back(by_id[id]);
  auto trials = MakeTrials(AverageEnrollment(enroll, LabelKind::kSpeaker), eval, 0.5, 8);
  o.detail << "eval=" << eval.size() << " targets=" << trials.NumTargets() << " total=" << trials.trials.size();
  o.Require(trials.NumTargets() == eval.size(), "targets != eval size");
  o.Require(trials.trials.size() == 2 * trials.NumTargets(), "total != 2 x targets");
  return o;
}

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

Outcome Determinism() {
  Outcome o;
  const fs::path base = fs::temp_directory_path() / ("uttemb_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  for (const char *run : {"a", "b"}) {
    std::string cmd = std::string(UTTEMB_SCRIPTS_DIR) + "/pipeline.sh " + UTTEMB_CLI + " " +
                      (base / run).string() + " 5 >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      o.Require(false, std::string("pipeline run ") + run + " failed");
      return o;
    }
  }
  std::size_t files = 0, differing = 0;
  std::string first_diff;
  for (const auto &entry : fs::directory_iterator(base / "a")) {
    const std::string name = entry.path().filename().string();
    ++files;
    std::string a = Slurp(entry.path()), b = Slurp(base / "b" / name);
    bool same;
    if (name.size() > 14 && name.substr(name.size() - 14) == ".manifest.json") {
      auto ja = nlohmann::json::parse(a), jb = nlohmann::json::parse(b);
      ja.erase("timestamp");
      jb.erase("timestamp");
      same = ja == jb;
    } else {
      same = a == b;
    }
    if (!same && differing++ == 0) first_diff = name;
  }
  fs::remove_all(base);
  o.detail << files << " artifacts compared, " << differing << " differ";
  o.Require(files > 0, "no artifacts produced");
  o.Require(differing == 0, std::to_string(differing) + " artifacts differ, first " + first_diff);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char *name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"dense reference whole-model dimension and runtime", DenseReference},
      {"pooling oracle", PoolingOracle},
      {"PCA eigenpairs, variance selection, attribution", PcaCriterion},
      {"EER against brute force", EerCriterion},
      {"PLDA EM monotonicity, recovery, symmetry", PldaCriterion},
      {"LDA discriminant axis and rank limit", LdaCriterion},
      {"i-vector pipeline", IvectorCriterion},
      {"LDA speaker/condition contrast", LdaContrast},
      {"trial protocol counts", TrialProtocol},
      {"end-to-end determinism", Determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail.str(std::string("exception: ") + e.what());
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.str().c_str(), Seconds(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
