// src/ivector.cpp

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

#include "uttemb/ivector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "uttemb/binary_io.hpp"
#include "uttemb/error.hpp"
#include "uttemb/parallel.hpp"

namespace uttemb {

namespace {

// Raises eigenvalues below `floor` to it; returns how many were raised.
std::size_t FloorCovariance(Eigen::MatrixXd &cov, double floor) {
  cov = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) Fail(ErrorCode::kNumeric, "covariance eigensolver failed");
  Eigen::VectorXd values = eig.eigenvalues();
  std::size_t floored = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values(i) < floor) {
      values(i) = floor;
      ++floored;
    }
  if (floored > 0) {
    cov = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose());
  }
  return floored;
}

double LogSumExp(const Eigen::VectorXd &v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

void WriteGmmBlock(BinaryWriter &out, const GMM &gmm) {
  out.WriteMagic("GMM1");
  out.WriteU64(gmm.NumComponents());
  out.WriteU64(gmm.Dim());
  out.WriteVector(gmm.weights());
  out.WriteMatrix(gmm.means());
  for (const auto &c : gmm.covariances()) out.WriteMatrix(c);
}

GMM ReadGmmBlock(BinaryReader &in) {
  in.ExpectMagic("GMM1");
  std::uint64_t m = in.ReadU64(), f = in.ReadU64();
  Eigen::VectorXd weights = in.ReadVector(m);
  Eigen::MatrixXd means = in.ReadMatrix(m, f);
  std::vector<Eigen::MatrixXd> covs;
  for (std::uint64_t i = 0; i < m; ++i) covs.push_back(in.ReadMatrix(f, f));
  return GMM(std::move(weights), std::move(means), std::move(covs));
}

}  // namespace

GMM::GMM(Eigen::VectorXd weights, Eigen::MatrixXd means,
         std::vector<Eigen::MatrixXd> covariances)
    : weights_(std::move(weights)),
      means_(std::move(means)),
      covariances_(std::move(covariances)) {
  const Eigen::Index m = weights_.size(), f = means_.cols();
  if (m < 1 || means_.rows() != m || static_cast<Eigen::Index>(covariances_.size()) != m)
    Fail(ErrorCode::kDimensionMismatch, "GMM parameter counts disagree");
  if ((weights_.array() < 0.0).any() || std::abs(weights_.sum() - 1.0) > 1e-10)
    Fail(ErrorCode::kNumeric, "GMM weights must be nonnegative and sum to 1");
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  log_norm_.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto &cov = covariances_[static_cast<std::size_t>(i)];
    if (cov.rows() != f || cov.cols() != f)
      Fail(ErrorCode::kDimensionMismatch, "GMM covariance has the wrong size");
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      Fail(ErrorCode::kNumeric, "GMM covariance " + std::to_string(i) + " is not positive definite");
    Eigen::MatrixXd l = llt.matrixL();
    chol_.push_back(l);
    precisions_.push_back(llt.solve(Eigen::MatrixXd::Identity(f, f)));
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    log_norm_(i) = std::log(weights_(i)) - 0.5 * (static_cast<double>(f) * log_2pi + log_det);
  }
}

Eigen::VectorXd GMM::ComponentLogLikelihoods(const Eigen::VectorXd &x) const {
  if (x.size() != means_.cols())
    Fail(ErrorCode::kDimensionMismatch, "frame dimension does not match the GMM");
  Eigen::VectorXd out(weights_.size());
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    Eigen::VectorXd z = x - means_.row(i).transpose();
    chol_[static_cast<std::size_t>(i)].triangularView<Eigen::Lower>().solveInPlace(z);
    out(i) = log_norm_(i) - 0.5 * z.squaredNorm();
  }
  return out;
}

Eigen::VectorXd GMM::Posteriors(const Eigen::VectorXd &x, double *log_like) const {
  Eigen::VectorXd ll = ComponentLogLikelihoods(x);
  const double total = LogSumExp(ll);
  if (log_like) *log_like = total;
  Eigen::VectorXd post = (ll.array() - total).exp();
  return post / post.sum();
}

Eigen::MatrixXd PoolFrames(const std::vector<UtteranceFeatures> &corpus) {
  Eigen::Index rows = 0, dim = corpus.empty() ? 0 : corpus.front().Dim();
  for (const auto &u : corpus) {
    if (u.Dim() != dim) Fail(ErrorCode::kDimensionMismatch, "utterances differ in dimension");
    rows += u.NumFrames();
  }
  Eigen::MatrixXd frames(rows, dim);
  Eigen::Index at = 0;
  for (const auto &u : corpus) {
    frames.middleRows(at, u.NumFrames()) = u.matrix;
    at += u.NumFrames();
  }
  return frames;
}

UbmTrainResult TrainUbm(const Eigen::MatrixXd &frames, const UbmTrainOptions &options) {
  const Eigen::Index n = frames.rows(), f = frames.cols();
  const auto m = static_cast<Eigen::Index>(options.components);
  if (m < 1) Fail(ErrorCode::kOutOfRange, "UBM needs at least one component");
  if (f < 1 || static_cast<std::size_t>(n) < options.min_frames_factor * options.components *
                                                 static_cast<std::size_t>(f))
    Fail(ErrorCode::kInsufficientData,
         "UBM training needs at least " +
             std::to_string(options.min_frames_factor * options.components *
                            static_cast<std::size_t>(f)) +
             " frames, got " + std::to_string(n));
  if (!frames.allFinite()) Fail(ErrorCode::kNonFinite, "non-finite training frame");

  const Eigen::RowVectorXd global_mean = frames.colwise().mean();
  const Eigen::MatrixXd centered = frames.rowwise() - global_mean;
  const Eigen::MatrixXd global_cov = centered.transpose() * centered / static_cast<double>(n);
  double avg_var = global_cov.trace() / static_cast<double>(f);
  const double floor = options.floor_fraction * (avg_var > 0.0 ? avg_var : 1.0);

  UbmTrainResult result;
  std::mt19937_64 rng(options.seed);

  // Seeded distinct frame picks, then hard k-means refinement.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  Eigen::MatrixXd means(m, f);
  for (Eigen::Index i = 0; i < m; ++i) means.row(i) = frames.row(order[static_cast<std::size_t>(i)]);
  std::vector<Eigen::Index> assign(static_cast<std::size_t>(n), 0);
  auto assign_frames = [&] {
    for (Eigen::Index t = 0; t < n; ++t) {
      Eigen::Index best;
      (means.rowwise() - frames.row(t)).rowwise().squaredNorm().minCoeff(&best);
      assign[static_cast<std::size_t>(t)] = best;
    }
  };
  for (std::size_t it = 0; it < options.kmeans_iters; ++it) {
    assign_frames();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, f);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(m);
    for (Eigen::Index t = 0; t < n; ++t) {
      sums.row(assign[static_cast<std::size_t>(t)]) += frames.row(t);
      counts(assign[static_cast<std::size_t>(t)]) += 1.0;
    }
    for (Eigen::Index i = 0; i < m; ++i)
      if (counts(i) > 0) means.row(i) = sums.row(i) / counts(i);
  }
  assign_frames();

  // Initial parameters from the hard assignment.
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index t = 0; t < n; ++t) resp(t, assign[static_cast<std::size_t>(t)]) = 1.0;

  Eigen::MatrixXd floored_global = global_cov;
  FloorCovariance(floored_global, floor);

  auto m_step = [&](const Eigen::MatrixXd &r) {
    Eigen::VectorXd counts = r.colwise().sum().transpose();
    Eigen::VectorXd weights(m);
    Eigen::MatrixXd new_means(m, f);
    std::vector<Eigen::MatrixXd> covs(static_cast<std::size_t>(m));
    result.floored_eigenvalues = 0;
    const double min_count = 1e-8 * static_cast<double>(n);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (counts(i) <= min_count) {
        // Collapsed: restart on a random frame with the global covariance.
        ++result.collapsed_components;
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        new_means.row(i) = frames.row(pick(rng));
        covs[static_cast<std::size_t>(i)] = floored_global;
        weights(i) = 1.0 / static_cast<double>(n);
        continue;
      }
      new_means.row(i) = r.col(i).transpose() * frames / counts(i);
      Eigen::MatrixXd c = frames.rowwise() - new_means.row(i);
      Eigen::MatrixXd cov = (c.array().colwise() * r.col(i).array()).matrix().transpose() * c /
                            counts(i);
      result.floored_eigenvalues += FloorCovariance(cov, floor);
      covs[static_cast<std::size_t>(i)] = std::move(cov);
      weights(i) = counts(i) / static_cast<double>(n);
    }
    weights /= weights.sum();
    return GMM(std::move(weights), std::move(new_means), std::move(covs));
  };

  auto e_step = [&](const GMM &gmm, Eigen::MatrixXd &r) {
    double total = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      double ll;
      r.row(t) = gmm.Posteriors(frames.row(t).transpose(), &ll).transpose();
      total += ll;
    }
    return total;
  };

  GMM gmm = m_step(resp);
  for (std::size_t it = 0; it < options.iters; ++it) {
    result.log_likelihood.push_back(e_step(gmm, resp));
    gmm = m_step(resp);
  }
  result.log_likelihood.push_back(e_step(gmm, resp));
  result.gmm = std::move(gmm);
  return result;
}

BaumWelchStats AccumulateStats(const GMM &ubm, const UtteranceFeatures &utt) {
  if (static_cast<std::size_t>(utt.Dim()) != ubm.Dim())
    Fail(ErrorCode::kDimensionMismatch,
         "utterance " + utt.utt_id + " has dimension " + std::to_string(utt.Dim()) +
             ", UBM expects " + std::to_string(ubm.Dim()));
  const auto m = static_cast<Eigen::Index>(ubm.NumComponents());
  BaumWelchStats stats;
  stats.utt_id = utt.utt_id;
  stats.labels = utt.labels;
  stats.zeroth = Eigen::VectorXd::Zero(m);
  stats.first = Eigen::MatrixXd::Zero(m, utt.Dim());
  for (Eigen::Index t = 0; t < utt.NumFrames(); ++t) {
    Eigen::VectorXd x = utt.matrix.row(t).transpose();
    Eigen::VectorXd post = ubm.Posteriors(x);
    stats.zeroth += post;
    for (Eigen::Index i = 0; i < m; ++i)
      stats.first.row(i) += post(i) * (x.transpose() - ubm.means().row(i));
  }
  return stats;
}

std::vector<BaumWelchStats> AccumulateStats(const GMM &ubm,
                                            const std::vector<UtteranceFeatures> &corpus,
                                            std::size_t jobs) {
  std::vector<BaumWelchStats> out(corpus.size());
  ParallelFor(corpus.size(), jobs, [&](std::size_t i) { out[i] = AccumulateStats(ubm, corpus[i]); });
  return out;
}

namespace {

void CheckStats(const GMM &ubm, const BaumWelchStats &s) {
  if (static_cast<std::size_t>(s.zeroth.size()) != ubm.NumComponents() ||
      static_cast<std::size_t>(s.first.rows()) != ubm.NumComponents() ||
      static_cast<std::size_t>(s.first.cols()) != ubm.Dim())
    Fail(ErrorCode::kDimensionMismatch, "stats for " + s.utt_id + " do not match the UBM");
}

// Per-component T_m^T P_m (R x F) and T_m^T P_m T_m (R x R).
struct TvProjections {
  std::vector<Eigen::MatrixXd> tp;
  std::vector<Eigen::MatrixXd> tpt;
};

TvProjections Project(const GMM &ubm, const Eigen::MatrixXd &t) {
  const auto f = static_cast<Eigen::Index>(ubm.Dim());
  TvProjections p;
  for (std::size_t i = 0; i < ubm.NumComponents(); ++i) {
    auto block = t.middleRows(static_cast<Eigen::Index>(i) * f, f);
    p.tp.push_back(block.transpose() * ubm.precisions()[i]);
    p.tpt.push_back(p.tp.back() * block);
  }
  return p;
}

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::LLT<Eigen::MatrixXd> precision;
  double objective = 0.0;
};

Posterior IvectorPosterior(const TvProjections &p, const BaumWelchStats &s, Eigen::Index r) {
  Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(r, r);
  Eigen::VectorXd linear = Eigen::VectorXd::Zero(r);
  for (std::size_t i = 0; i < p.tp.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    precision += s.zeroth(idx) * p.tpt[i];
    linear += p.tp[i] * s.first.row(idx).transpose();
  }
  Posterior post;
  post.precision.compute(0.5 * (precision + precision.transpose()));
  if (post.precision.info() != Eigen::Success)
    Fail(ErrorCode::kNumeric, "i-vector precision is not positive definite for " + s.utt_id);
  post.mean = post.precision.solve(linear);
  Eigen::MatrixXd l = post.precision.matrixL();
  post.objective = 0.5 * linear.dot(post.mean) - l.diagonal().array().log().sum();
  return post;
}

}  // namespace

TvTrainResult TrainTv(const GMM &ubm, const std::vector<BaumWelchStats> &stats,
                      const TvTrainOptions &options) {
  const auto m = static_cast<Eigen::Index>(ubm.NumComponents());
  const auto f = static_cast<Eigen::Index>(ubm.Dim());
  const auto r = static_cast<Eigen::Index>(options.rank);
  if (r < 1 || r > m * f)
    Fail(ErrorCode::kInfeasible, "TV rank " + std::to_string(r) + " outside [1, " +
                                     std::to_string(m * f) + "]");
  if (static_cast<Eigen::Index>(stats.size()) < r)
    Fail(ErrorCode::kInfeasible, "TV training needs at least rank-many utterances");
  for (const auto &s : stats) CheckStats(ubm, s);

  double avg_var = 0.0;
  for (const auto &c : ubm.covariances()) avg_var += c.trace();
  avg_var /= static_cast<double>(m * f);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, options.init_scale * std::sqrt(avg_var));
  TvTrainResult result;
  Eigen::MatrixXd t(m * f, r);
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < r; ++j) t(i, j) = normal(rng);

  for (std::size_t it = 0; it <= options.iters; ++it) {
    TvProjections proj = Project(ubm, t);
    std::vector<Eigen::MatrixXd> lhs(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(r, r));
    std::vector<Eigen::MatrixXd> rhs(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(f, r));
    double objective = 0.0;
    for (const auto &s : stats) {
      Posterior post = IvectorPosterior(proj, s, r);
      objective += post.objective;
      if (it == options.iters) continue;
      Eigen::MatrixXd second = post.precision.solve(Eigen::MatrixXd::Identity(r, r));
      second.noalias() += post.mean * post.mean.transpose();
      for (Eigen::Index i = 0; i < m; ++i) {
        lhs[static_cast<std::size_t>(i)] += s.zeroth(i) * second;
        rhs[static_cast<std::size_t>(i)].noalias() += s.first.row(i).transpose() * post.mean.transpose();
      }
    }
    result.objective.push_back(objective);
    if (it == options.iters) break;
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto &a = lhs[static_cast<std::size_t>(i)];
      if (a.trace() <= 0.0) continue;  // no evidence for this component
      Eigen::LDLT<Eigen::MatrixXd> ldlt(0.5 * (a + a.transpose()));
      if (ldlt.info() != Eigen::Success)
        Fail(ErrorCode::kNumeric, "TV M-step system is singular");
      t.middleRows(i * f, f) = ldlt.solve(rhs[static_cast<std::size_t>(i)].transpose()).transpose();
    }
    if (!t.allFinite()) Fail(ErrorCode::kNumeric, "TV matrix became non-finite");
  }
  result.model.ubm = ubm;
  result.model.matrix = std::move(t);
  return result;
}

Eigen::VectorXd ExtractIvector(const TVModel &tv, const BaumWelchStats &stats) {
  CheckStats(tv.ubm, stats);
  if (static_cast<std::size_t>(tv.matrix.rows()) != tv.ubm.NumComponents() * tv.ubm.Dim())
    Fail(ErrorCode::kDimensionMismatch, "TV matrix does not match its UBM");
  return IvectorPosterior(Project(tv.ubm, tv.matrix), stats,
                          static_cast<Eigen::Index>(tv.Rank()))
      .mean;
}

EmbeddingArchive ExtractIvectors(const TVModel &tv, const std::vector<BaumWelchStats> &stats,
                                 std::size_t jobs) {
  std::vector<EmbeddingRecord> records(stats.size());
  ParallelFor(stats.size(), jobs, [&](std::size_t i) {
    records[i] = {stats[i].utt_id, "ivector", ExtractIvector(tv, stats[i]), stats[i].labels};
  });
  return MakeArchive(std::move(records));
}

void SaveGmm(const GMM &gmm, const std::string &path) {
  BinaryWriter out(path);
  WriteGmmBlock(out, gmm);
  out.Close();
}

GMM LoadGmm(const std::string &path) {
  BinaryReader in(path);
  return ReadGmmBlock(in);
}

void SaveTv(const TVModel &tv, const std::string &path) {
  BinaryWriter out(path);
  out.WriteMagic("TVM1");
  WriteGmmBlock(out, tv.ubm);
  out.WriteU64(tv.Rank());
  out.WriteMatrix(tv.matrix);
  out.Close();
}

TVModel LoadTv(const std::string &path) {
  BinaryReader in(path);
  in.ExpectMagic("TVM1");
  TVModel tv;
  tv.ubm = ReadGmmBlock(in);
  std::uint64_t r = in.ReadU64();
  tv.matrix = in.ReadMatrix(tv.ubm.NumComponents() * tv.ubm.Dim(), r);
  return tv;
}

void SaveStats(const std::vector<BaumWelchStats> &stats, const std::string &path) {
  BinaryWriter out(path);
  out.WriteMagic("BWS1");
  const std::uint64_t m = stats.empty() ? 0 : static_cast<std::uint64_t>(stats.front().zeroth.size());
  const std::uint64_t f = stats.empty() ? 0 : static_cast<std::uint64_t>(stats.front().first.cols());
  out.WriteU64(m);
  out.WriteU64(f);
  out.WriteU64(stats.size());
  for (const auto &s : stats) {
    if (static_cast<std::uint64_t>(s.zeroth.size()) != m ||
        static_cast<std::uint64_t>(s.first.cols()) != f)
      Fail(ErrorCode::kDimensionMismatch, "stats archive mixes shapes");
    out.WriteString(s.utt_id);
    out.WriteString(s.labels.speaker);
    out.WriteString(s.labels.condition);
    out.WriteString(s.labels.noise);
    out.WriteString(s.labels.gender);
    out.WriteVector(s.zeroth);
    out.WriteMatrix(s.first);
  }
  out.Close();
}

std::vector<BaumWelchStats> LoadStats(const std::string &path) {
  BinaryReader in(path);
  in.ExpectMagic("BWS1");
  std::uint64_t m = in.ReadU64(), f = in.ReadU64(), count = in.ReadU64();
  std::vector<BaumWelchStats> stats(count);
  for (auto &s : stats) {
    s.utt_id = in.ReadString();
    s.labels.speaker = in.ReadString();
    s.labels.condition = in.ReadString();
    s.labels.noise = in.ReadString();
    s.labels.gender = in.ReadString();
    s.zeroth = in.ReadVector(m);
    s.first = in.ReadMatrix(m, f);
  }
  return stats;
}

}  // namespace uttemb
