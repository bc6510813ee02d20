// src/backends.cpp

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

#include "uttemb/backends.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "uttemb/binary_io.hpp"
#include "uttemb/error.hpp"

namespace uttemb {

namespace {

struct ClassStats {
  std::size_t count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd scatter;  // sum of (x - class mean)(x - class mean)^T
};

std::size_t CheckedDim(const std::vector<LabeledVector> &data) {
  if (data.empty()) Fail(ErrorCode::kInsufficientData, "no training vectors");
  const Eigen::Index d = data.front().vector.size();
  for (const auto &lv : data) {
    if (lv.vector.size() != d)
      Fail(ErrorCode::kDimensionMismatch, "training vectors differ in dimension");
    if (!lv.vector.allFinite())
      Fail(ErrorCode::kNonFinite, "non-finite training vector");
  }
  return static_cast<std::size_t>(d);
}

std::map<std::string, ClassStats> GroupByClass(const std::vector<LabeledVector> &data) {
  const Eigen::Index d = data.front().vector.size();
  std::map<std::string, std::vector<const Eigen::VectorXd *>> members;
  for (const auto &lv : data) members[lv.label].push_back(&lv.vector);
  std::map<std::string, ClassStats> classes;
  for (const auto &[label, vecs] : members) {
    ClassStats cs;
    cs.count = vecs.size();
    cs.mean = Eigen::VectorXd::Zero(d);
    for (const auto *v : vecs) cs.mean += *v;
    cs.mean /= static_cast<double>(cs.count);
    cs.scatter = Eigen::MatrixXd::Zero(d, d);
    for (const auto *v : vecs) {
      Eigen::VectorXd c = *v - cs.mean;
      cs.scatter.noalias() += c * c.transpose();
    }
    classes.emplace(label, std::move(cs));
  }
  return classes;
}

Eigen::MatrixXd Symmetrize(const Eigen::MatrixXd &m) {
  return 0.5 * (m + m.transpose());
}

double LogDetPd(const Eigen::MatrixXd &m, const char *what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    Fail(ErrorCode::kNumeric, std::string(what) + " is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void FixRowSigns(Eigen::MatrixXd &rows) {
  for (Eigen::Index k = 0; k < rows.rows(); ++k) {
    Eigen::Index arg;
    rows.row(k).cwiseAbs().maxCoeff(&arg);
    if (rows(k, arg) < 0) rows.row(k) *= -1.0;
  }
}

}  // namespace

Eigen::VectorXd LengthNormalize(const Eigen::VectorXd &v) {
  double norm = v.norm();
  if (!(norm > 0.0)) Fail(ErrorCode::kNumeric, "cannot length-normalize a zero vector");
  return v / norm;
}

double CosineScore(const Eigen::VectorXd &enroll, const Eigen::VectorXd &eval,
                   const Eigen::VectorXd &global_mean) {
  if (enroll.size() != eval.size() || enroll.size() != global_mean.size())
    Fail(ErrorCode::kDimensionMismatch, "cosine scoring of unequal dimensions");
  return LengthNormalize(enroll - global_mean).dot(LengthNormalize(eval - global_mean));
}

LDAModel TrainLda(const std::vector<LabeledVector> &data, std::size_t out_dim,
                  double regularization) {
  const std::size_t d = CheckedDim(data);
  auto classes = GroupByClass(data);
  const std::size_t num_classes = classes.size();
  if (num_classes < 2) Fail(ErrorCode::kInsufficientData, "LDA needs at least 2 classes");
  for (const auto &[label, cs] : classes)
    if (cs.count < 2)
      Fail(ErrorCode::kInsufficientData, "LDA class '" + label + "' has < 2 samples");
  if (out_dim < 1 || out_dim > num_classes - 1 || out_dim > d)
    Fail(ErrorCode::kOutOfRange,
         "LDA dimension " + std::to_string(out_dim) + " exceeds min(D, C-1) = " +
             std::to_string(std::min(d, num_classes - 1)));

  const auto dd = static_cast<Eigen::Index>(d);
  const double n = static_cast<double>(data.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dd);
  for (const auto &lv : data) mean += lv.vector;
  mean /= n;

  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(dd, dd);
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(dd, dd);
  for (const auto &[label, cs] : classes) {
    within += cs.scatter;
    Eigen::VectorXd diff = cs.mean - mean;
    between.noalias() += static_cast<double>(cs.count) * diff * diff.transpose();
  }
  within /= n;
  between /= n;
  const double trace = within.trace();
  if (!(trace > 0.0)) Fail(ErrorCode::kNumeric, "within-class scatter is zero");
  within.diagonal().array() += regularization * trace / static_cast<double>(d);

  Eigen::LLT<Eigen::MatrixXd> llt(within);
  if (llt.info() != Eigen::Success)
    Fail(ErrorCode::kNumeric, "within-class scatter is singular");
  // L^-1 S_b L^-T
  Eigen::MatrixXd whitened = llt.matrixL().solve(between);
  whitened = llt.matrixL().solve(whitened.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Symmetrize(whitened));
  if (eig.info() != Eigen::Success) Fail(ErrorCode::kNumeric, "LDA eigensolver failed");

  const auto r = static_cast<Eigen::Index>(out_dim);
  Eigen::MatrixXd top = eig.eigenvectors().rowwise().reverse().leftCols(r);
  // Rows are U^T L^-1, i.e. each row w satisfies w^T S_w w = 1.
  LDAModel lda;
  lda.mean = mean;
  lda.transform = llt.matrixU().solve(top).transpose();
  FixRowSigns(lda.transform);
  if (!lda.transform.allFinite()) Fail(ErrorCode::kNumeric, "LDA transform not finite");
  return lda;
}

Eigen::VectorXd ApplyLda(const LDAModel &lda, const Eigen::VectorXd &v) {
  if (v.size() != lda.mean.size())
    Fail(ErrorCode::kDimensionMismatch,
         "vector of dimension " + std::to_string(v.size()) +
             " given to LDA of dimension " + std::to_string(lda.mean.size()));
  return lda.transform * (v - lda.mean);
}

void SaveLda(const LDAModel &lda, const std::string &path) {
  BinaryWriter out(path);
  out.WriteMagic("LDA1");
  out.WriteU64(lda.InDim());
  out.WriteU64(lda.OutDim());
  out.WriteVector(lda.mean);
  out.WriteMatrix(lda.transform);
  out.Close();
}

LDAModel LoadLda(const std::string &path) {
  BinaryReader in(path);
  in.ExpectMagic("LDA1");
  LDAModel lda;
  std::uint64_t d = in.ReadU64(), r = in.ReadU64();
  lda.mean = in.ReadVector(d);
  lda.transform = in.ReadMatrix(r, d);
  if (!lda.transform.allFinite()) Fail(ErrorCode::kNonFinite, path + ": non-finite LDA");
  return lda;
}

// ---------------------------------------------------------------------------

PLDAModel::PLDAModel(Eigen::VectorXd mean, Eigen::MatrixXd between_cov,
                     Eigen::MatrixXd within_cov)
    : mean_(std::move(mean)),
      between_(std::move(between_cov)),
      within_(std::move(within_cov)) {
  const Eigen::Index d = mean_.size();
  if (between_.rows() != d || between_.cols() != d || within_.rows() != d ||
      within_.cols() != d)
    Fail(ErrorCode::kDimensionMismatch, "PLDA covariance dimensions disagree");
  if (!mean_.allFinite() || !between_.allFinite() || !within_.allFinite())
    Fail(ErrorCode::kNonFinite, "PLDA parameters not finite");
  Eigen::LLT<Eigen::MatrixXd> llt(within_);
  if (llt.info() != Eigen::Success)
    Fail(ErrorCode::kNumeric, "PLDA within-class covariance is not positive definite");
  Eigen::MatrixXd whitening = llt.matrixL().solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd projected = Symmetrize(whitening * between_ * whitening.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(projected);
  if (eig.info() != Eigen::Success) Fail(ErrorCode::kNumeric, "PLDA eigensolver failed");
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (d > 0 && eig.eigenvalues().minCoeff() < -1e-10 * scale)
    Fail(ErrorCode::kNumeric, "PLDA between-class covariance is not PSD");
  psi_ = eig.eigenvalues().cwiseMax(0.0);
  transform_ = eig.eigenvectors().transpose() * whitening;
}

double PLDAModel::Score(const Eigen::VectorXd &enroll,
                        const Eigen::VectorXd &eval) const {
  if (enroll.size() != mean_.size() || eval.size() != mean_.size())
    Fail(ErrorCode::kDimensionMismatch, "PLDA scoring dimension mismatch");
  Eigen::VectorXd u = transform_ * (enroll - mean_);
  Eigen::VectorXd v = transform_ * (eval - mean_);
  double llr = 0.0;
  for (Eigen::Index k = 0; k < psi_.size(); ++k) {
    const double b = psi_(k);
    const double uu = u(k) * u(k) + v(k) * v(k), uv = u(k) * v(k);
    llr += std::log1p(b) - 0.5 * std::log1p(2.0 * b) -
           0.5 * (((b + 1.0) * uu - 2.0 * b * uv) / (2.0 * b + 1.0) - uu / (b + 1.0));
  }
  return llr;
}

double PldaScore(const PLDAModel &model, const Eigen::VectorXd &enroll,
                 const Eigen::VectorXd &eval) {
  return model.Score(enroll, eval);
}

double PldaLogLikelihood(const std::vector<LabeledVector> &data,
                         const Eigen::VectorXd &mean,
                         const Eigen::MatrixXd &between_cov,
                         const Eigen::MatrixXd &within_cov) {
  const std::size_t d = CheckedDim(data);
  auto classes = GroupByClass(data);
  Eigen::LLT<Eigen::MatrixXd> within_llt(within_cov);
  if (within_llt.info() != Eigen::Success)
    Fail(ErrorCode::kNumeric, "within-class covariance is not positive definite");
  const double log_det_w = LogDetPd(within_cov, "within-class covariance");
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  double ll = 0.0;
  for (const auto &[label, cs] : classes) {
    const double n = static_cast<double>(cs.count);
    Eigen::MatrixXd combined = within_cov + n * between_cov;
    Eigen::LLT<Eigen::MatrixXd> comb_llt(combined);
    if (comb_llt.info() != Eigen::Success)
      Fail(ErrorCode::kNumeric, "class covariance is not positive definite");
    const double log_det_c = LogDetPd(combined, "class covariance");
    Eigen::VectorXd diff = cs.mean - mean;
    const double quad = diff.dot(comb_llt.solve(diff));
    const double within_term = within_llt.solve(cs.scatter).trace();
    ll += -0.5 * n * static_cast<double>(d) * log_2pi - 0.5 * (n - 1.0) * log_det_w -
          0.5 * log_det_c - 0.5 * within_term - 0.5 * n * quad;
  }
  return ll;
}

PldaTrainResult TrainPlda(const std::vector<LabeledVector> &data,
                          const PldaTrainOptions &options) {
  const std::size_t d = CheckedDim(data);
  const auto dd = static_cast<Eigen::Index>(d);
  auto classes = GroupByClass(data);
  const double num_classes = static_cast<double>(classes.size());
  if (classes.size() < 2) Fail(ErrorCode::kInsufficientData, "PLDA needs at least 2 classes");
  bool any_repeat = false;
  for (const auto &[label, cs] : classes) any_repeat |= cs.count >= 2;
  if (!any_repeat)
    Fail(ErrorCode::kInsufficientData,
         "PLDA needs a class with at least 2 samples; within-class covariance "
         "is not identifiable from single-sample classes");

  const double n_total = static_cast<double>(data.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dd);
  for (const auto &lv : data) mean += lv.vector;
  mean /= n_total;
  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(dd, dd);
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(dd, dd);
  for (const auto &[label, cs] : classes) {
    Eigen::VectorXd diff = cs.mean - mean;
    between.noalias() += diff * diff.transpose();
    within += cs.scatter;
  }
  between /= num_classes;
  within /= n_total;
  const double trace = within.trace();
  if (!(trace > 0.0)) Fail(ErrorCode::kNumeric, "within-class covariance is zero");
  within.diagonal().array() += options.regularization * trace / static_cast<double>(d);

  PldaTrainResult result;
  result.log_likelihood.push_back(PldaLogLikelihood(data, mean, between, within));
  for (std::size_t iter = 0; iter < options.iters; ++iter) {
    // E-step: posterior of each class center, grouped by class size since
    // the posterior covariance depends only on the count.
    std::map<std::size_t, std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> by_count;
    for (const auto &[label, cs] : classes) {
      if (by_count.count(cs.count)) continue;
      Eigen::MatrixXd marginal = between + within / static_cast<double>(cs.count);
      Eigen::LLT<Eigen::MatrixXd> llt(marginal);
      if (llt.info() != Eigen::Success)
        Fail(ErrorCode::kNumeric, "PLDA marginal covariance is not positive definite");
      Eigen::MatrixXd gain = llt.solve(between).transpose();  // B (B + W/n)^-1
      Eigen::MatrixXd post_cov = Symmetrize(between - gain * between);
      by_count.emplace(cs.count, std::make_pair(std::move(gain), std::move(post_cov)));
    }
    std::vector<Eigen::VectorXd> centers;
    centers.reserve(classes.size());
    Eigen::MatrixXd sum_post_cov = Eigen::MatrixXd::Zero(dd, dd);
    Eigen::MatrixXd new_within = Eigen::MatrixXd::Zero(dd, dd);
    Eigen::VectorXd new_mean = Eigen::VectorXd::Zero(dd);
    for (const auto &[label, cs] : classes) {
      const auto &[gain, post_cov] = by_count.at(cs.count);
      Eigen::VectorXd center = mean + gain * (cs.mean - mean);
      Eigen::VectorXd offset = cs.mean - center;
      const double n = static_cast<double>(cs.count);
      sum_post_cov += post_cov;
      new_within += n * post_cov + cs.scatter + n * offset * offset.transpose();
      new_mean += center;
      centers.push_back(std::move(center));
    }
    // M-step.
    new_mean /= num_classes;
    Eigen::MatrixXd new_between = sum_post_cov;
    for (const auto &c : centers) {
      Eigen::VectorXd diff = c - new_mean;
      new_between.noalias() += diff * diff.transpose();
    }
    mean = new_mean;
    between = Symmetrize(new_between / num_classes);
    within = Symmetrize(new_within / n_total);
    result.log_likelihood.push_back(PldaLogLikelihood(data, mean, between, within));
  }
  result.model = PLDAModel(mean, between, within);
  return result;
}

void SavePlda(const PLDAModel &plda, const std::string &path) {
  BinaryWriter out(path);
  out.WriteMagic("PLD1");
  out.WriteU64(plda.Dim());
  out.WriteVector(plda.mean());
  out.WriteMatrix(plda.between_cov());
  out.WriteMatrix(plda.within_cov());
  out.Close();
}

PLDAModel LoadPlda(const std::string &path) {
  BinaryReader in(path);
  in.ExpectMagic("PLD1");
  std::uint64_t d = in.ReadU64();
  Eigen::VectorXd mean = in.ReadVector(d);
  Eigen::MatrixXd between = in.ReadMatrix(d, d);
  Eigen::MatrixXd within = in.ReadMatrix(d, d);
  return PLDAModel(std::move(mean), std::move(between), std::move(within));
}

}  // namespace uttemb
