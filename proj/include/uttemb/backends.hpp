// include/uttemb/backends.hpp

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

#ifndef UTTEMB_BACKENDS_HPP_
#define UTTEMB_BACKENDS_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uttemb {

/// A vector with its class label, the training unit of LDA and PLDA.
struct LabeledVector {
  Eigen::VectorXd vector;
  std::string label;
};

Eigen::VectorXd LengthNormalize(const Eigen::VectorXd &v);

/// normalize(enroll - mean) . normalize(eval - mean)
double CosineScore(const Eigen::VectorXd &enroll, const Eigen::VectorXd &eval,
                   const Eigen::VectorXd &global_mean);

// ---------------------------------------------------------------------------
// LDA

struct LDAModel {
  Eigen::VectorXd mean;       // D
  Eigen::MatrixXd transform;  // R x D

  std::size_t InDim() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t OutDim() const { return static_cast<std::size_t>(transform.rows()); }
};

inline constexpr double kLdaWithinRegularization = 1e-6;

/// Multi-class LDA. Rows solve S_b w = lambda S_w w for the R largest lambda,
/// scaled so the projected within-class covariance is the identity. S_w is
/// regularized by eps * trace(S_w) / D before whitening.
LDAModel TrainLda(const std::vector<LabeledVector> &data, std::size_t out_dim,
                  double regularization = kLdaWithinRegularization);

Eigen::VectorXd ApplyLda(const LDAModel &lda, const Eigen::VectorXd &v);

/// "LDA1": u64 D, u64 R, mean, transform (row-major).
void SaveLda(const LDAModel &lda, const std::string &path);
LDAModel LoadLda(const std::string &path);

// ---------------------------------------------------------------------------
// PLDA (two-covariance)

/// Class centers y ~ N(mean, between_cov); observations x ~ N(y, within_cov).
class PLDAModel {
 public:
  PLDAModel() = default;
  /// Checks the invariants and precomputes the scoring transform.
  PLDAModel(Eigen::VectorXd mean, Eigen::MatrixXd between_cov,
            Eigen::MatrixXd within_cov);

  const Eigen::VectorXd &mean() const { return mean_; }
  const Eigen::MatrixXd &between_cov() const { return between_; }
  const Eigen::MatrixXd &within_cov() const { return within_; }
  std::size_t Dim() const { return static_cast<std::size_t>(mean_.size()); }

  /// log p(x1, x2 | same class) - log p(x1) p(x2); symmetric in its arguments.
  double Score(const Eigen::VectorXd &enroll, const Eigen::VectorXd &eval) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd between_, within_;
  // Simultaneous diagonalization: transform_ W transform_^T = I,
  // transform_ B transform_^T = diag(psi_).
  Eigen::MatrixXd transform_;
  Eigen::VectorXd psi_;
};

struct PldaTrainOptions {
  std::size_t iters = 10;
  /// Added as eps * trace / D to the initial within-class covariance.
  double regularization = 1e-6;
};

struct PldaTrainResult {
  PLDAModel model;
  /// Marginal log-likelihood of the training data before the first update and
  /// after every EM iteration (iters + 1 entries).
  std::vector<double> log_likelihood;
};

PldaTrainResult TrainPlda(const std::vector<LabeledVector> &data,
                          const PldaTrainOptions &options = {});

/// Marginal log-likelihood of labeled data under a two-covariance model.
double PldaLogLikelihood(const std::vector<LabeledVector> &data,
                         const Eigen::VectorXd &mean,
                         const Eigen::MatrixXd &between_cov,
                         const Eigen::MatrixXd &within_cov);

double PldaScore(const PLDAModel &model, const Eigen::VectorXd &enroll,
                 const Eigen::VectorXd &eval);

/// "PLD1": u64 D, mean, between_cov, within_cov (row-major).
void SavePlda(const PLDAModel &plda, const std::string &path);
PLDAModel LoadPlda(const std::string &path);

}  // namespace uttemb

#endif  // UTTEMB_BACKENDS_HPP_
