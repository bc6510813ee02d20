// include/uttemb/ivector.hpp

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

#ifndef UTTEMB_IVECTOR_HPP_
#define UTTEMB_IVECTOR_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uttemb/embed.hpp"
#include "uttemb/features.hpp"

namespace uttemb {

/// Full-covariance Gaussian mixture.
class GMM {
 public:
  GMM() = default;
  GMM(Eigen::VectorXd weights, Eigen::MatrixXd means,
      std::vector<Eigen::MatrixXd> covariances);

  std::size_t NumComponents() const { return static_cast<std::size_t>(weights_.size()); }
  std::size_t Dim() const { return static_cast<std::size_t>(means_.cols()); }
  const Eigen::VectorXd &weights() const { return weights_; }
  const Eigen::MatrixXd &means() const { return means_; }  // M x F
  const std::vector<Eigen::MatrixXd> &covariances() const { return covariances_; }
  /// Inverse covariances, cached at construction.
  const std::vector<Eigen::MatrixXd> &precisions() const { return precisions_; }

  /// Per-component log(weight * N(x; mean, cov)) for one frame.
  Eigen::VectorXd ComponentLogLikelihoods(const Eigen::VectorXd &x) const;
  /// Posterior responsibilities of each component (sum to 1) and the frame
  /// log-likelihood.
  Eigen::VectorXd Posteriors(const Eigen::VectorXd &x, double *log_like = nullptr) const;

 private:
  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_;
  std::vector<Eigen::MatrixXd> covariances_;
  std::vector<Eigen::MatrixXd> precisions_;
  std::vector<Eigen::MatrixXd> chol_;  // lower Cholesky factors
  Eigen::VectorXd log_norm_;           // log w - 0.5 (F log 2pi + log|cov|)
};

struct UbmTrainOptions {
  std::size_t components = 16;
  std::size_t iters = 10;
  std::uint64_t seed = 0;
  std::size_t kmeans_iters = 2;
  /// Eigenvalue floor as a fraction of the average data variance.
  double floor_fraction = 1e-4;
  /// Minimum frames per free parameter scale (frames >= factor * M * F).
  std::size_t min_frames_factor = 10;
};

struct UbmTrainResult {
  GMM gmm;
  /// Data log-likelihood (total over frames) of the model entering each EM
  /// iteration, and of the final model.
  std::vector<double> log_likelihood;
  /// Number of covariance eigenvalues raised to the floor in the last M-step.
  std::size_t floored_eigenvalues = 0;
  /// Components that received no frames and were reset.
  std::size_t collapsed_components = 0;
};

/// EM for a full-covariance UBM. Initialization draws M distinct frames with
/// `seed` and refines them with hard k-means iterations.
UbmTrainResult TrainUbm(const Eigen::MatrixXd &frames,  // N x F
                        const UbmTrainOptions &options);

/// Rows of all utterances stacked in corpus order.
Eigen::MatrixXd PoolFrames(const std::vector<UtteranceFeatures> &corpus);

struct BaumWelchStats {
  std::string utt_id;
  Labels labels;
  Eigen::VectorXd zeroth;  // M soft counts
  Eigen::MatrixXd first;   // M x F, sum_t gamma_t(m) (x_t - mean_m)
};

BaumWelchStats AccumulateStats(const GMM &ubm, const UtteranceFeatures &utt);
std::vector<BaumWelchStats> AccumulateStats(const GMM &ubm,
                                            const std::vector<UtteranceFeatures> &corpus,
                                            std::size_t jobs = 1);

struct TVModel {
  GMM ubm;
  Eigen::MatrixXd matrix;  // (M * F) x R, component-major blocks of F rows

  std::size_t Rank() const { return static_cast<std::size_t>(matrix.cols()); }
};

struct TvTrainOptions {
  std::size_t rank = 20;
  std::size_t iters = 10;
  std::uint64_t seed = 0;
  /// Stddev of the Gaussian initialization, relative to sqrt(average variance).
  double init_scale = 1.0;
};

struct TvTrainResult {
  TVModel model;
  /// EM objective sum_u (0.5 b_u^T L_u^-1 b_u - 0.5 log|L_u|) before the first
  /// update and after each iteration.
  std::vector<double> objective;
};

/// EM estimate of the total-variability matrix: centered supervector offset
/// = T w with w ~ N(0, I) and the UBM covariances held fixed.
TvTrainResult TrainTv(const GMM &ubm, const std::vector<BaumWelchStats> &stats,
                      const TvTrainOptions &options);

/// Posterior mean L^-1 T^T S^-1 f with L = I + T^T S^-1 N T.
Eigen::VectorXd ExtractIvector(const TVModel &tv, const BaumWelchStats &stats);

/// i-vectors as an embedding archive with source "ivector".
EmbeddingArchive ExtractIvectors(const TVModel &tv,
                                 const std::vector<BaumWelchStats> &stats,
                                 std::size_t jobs = 1);

/// "GMM1": u64 M, u64 F, weights, means, then M covariances (row-major).
void SaveGmm(const GMM &gmm, const std::string &path);
GMM LoadGmm(const std::string &path);
/// "TVM1": embedded GMM1 block, then u64 R and the matrix.
void SaveTv(const TVModel &tv, const std::string &path);
TVModel LoadTv(const std::string &path);
/// "BWS1": u64 M, u64 F, u64 count, then per utterance id, labels, zeroth, first.
void SaveStats(const std::vector<BaumWelchStats> &stats, const std::string &path);
std::vector<BaumWelchStats> LoadStats(const std::string &path);

}  // namespace uttemb

#endif  // UTTEMB_IVECTOR_HPP_
