// include/uttemb/embed.hpp

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

#ifndef UTTEMB_EMBED_HPP_
#define UTTEMB_EMBED_HPP_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "uttemb/features.hpp"
#include "uttemb/netio.hpp"

namespace uttemb {

inline constexpr const char *kWholeModelSource = "whole-model";
inline constexpr const char *kInputSource = "input";
inline constexpr const char *kOutputSource = "output";

struct EmbeddingRecord {
  std::string utt_id;
  std::string source;
  Eigen::VectorXd vector;
  Labels labels;
};

/// Span of a concatenated vector contributed by one source.
struct SourceSpan {
  std::string name;
  std::size_t start = 0;
  std::size_t length = 0;
  bool operator==(const SourceSpan &) const = default;
};

/// An "EMB1" archive: every record shares `source` and `dim`. `spans` is
/// non-empty for whole-model archives and carries the per-tap layout.
struct EmbeddingArchive {
  std::string source;
  std::size_t dim = 0;
  std::vector<SourceSpan> spans;
  std::vector<EmbeddingRecord> records;
};

/// Builds an archive from records, checking that source and dimension agree
/// and that every vector is finite.
EmbeddingArchive MakeArchive(std::vector<EmbeddingRecord> records,
                             std::vector<SourceSpan> spans = {});
void SaveEmbeddings(const EmbeddingArchive &archive, const std::string &path);
EmbeddingArchive LoadEmbeddings(const std::string &path);

/// Length of the pooled vector for an activation of the given shape.
std::size_t PooledDim(const TensorShape &shape);

/// Temporal mean of per-frame pre-activations (one frame per column). Flat
/// activations are averaged as vectors. Convolutional maps are averaged over
/// frames and over the map's time axis, then laid out channel-major with
/// frequency fastest, giving channels * freq values.
Eigen::VectorXd PoolPreactivation(const Eigen::MatrixXd &frames,
                                  const TensorShape &shape);

/// Context (left, right) implied by the model's input window.
std::pair<std::size_t, std::size_t> ModelContext(const NetworkModel &model);

/// Per-tap spans of the whole-model vector, in ascending layer order.
std::vector<SourceSpan> WholeModelSpans(const NetworkModel &model);

/// Concatenated pooled pre-activations of every tap point. The features are
/// used as given; normalize them first if the model expects it.
EmbeddingRecord WholeModelEmbedding(const UtteranceFeatures &utt,
                                    const NetworkModel &model);

/// Pooled representation of one source: a tap name, "input" (the spliced
/// input frames) or "output" (the final post-activation layer).
EmbeddingRecord LayerEmbedding(const UtteranceFeatures &utt,
                               const NetworkModel &model,
                               const std::string &source);

/// Input-pooled embedding without a model.
EmbeddingRecord InputEmbedding(const UtteranceFeatures &utt, std::size_t left,
                               std::size_t right);

/// Extracts `source` ("whole-model", a tap name, "input" or "output") for a
/// whole corpus on up to `jobs` threads, in corpus order.
EmbeddingArchive ExtractEmbeddings(const std::vector<UtteranceFeatures> &corpus,
                                   const NetworkModel &model,
                                   const std::string &source, bool apply_cmvn,
                                   std::size_t jobs = 1);

// ---------------------------------------------------------------------------
// PCA

struct PcaSelection {
  enum class Mode { kFixedK, kVarianceThreshold };
  Mode mode = Mode::kFixedK;
  std::size_t k = 0;
  double fraction = 0.0;

  static PcaSelection FixedK(std::size_t k) { return {Mode::kFixedK, k, 0.0}; }
  static PcaSelection VarianceThreshold(double f) {
    return {Mode::kVarianceThreshold, 0, f};
  }
};

struct PCAModel {
  Eigen::VectorXd mean;        // D
  Eigen::MatrixXd components;  // K x D, orthonormal rows
  Eigen::VectorXd eigenvalues; // K, descending
  std::vector<SourceSpan> source_offsets;

  std::size_t Dim() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t NumComponents() const {
    return static_cast<std::size_t>(components.rows());
  }
};

/// Smallest K whose leading eigenvalues explain strictly more than
/// `fraction` of `total`. Capped at the number of eigenvalues given.
std::size_t SelectByVariance(const Eigen::VectorXd &eigenvalues_desc,
                             double total, double fraction);

/// Sample-covariance PCA (1/(N-1)). Uses the N x N Gram matrix when N < D.
/// `jobs` > 1 accumulates the covariance (or Gram) matrix in parallel blocks.
PCAModel TrainPca(const Eigen::MatrixXd &data,  // N x D, one record per row
                  const PcaSelection &selection,
                  std::vector<SourceSpan> spans = {}, std::size_t jobs = 1);
PCAModel TrainPca(const std::vector<EmbeddingRecord> &records,
                  const PcaSelection &selection,
                  std::vector<SourceSpan> spans = {}, std::size_t jobs = 1);

EmbeddingRecord ApplyPca(const PCAModel &pca, const EmbeddingRecord &record);
Eigen::VectorXd ApplyPca(const PCAModel &pca, const Eigen::VectorXd &v);

/// Share (percent) of components attributed to each source, in span order.
/// A component goes to the span holding the largest sum of squared loadings.
std::vector<std::pair<std::string, double>> ComponentAttribution(
    const PCAModel &pca);

/// "PCA1": u64 D, u64 K, mean, eigenvalues, components (row-major), u32 span
/// count and spans (name, u64 start, u64 length).
void SavePca(const PCAModel &pca, const std::string &path);
PCAModel LoadPca(const std::string &path);

/// Stacks record vectors as rows; throws on mixed dimensions.
Eigen::MatrixXd StackRecords(const std::vector<EmbeddingRecord> &records);

}  // namespace uttemb

#endif  // UTTEMB_EMBED_HPP_
