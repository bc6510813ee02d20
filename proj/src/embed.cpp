// src/embed.cpp

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

#include "uttemb/embed.hpp"

#include <algorithm>
#include <cmath>

#include "uttemb/binary_io.hpp"
#include "uttemb/error.hpp"
#include "uttemb/parallel.hpp"

namespace uttemb {

namespace {

void WriteLabels(BinaryWriter &out, const Labels &labels) {
  out.WriteString(labels.speaker);
  out.WriteString(labels.condition);
  out.WriteString(labels.noise);
  out.WriteString(labels.gender);
}

Labels ReadLabels(BinaryReader &in) {
  Labels labels;
  labels.speaker = in.ReadString();
  labels.condition = in.ReadString();
  labels.noise = in.ReadString();
  labels.gender = in.ReadString();
  return labels;
}

void WriteSpans(BinaryWriter &out, const std::vector<SourceSpan> &spans) {
  out.WriteU32(static_cast<std::uint32_t>(spans.size()));
  for (const auto &span : spans) {
    out.WriteString(span.name);
    out.WriteU64(span.start);
    out.WriteU64(span.length);
  }
}

std::vector<SourceSpan> ReadSpans(BinaryReader &in, std::size_t dim) {
  std::uint32_t n = in.ReadU32();
  std::vector<SourceSpan> spans(n);
  for (auto &span : spans) {
    span.name = in.ReadString();
    span.start = in.ReadU64();
    span.length = in.ReadU64();
    if (span.start + span.length > dim)
      Fail(ErrorCode::kMalformedArchive, in.path() + ": span exceeds dimension");
  }
  return spans;
}

// Sign convention: the largest-magnitude loading of every component is positive.
void FixSigns(Eigen::MatrixXd &components) {
  for (Eigen::Index k = 0; k < components.rows(); ++k) {
    Eigen::Index arg;
    components.row(k).cwiseAbs().maxCoeff(&arg);
    if (components(k, arg) < 0) components.row(k) *= -1.0;
  }
}

// X^T X (or X X^T when `gram`) accumulated over row blocks of X, reduced in
// block order.
Eigen::MatrixXd Scatter(const Eigen::MatrixXd &x, bool gram, std::size_t jobs) {
  if (jobs <= 1) {
    if (gram) return x * x.transpose();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    return s.selfadjointView<Eigen::Lower>();
  }
  const Eigen::Index n = x.rows();
  const auto blocks = static_cast<Eigen::Index>(std::min<std::size_t>(jobs, n));
  if (gram) {
    Eigen::MatrixXd g(n, n);
    ParallelFor(static_cast<std::size_t>(blocks), jobs, [&](std::size_t b) {
      Eigen::Index lo = n * static_cast<Eigen::Index>(b) / blocks;
      Eigen::Index hi = n * static_cast<Eigen::Index>(b + 1) / blocks;
      g.middleRows(lo, hi - lo) = x.middleRows(lo, hi - lo) * x.transpose();
    });
    return g;
  }
  std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(blocks));
  ParallelFor(static_cast<std::size_t>(blocks), jobs, [&](std::size_t b) {
    Eigen::Index lo = n * static_cast<Eigen::Index>(b) / blocks;
    Eigen::Index hi = n * static_cast<Eigen::Index>(b + 1) / blocks;
    auto rows = x.middleRows(lo, hi - lo);
    partial[b] = rows.transpose() * rows;
  });
  Eigen::MatrixXd s = partial[0];
  for (std::size_t b = 1; b < partial.size(); ++b) s += partial[b];
  return s;
}

// Gram-Schmidt completion of rows [filled, K) so the K x D matrix is
// orthonormal; candidate directions are the standard basis vectors.
void CompleteOrthonormal(Eigen::MatrixXd &rows, Eigen::Index filled) {
  const Eigen::Index d = rows.cols();
  Eigen::Index next_axis = 0;
  for (Eigen::Index k = filled; k < rows.rows(); ++k) {
    for (;; ++next_axis) {
      if (next_axis >= d)
        Fail(ErrorCode::kNumeric, "cannot complete PCA basis");
      Eigen::RowVectorXd v = Eigen::RowVectorXd::Unit(d, next_axis);
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index j = 0; j < k; ++j) v -= v.dot(rows.row(j)) * rows.row(j);
      double norm = v.norm();
      if (norm > 1e-6) {
        rows.row(k) = v / norm;
        ++next_axis;
        break;
      }
    }
  }
}

}  // namespace

EmbeddingArchive MakeArchive(std::vector<EmbeddingRecord> records,
                             std::vector<SourceSpan> spans) {
  EmbeddingArchive archive;
  archive.spans = std::move(spans);
  if (!records.empty()) {
    archive.source = records.front().source;
    archive.dim = static_cast<std::size_t>(records.front().vector.size());
  }
  for (const auto &r : records) {
    if (r.source != archive.source)
      Fail(ErrorCode::kDimensionMismatch, "mixed sources in one archive");
    if (static_cast<std::size_t>(r.vector.size()) != archive.dim)
      Fail(ErrorCode::kDimensionMismatch,
           "record " + r.utt_id + " has dimension " +
               std::to_string(r.vector.size()) + ", expected " +
               std::to_string(archive.dim));
    if (!r.vector.allFinite())
      Fail(ErrorCode::kNonFinite, "record " + r.utt_id + " is not finite");
  }
  archive.records = std::move(records);
  return archive;
}

void SaveEmbeddings(const EmbeddingArchive &archive, const std::string &path) {
  BinaryWriter out(path);
  out.WriteMagic("EMB1");
  out.WriteString(archive.source);
  out.WriteU64(archive.dim);
  out.WriteU64(archive.records.size());
  WriteSpans(out, archive.spans);
  for (const auto &r : archive.records) {
    if (static_cast<std::size_t>(r.vector.size()) != archive.dim)
      Fail(ErrorCode::kDimensionMismatch, "record " + r.utt_id + " dimension mismatch");
    out.WriteString(r.utt_id);
    WriteLabels(out, r.labels);
    out.WriteVector(r.vector);
  }
  out.Close();
}

EmbeddingArchive LoadEmbeddings(const std::string &path) {
  BinaryReader in(path);
  in.ExpectMagic("EMB1");
  EmbeddingArchive archive;
  archive.source = in.ReadString();
  archive.dim = in.ReadU64();
  std::uint64_t count = in.ReadU64();
  archive.spans = ReadSpans(in, archive.dim);
  archive.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    EmbeddingRecord r;
    r.utt_id = in.ReadString();
    r.labels = ReadLabels(in);
    r.source = archive.source;
    r.vector = in.ReadVector(archive.dim);
    if (!r.vector.allFinite())
      Fail(ErrorCode::kNonFinite, path + ": record " + r.utt_id + " is not finite");
    archive.records.push_back(std::move(r));
  }
  if (!in.AtEnd()) Fail(ErrorCode::kMalformedArchive, path + ": trailing bytes");
  return archive;
}

std::size_t PooledDim(const TensorShape &shape) {
  return shape.flat ? shape.channels : shape.channels * shape.freq;
}

Eigen::VectorXd PoolPreactivation(const Eigen::MatrixXd &frames,
                                  const TensorShape &shape) {
  if (frames.cols() == 0)
    Fail(ErrorCode::kInsufficientData, "cannot pool an empty frame sequence");
  if (static_cast<std::size_t>(frames.rows()) != shape.Size())
    Fail(ErrorCode::kDimensionMismatch, "frames do not match shape " + ToString(shape));
  Eigen::VectorXd sum = frames.rowwise().sum();
  const double n = static_cast<double>(frames.cols());
  if (shape.flat) return sum / n;
  const std::size_t nc = shape.channels, nt = shape.time, nf = shape.freq;
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nc * nf));
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t t = 0; t < nt; ++t)
      for (std::size_t f = 0; f < nf; ++f)
        pooled(static_cast<Eigen::Index>(c * nf + f)) +=
            sum(static_cast<Eigen::Index>((c * nt + t) * nf + f));
  return pooled / (n * static_cast<double>(nt));
}

std::pair<std::size_t, std::size_t> ModelContext(const NetworkModel &model) {
  std::size_t window = model.input_shape.time;
  std::size_t left = (window - 1) / 2;
  return {left, window - 1 - left};
}

std::vector<SourceSpan> WholeModelSpans(const NetworkModel &model) {
  std::vector<TensorShape> shapes = LayerOutputShapes(model);
  std::vector<SourceSpan> spans;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < model.tap_points.size(); ++k) {
    std::size_t len = PooledDim(shapes.at(model.tap_points[k]));
    spans.push_back({model.TapName(k), offset, len});
    offset += len;
  }
  return spans;
}

EmbeddingRecord WholeModelEmbedding(const UtteranceFeatures &utt,
                                    const NetworkModel &model) {
  if (model.tap_points.empty())
    Fail(ErrorCode::kUnknownSource, "model " + model.name + " declares no tap points");
  auto [left, right] = ModelContext(model);
  ForwardResult fwd = Forward(model, Splice(utt, left, right));
  std::vector<Eigen::VectorXd> pooled;
  Eigen::Index dim = 0;
  for (std::size_t k = 0; k < fwd.taps.size(); ++k) {
    pooled.push_back(PoolPreactivation(fwd.taps[k], fwd.tap_shapes[k]));
    dim += pooled.back().size();
  }
  EmbeddingRecord rec{utt.utt_id, kWholeModelSource, Eigen::VectorXd(dim), utt.labels};
  Eigen::Index offset = 0;
  for (const auto &p : pooled) {
    rec.vector.segment(offset, p.size()) = p;
    offset += p.size();
  }
  return rec;
}

EmbeddingRecord InputEmbedding(const UtteranceFeatures &utt, std::size_t left,
                               std::size_t right) {
  SplicedFrames spliced = Splice(utt, left, right);
  return {utt.utt_id, kInputSource,
          PoolPreactivation(spliced.frames,
                            TensorShape::Flat(static_cast<std::size_t>(spliced.frames.rows()))),
          utt.labels};
}

EmbeddingRecord LayerEmbedding(const UtteranceFeatures &utt,
                               const NetworkModel &model,
                               const std::string &source) {
  auto [left, right] = ModelContext(model);
  if (source == kInputSource) return InputEmbedding(utt, left, right);
  std::size_t tap = model.tap_points.size();
  if (source != kOutputSource) {
    for (std::size_t k = 0; k < model.tap_points.size(); ++k)
      if (model.TapName(k) == source) tap = k;
    if (tap == model.tap_points.size())
      Fail(ErrorCode::kUnknownSource, "unknown embedding source '" + source + "'");
  }
  ForwardResult fwd = Forward(model, Splice(utt, left, right));
  Eigen::VectorXd pooled = source == kOutputSource
                               ? PoolPreactivation(fwd.output, fwd.output_shape)
                               : PoolPreactivation(fwd.taps[tap], fwd.tap_shapes[tap]);
  return {utt.utt_id, source, std::move(pooled), utt.labels};
}

EmbeddingArchive ExtractEmbeddings(const std::vector<UtteranceFeatures> &corpus,
                                   const NetworkModel &model,
                                   const std::string &source, bool apply_cmvn,
                                   std::size_t jobs) {
  std::vector<EmbeddingRecord> records(corpus.size());
  ParallelFor(corpus.size(), jobs, [&](std::size_t i) {
    UtteranceFeatures utt = apply_cmvn ? Cmvn(corpus[i]) : corpus[i];
    records[i] = source == kWholeModelSource ? WholeModelEmbedding(utt, model)
                                             : LayerEmbedding(utt, model, source);
  });
  std::vector<SourceSpan> spans;
  if (source == kWholeModelSource) spans = WholeModelSpans(model);
  return MakeArchive(std::move(records), std::move(spans));
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd StackRecords(const std::vector<EmbeddingRecord> &records) {
  if (records.empty()) return {};
  const Eigen::Index d = records.front().vector.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(records.size()), d);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].vector.size() != d)
      Fail(ErrorCode::kDimensionMismatch,
           "record " + records[i].utt_id + " has a different dimension");
    x.row(static_cast<Eigen::Index>(i)) = records[i].vector.transpose();
  }
  return x;
}

std::size_t SelectByVariance(const Eigen::VectorXd &eigenvalues_desc,
                             double total, double fraction) {
  double cumulative = 0.0;
  for (Eigen::Index k = 0; k < eigenvalues_desc.size(); ++k) {
    cumulative += std::max(0.0, eigenvalues_desc(k));
    if (cumulative > fraction * total) return static_cast<std::size_t>(k) + 1;
  }
  return static_cast<std::size_t>(eigenvalues_desc.size());
}

PCAModel TrainPca(const Eigen::MatrixXd &data, const PcaSelection &selection,
                  std::vector<SourceSpan> spans, std::size_t jobs) {
  const Eigen::Index n = data.rows(), d = data.cols();
  if (n < 2) Fail(ErrorCode::kInsufficientData, "PCA needs at least 2 records");
  if (d < 1) Fail(ErrorCode::kInsufficientData, "PCA needs non-empty vectors");
  const Eigen::Index max_k = std::min(d, n - 1);
  if (selection.mode == PcaSelection::Mode::kFixedK &&
      (selection.k < 1 || static_cast<Eigen::Index>(selection.k) > max_k))
    Fail(ErrorCode::kOutOfRange,
         "PCA K=" + std::to_string(selection.k) + " outside [1, " +
             std::to_string(max_k) + "]");
  if (selection.mode == PcaSelection::Mode::kVarianceThreshold &&
      !(selection.fraction > 0.0 && selection.fraction <= 1.0))
    Fail(ErrorCode::kOutOfRange, "variance fraction must lie in (0, 1]");

  PCAModel pca;
  pca.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - pca.mean.transpose();
  const double scale = 1.0 / static_cast<double>(n - 1);
  const bool dual = n < d;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Scatter(centered, dual, jobs) * scale);
  if (eig.info() != Eigen::Success) Fail(ErrorCode::kNumeric, "PCA eigensolver failed");
  const Eigen::Index m = eig.eigenvalues().size();
  Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
  Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double total = values.sum();

  Eigen::Index k = selection.mode == PcaSelection::Mode::kFixedK
                       ? static_cast<Eigen::Index>(selection.k)
                       : static_cast<Eigen::Index>(SelectByVariance(
                             values.head(max_k), total, selection.fraction));
  k = std::clamp<Eigen::Index>(k, 1, std::min(max_k, m));

  pca.eigenvalues = values.head(k);
  pca.components.resize(k, d);
  if (!dual) {
    pca.components = vectors.leftCols(k).transpose();
  } else {
    // Eigenvectors of the covariance are X^T u / sqrt((N-1) lambda).
    const double floor = 1e-12 * std::max(values(0), 1e-300);
    Eigen::Index filled = 0;
    for (; filled < k && values(filled) > floor; ++filled) {
      Eigen::VectorXd v = centered.transpose() * vectors.col(filled);
      pca.components.row(filled) = (v / v.norm()).transpose();
    }
    CompleteOrthonormal(pca.components, filled);
  }
  FixSigns(pca.components);
  pca.source_offsets = std::move(spans);
  return pca;
}

PCAModel TrainPca(const std::vector<EmbeddingRecord> &records,
                  const PcaSelection &selection, std::vector<SourceSpan> spans,
                  std::size_t jobs) {
  if (records.size() < 2)
    Fail(ErrorCode::kInsufficientData, "PCA needs at least 2 records");
  return TrainPca(StackRecords(records), selection, std::move(spans), jobs);
}

Eigen::VectorXd ApplyPca(const PCAModel &pca, const Eigen::VectorXd &v) {
  if (v.size() != pca.mean.size())
    Fail(ErrorCode::kDimensionMismatch,
         "vector of dimension " + std::to_string(v.size()) +
             " given to PCA of dimension " + std::to_string(pca.mean.size()));
  return pca.components * (v - pca.mean);
}

EmbeddingRecord ApplyPca(const PCAModel &pca, const EmbeddingRecord &record) {
  return {record.utt_id, record.source + "+pca", ApplyPca(pca, record.vector),
          record.labels};
}

std::vector<std::pair<std::string, double>> ComponentAttribution(
    const PCAModel &pca) {
  if (pca.source_offsets.empty())
    Fail(ErrorCode::kMissingLabel, "PCA model carries no source offsets");
  std::vector<std::size_t> counts(pca.source_offsets.size(), 0);
  for (Eigen::Index k = 0; k < pca.components.rows(); ++k) {
    std::size_t best = 0;
    double best_energy = -1.0;
    for (std::size_t s = 0; s < pca.source_offsets.size(); ++s) {
      const auto &span = pca.source_offsets[s];
      double energy = pca.components.row(k)
                          .segment(static_cast<Eigen::Index>(span.start),
                                   static_cast<Eigen::Index>(span.length))
                          .squaredNorm();
      if (energy > best_energy) {
        best_energy = energy;
        best = s;
      }
    }
    ++counts[best];
  }
  std::vector<std::pair<std::string, double>> table;
  const double total = static_cast<double>(pca.components.rows());
  for (std::size_t s = 0; s < counts.size(); ++s)
    table.emplace_back(pca.source_offsets[s].name,
                       100.0 * static_cast<double>(counts[s]) / total);
  return table;
}

void SavePca(const PCAModel &pca, const std::string &path) {
  BinaryWriter out(path);
  out.WriteMagic("PCA1");
  out.WriteU64(pca.Dim());
  out.WriteU64(pca.NumComponents());
  out.WriteVector(pca.mean);
  out.WriteVector(pca.eigenvalues);
  out.WriteMatrix(pca.components);
  WriteSpans(out, pca.source_offsets);
  out.Close();
}

PCAModel LoadPca(const std::string &path) {
  BinaryReader in(path);
  in.ExpectMagic("PCA1");
  PCAModel pca;
  std::uint64_t d = in.ReadU64(), k = in.ReadU64();
  pca.mean = in.ReadVector(d);
  pca.eigenvalues = in.ReadVector(k);
  pca.components = in.ReadMatrix(k, d);
  pca.source_offsets = ReadSpans(in, d);
  return pca;
}

}  // namespace uttemb
