// python/src/module.cpp

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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "uttemb/backends.hpp"
#include "uttemb/embed.hpp"
#include "uttemb/error.hpp"
#include "uttemb/features.hpp"
#include "uttemb/ivector.hpp"
#include "uttemb/netio.hpp"
#include "uttemb/synth.hpp"
#include "uttemb/trials.hpp"

namespace py = pybind11;
using namespace uttemb;

namespace {

PyObject *g_error_type = nullptr;

std::vector<LabeledVector> Labeled(const Eigen::MatrixXd &data, const std::vector<std::string> &labels) {
  if (static_cast<std::size_t>(data.rows()) != labels.size())
    Fail(ErrorCode::kDimensionMismatch, "data has " + std::to_string(data.rows()) + " rows but " +
                                           std::to_string(labels.size()) + " labels were given");
  std::vector<LabeledVector> out;
  out.reserve(labels.size());
  for (Eigen::Index i = 0; i < data.rows(); ++i) out.push_back({data.row(i).transpose(), labels[i]});
  return out;
}

PcaSelection Selection(std::optional<std::size_t> k, std::optional<double> variance) {
  if (k && variance) Fail(ErrorCode::kUsage, "give at most one of k or variance");
  if (variance) return PcaSelection::VarianceThreshold(*variance);
  if (!k) Fail(ErrorCode::kUsage, "one of k or variance is required");
  return PcaSelection::FixedK(*k);
}

Eigen::MatrixXd ApplyRows(const Eigen::MatrixXd &data, const std::function<Eigen::VectorXd(const Eigen::VectorXd &)> &f) {
  Eigen::MatrixXd out;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    Eigen::VectorXd v = f(data.row(i).transpose());
    if (i == 0) out.resize(data.rows(), v.size());
    out.row(i) = v.transpose();
  }
  return out;
}

py::dict EerDict(const EerResult &r) {
  py::dict d;
  d["eer"] = r.eer;
  d["threshold"] = r.threshold;
  d["num_targets"] = r.num_targets;
  d["num_nontargets"] = r.num_nontargets;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Utterance embeddings, scoring backends, trials and an i-vector baseline.";
#ifdef UTTEMB_VERSION
  m.attr("__version__") = UTTEMB_VERSION;
#else
  m.attr("__version__") = "0.1.0";
#endif

  g_error_type = PyErr_NewException("uttemb.UttembError", PyExc_RuntimeError, nullptr);
  m.attr("UttembError") = py::handle(g_error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error &e) {
      py::object inst = py::reinterpret_steal<py::object>(
          PyObject_CallFunction(g_error_type, "s", e.what()));
      inst.attr("code") = std::string(ErrorCodeName(e.code()));
      inst.attr("exit_status") = ExitStatus(e.code());
      PyErr_SetObject(g_error_type, inst.ptr());
    }
  });

  // features
  py::class_<Labels>(m, "Labels")
      .def(py::init<>())
      .def(py::init([](std::string s, std::string c, std::string n, std::string g) {
             return Labels{std::move(s), std::move(c), std::move(n), std::move(g)};
           }),
           py::arg("speaker") = "", py::arg("condition") = "", py::arg("noise") = "", py::arg("gender") = "")
      .def_readwrite("speaker", &Labels::speaker)
      .def_readwrite("condition", &Labels::condition)
      .def_readwrite("noise", &Labels::noise)
      .def_readwrite("gender", &Labels::gender)
      .def("get", [](const Labels &l, const std::string &kind) { return l.Get(ParseLabelKind(kind)); })
      .def("__repr__", [](const Labels &l) {
        return "Labels(speaker='" + l.speaker + "', condition='" + l.condition + "', noise='" + l.noise +
               "', gender='" + l.gender + "')";
      });

  py::class_<UtteranceFeatures>(m, "Utterance")
      .def(py::init([](std::string id, Eigen::MatrixXd matrix, Labels labels) {
             return UtteranceFeatures{std::move(id), std::move(matrix), std::move(labels)};
           }),
           py::arg("utt_id"), py::arg("matrix"), py::arg("labels") = Labels{})
      .def_readwrite("utt_id", &UtteranceFeatures::utt_id)
      .def_readwrite("matrix", &UtteranceFeatures::matrix)
      .def_readwrite("labels", &UtteranceFeatures::labels);

  m.def("load_corpus", &LoadCorpus, py::arg("path"));
  m.def("save_corpus", &SaveCorpus, py::arg("corpus"), py::arg("path"));
  m.def("cmvn", &Cmvn, py::arg("utt"));
  m.def(
      "synth_corpus",
      [](std::size_t speakers, std::size_t utts, std::size_t conditions, std::size_t noises, std::size_t genders,
         std::size_t frames, std::size_t dim, double speaker_strength, double condition_strength,
         double noise_strength, double gender_strength, std::uint64_t seed, std::size_t first_speaker) {
        SynthSpec s;
        s.speakers = speakers;
        s.utts_per_speaker = utts;
        s.conditions = conditions;
        s.noises = noises;
        s.genders = genders;
        s.frames = frames;
        s.dim = dim;
        s.speaker_strength = speaker_strength;
        s.condition_strength = condition_strength;
        s.noise_strength = noise_strength;
        s.gender_strength = gender_strength;
        s.seed = seed;
        s.first_speaker = first_speaker;
        return SynthCorpus(s);
      },
      py::arg("speakers") = 8, py::arg("utts_per_speaker") = 10, py::arg("conditions") = 14,
      py::arg("noises") = 7, py::arg("genders") = 2, py::arg("frames") = 50, py::arg("dim") = 40,
      py::arg("speaker_strength") = 1.0, py::arg("condition_strength") = 1.0, py::arg("noise_strength") = 1.0,
      py::arg("gender_strength") = 1.0, py::arg("seed") = 0, py::arg("first_speaker") = 0);

  // netio
  py::class_<NetworkModel>(m, "NetworkModel")
      .def_readonly("name", &NetworkModel::name)
      .def_property_readonly("num_layers", [](const NetworkModel &n) { return n.layers.size(); })
      .def_property_readonly("tap_names", [](const NetworkModel &n) {
        std::vector<std::string> names;
        for (std::size_t t = 0; t < n.tap_points.size(); ++t) names.push_back(n.TapName(t));
        return names;
      })
      .def_property_readonly("context", &ModelContext)
      .def("validate", [](const NetworkModel &n) {
        std::vector<std::string> out;
        for (const auto &v : ValidateModel(n)) out.push_back(v.message);
        return out;
      });
  m.def("load_model", &LoadModel, py::arg("path"));
  m.def("save_model", &SaveModel, py::arg("model"), py::arg("path"));
  m.def("init_model_from_arch", &InitModelFromArch, py::arg("arch_path"), py::arg("seed"),
        py::arg("bias_scale") = 0.1);

  // embed
  py::class_<SourceSpan>(m, "SourceSpan")
      .def_readonly("name", &SourceSpan::name)
      .def_readonly("start", &SourceSpan::start)
      .def_readonly("length", &SourceSpan::length)
      .def("__repr__", [](const SourceSpan &s) {
        return "SourceSpan('" + s.name + "', " + std::to_string(s.start) + ", " + std::to_string(s.length) + ")";
      });
  py::class_<EmbeddingRecord>(m, "EmbeddingRecord")
      .def_readwrite("utt_id", &EmbeddingRecord::utt_id)
      .def_readwrite("source", &EmbeddingRecord::source)
      .def_readwrite("vector", &EmbeddingRecord::vector)
      .def_readwrite("labels", &EmbeddingRecord::labels);
  py::class_<EmbeddingArchive>(m, "EmbeddingArchive")
      .def_readonly("source", &EmbeddingArchive::source)
      .def_readonly("dim", &EmbeddingArchive::dim)
      .def_readonly("spans", &EmbeddingArchive::spans)
      .def_readonly("records", &EmbeddingArchive::records)
      .def("matrix", [](const EmbeddingArchive &a) { return StackRecords(a.records); })
      .def("labels", [](const EmbeddingArchive &a, const std::string &kind) {
        const LabelKind k = ParseLabelKind(kind);
        std::vector<std::string> out;
        for (const auto &r : a.records) out.push_back(r.labels.Get(k));
        return out;
      });
  m.def("load_embeddings", &LoadEmbeddings, py::arg("path"));
  m.def("save_embeddings", &SaveEmbeddings, py::arg("archive"), py::arg("path"));
  m.def("whole_model_spans", &WholeModelSpans, py::arg("model"));
  m.def("whole_model_embedding", &WholeModelEmbedding, py::arg("utt"), py::arg("model"));
  m.def("layer_embedding", &LayerEmbedding, py::arg("utt"), py::arg("model"), py::arg("source"));
  m.def("input_embedding", &InputEmbedding, py::arg("utt"), py::arg("left") = 0, py::arg("right") = 0);
  m.def("extract_embeddings", &ExtractEmbeddings, py::arg("corpus"), py::arg("model"),
        py::arg("source") = kWholeModelSource, py::arg("cmvn") = true, py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());

  py::class_<PCAModel>(m, "PCAModel")
      .def_readonly("mean", &PCAModel::mean)
      .def_readonly("components", &PCAModel::components)
      .def_readonly("eigenvalues", &PCAModel::eigenvalues)
      .def_readonly("source_offsets", &PCAModel::source_offsets)
      .def_property_readonly("num_components", &PCAModel::NumComponents)
      .def("apply", [](const PCAModel &p, const Eigen::MatrixXd &data) {
        return ApplyRows(data, [&](const Eigen::VectorXd &v) { return ApplyPca(p, v); });
      });
  m.def(
      "train_pca",
      [](const Eigen::MatrixXd &data, std::optional<std::size_t> k, std::optional<double> variance,
         std::vector<SourceSpan> spans, std::size_t jobs) {
        return TrainPca(data, Selection(k, variance), std::move(spans), jobs);
      },
      py::arg("data"), py::arg("k") = py::none(), py::arg("variance") = py::none(),
      py::arg("spans") = std::vector<SourceSpan>{}, py::arg("jobs") = 1);
  m.def("component_attribution", &ComponentAttribution, py::arg("pca"));
  m.def("save_pca", &SavePca, py::arg("pca"), py::arg("path"));
  m.def("load_pca", &LoadPca, py::arg("path"));

  // backends
  m.def("length_normalize", &LengthNormalize, py::arg("v"));
  m.def("cosine_score", &CosineScore, py::arg("enroll"), py::arg("eval"), py::arg("global_mean"));
  py::class_<LDAModel>(m, "LDAModel")
      .def_readonly("mean", &LDAModel::mean)
      .def_readonly("transform", &LDAModel::transform)
      .def("apply", [](const LDAModel &l, const Eigen::MatrixXd &data) {
        return ApplyRows(data, [&](const Eigen::VectorXd &v) { return ApplyLda(l, v); });
      });
  m.def(
      "train_lda",
      [](const Eigen::MatrixXd &data, const std::vector<std::string> &labels, std::size_t dim, double reg) {
        return TrainLda(Labeled(data, labels), dim, reg);
      },
      py::arg("data"), py::arg("labels"), py::arg("dim"), py::arg("regularization") = kLdaWithinRegularization);
  m.def("save_lda", &SaveLda, py::arg("lda"), py::arg("path"));
  m.def("load_lda", &LoadLda, py::arg("path"));

  py::class_<PLDAModel>(m, "PLDAModel")
      .def(py::init<Eigen::VectorXd, Eigen::MatrixXd, Eigen::MatrixXd>(), py::arg("mean"),
           py::arg("between_cov"), py::arg("within_cov"))
      .def_property_readonly("mean", &PLDAModel::mean)
      .def_property_readonly("between_cov", &PLDAModel::between_cov)
      .def_property_readonly("within_cov", &PLDAModel::within_cov)
      .def("score", &PLDAModel::Score, py::arg("enroll"), py::arg("eval"));
  m.def(
      "train_plda",
      [](const Eigen::MatrixXd &data, const std::vector<std::string> &labels, std::size_t iters) {
        PldaTrainOptions opts;
        opts.iters = iters;
        auto r = TrainPlda(Labeled(data, labels), opts);
        return py::make_tuple(r.model, r.log_likelihood);
      },
      py::arg("data"), py::arg("labels"), py::arg("iters") = 10);
  m.def("save_plda", &SavePlda, py::arg("plda"), py::arg("path"));
  m.def("load_plda", &LoadPlda, py::arg("path"));

  // trials
  m.def(
      "make_splits",
      [](const std::vector<std::string> &ids, const std::vector<std::string> &speakers, std::uint64_t seed) {
        if (ids.size() != speakers.size()) Fail(ErrorCode::kDimensionMismatch, "ids and speakers differ in length");
        std::vector<LabeledUtt> utts;
        for (std::size_t i = 0; i < ids.size(); ++i) utts.push_back({ids[i], speakers[i]});
        Split s = MakeSplits(utts, seed);
        return py::make_tuple(s.enroll, s.eval);
      },
      py::arg("utt_ids"), py::arg("speakers"), py::arg("seed"));
  m.def(
      "make_trials",
      [](const std::vector<EmbeddingRecord> &enroll, const std::vector<EmbeddingRecord> &eval,
         const std::string &key, double proportion, std::uint64_t seed) {
        auto trials = MakeTrials(AverageEnrollment(enroll, ParseLabelKind(key)), eval, proportion, seed);
        std::vector<std::tuple<std::string, std::string, bool>> out;
        for (const auto &t : trials.trials) out.emplace_back(t.enroll_key, t.eval_utt_id, t.is_target);
        return out;
      },
      py::arg("enroll"), py::arg("eval"), py::arg("key") = "speaker", py::arg("target_proportion") = 0.5,
      py::arg("seed") = 0);
  m.def(
      "compute_eer",
      [](const std::vector<double> &scores, const std::vector<bool> &is_target) {
        if (scores.size() != is_target.size())
          Fail(ErrorCode::kDimensionMismatch, "scores and is_target differ in length");
        std::vector<ScoredTrial> st;
        for (std::size_t i = 0; i < scores.size(); ++i) st.push_back({scores[i], is_target[i]});
        return EerDict(ComputeEer(st));
      },
      py::arg("scores"), py::arg("is_target"));

  // ivector
  py::class_<GMM>(m, "GMM")
      .def_property_readonly("weights", &GMM::weights)
      .def_property_readonly("means", &GMM::means)
      .def_property_readonly("covariances", &GMM::covariances)
      .def("posteriors", [](const GMM &g, const Eigen::VectorXd &x) { return g.Posteriors(x); });
  m.def(
      "train_ubm",
      [](const Eigen::MatrixXd &frames, std::size_t components, std::size_t iters, std::uint64_t seed) {
        UbmTrainOptions o;
        o.components = components;
        o.iters = iters;
        o.seed = seed;
        UbmTrainResult r;
        {
          py::gil_scoped_release release;
          r = TrainUbm(frames, o);
        }
        return py::make_tuple(r.gmm, r.log_likelihood);
      },
      py::arg("frames"), py::arg("components") = 16, py::arg("iters") = 10, py::arg("seed") = 0);
  m.def("pool_frames", &PoolFrames, py::arg("corpus"));
  py::class_<BaumWelchStats>(m, "BaumWelchStats")
      .def_readonly("utt_id", &BaumWelchStats::utt_id)
      .def_readonly("labels", &BaumWelchStats::labels)
      .def_readonly("zeroth", &BaumWelchStats::zeroth)
      .def_readonly("first", &BaumWelchStats::first);
  m.def(
      "accumulate_stats",
      [](const GMM &ubm, const std::vector<UtteranceFeatures> &corpus, std::size_t jobs) {
        return AccumulateStats(ubm, corpus, jobs);
      },
      py::arg("ubm"), py::arg("corpus"), py::arg("jobs") = 1, py::call_guard<py::gil_scoped_release>());
  py::class_<TVModel>(m, "TVModel")
      .def_readonly("ubm", &TVModel::ubm)
      .def_readonly("matrix", &TVModel::matrix)
      .def_property_readonly("rank", &TVModel::Rank);
  m.def(
      "train_tv",
      [](const GMM &ubm, const std::vector<BaumWelchStats> &stats, std::size_t rank, std::size_t iters,
         std::uint64_t seed) {
        TvTrainOptions o;
        o.rank = rank;
        o.iters = iters;
        o.seed = seed;
        TvTrainResult r;
        {
          py::gil_scoped_release release;
          r = TrainTv(ubm, stats, o);
        }
        return py::make_tuple(r.model, r.objective);
      },
      py::arg("ubm"), py::arg("stats"), py::arg("rank") = 20, py::arg("iters") = 10, py::arg("seed") = 0);
  m.def("extract_ivectors", &ExtractIvectors, py::arg("tv"), py::arg("stats"), py::arg("jobs") = 1);
}
