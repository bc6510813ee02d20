// src/netio.cpp

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

#include "uttemb/netio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "uttemb/binary_io.hpp"

namespace uttemb {

namespace {

std::vector<std::size_t> ParseCounts(const std::string &text, std::size_t expected) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
      Fail(ErrorCode::kMalformedHeader, "bad count list '" + text + "'");
    out.push_back(std::stoull(item));
  }
  if (expected != 0 && out.size() != expected)
    Fail(ErrorCode::kMalformedHeader, "expected " + std::to_string(expected) +
                                          " values in '" + text + "'");
  return out;
}

std::string JoinCounts(std::initializer_list<std::size_t> values) {
  std::string out;
  for (std::size_t v : values) {
    if (!out.empty()) out += ',';
    out += std::to_string(v);
  }
  return out;
}

// Parses "kind k1=v1 k2=v2 ..." into a layer with zero weights.
LayerSpec ParseLayer(const std::string &descriptor) {
  std::stringstream ss(descriptor);
  std::string kind;
  ss >> kind;
  std::map<std::string, std::string> kv;
  std::string token;
  while (ss >> token) {
    auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0)
      Fail(ErrorCode::kMalformedHeader, "bad layer token '" + token + "'");
    kv[token.substr(0, eq)] = token.substr(eq + 1);
  }
  auto take = [&](const std::string &key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end())
      Fail(ErrorCode::kMalformedHeader,
           "layer '" + kind + "' is missing '" + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto count = [&](const std::string &key) {
    return ParseCounts(take(key), 1)[0];
  };

  LayerSpec layer;
  if (kv.count("name")) layer.name = take("name");
  if (kind == "dense") {
    std::size_t in = count("in"), out = count("out");
    DenseLayer d;
    d.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out),
                                      static_cast<Eigen::Index>(in));
    d.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    layer.op = std::move(d);
  } else if (kind == "conv") {
    Conv2DLayer c;
    c.in_channels = count("in");
    c.out_channels = count("out");
    if (kv.count("kernel")) {
      auto k = ParseCounts(take("kernel"), 0);
      bool ok = (k.size() == 1 && k[0] == 3) ||
                (k.size() == 2 && k[0] == 3 && k[1] == 3);
      if (!ok) Fail(ErrorCode::kMalformedHeader, "conv kernels must be 3x3");
    }
    c.kernel.assign(c.out_channels * c.in_channels * 9, 0.0);
    c.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.out_channels));
    layer.op = std::move(c);
  } else if (kind == "maxpool") {
    auto w = ParseCounts(take("window"), 2);
    auto s = ParseCounts(take("stride"), 2);
    layer.op = MaxPoolLayer{w[0], w[1], s[0], s[1]};
  } else if (kind == "relu") {
    layer.op = ReLULayer{};
  } else {
    Fail(ErrorCode::kMalformedHeader, "unknown layer kind '" + kind + "'");
  }
  if (!kv.empty())
    Fail(ErrorCode::kMalformedHeader,
         "unknown key '" + kv.begin()->first + "' on layer '" + kind + "'");
  return layer;
}

std::string FormatLayer(const LayerSpec &layer) {
  std::string out;
  switch (layer.kind()) {
    case LayerKind::kDense: {
      const auto &d = std::get<DenseLayer>(layer.op);
      out = "dense in=" + std::to_string(d.InDim()) +
            " out=" + std::to_string(d.OutDim());
      break;
    }
    case LayerKind::kConv2D: {
      const auto &c = std::get<Conv2DLayer>(layer.op);
      out = "conv in=" + std::to_string(c.in_channels) +
            " out=" + std::to_string(c.out_channels) + " kernel=3,3";
      break;
    }
    case LayerKind::kMaxPool: {
      const auto &p = std::get<MaxPoolLayer>(layer.op);
      out = "maxpool window=" + JoinCounts({p.window_time, p.window_freq}) +
            " stride=" + JoinCounts({p.stride_time, p.stride_freq});
      break;
    }
    case LayerKind::kReLU:
      out = "relu";
      break;
  }
  if (!layer.name.empty()) out += " name=" + layer.name;
  return out;
}

bool AllFinite(const double *data, std::size_t n) {
  return std::all_of(data, data + n, [](double v) { return std::isfinite(v); });
}

// Output shape of one layer; appends to `violations` and returns a best-effort
// shape when the input does not fit.
TensorShape ChainLayer(const LayerSpec &layer, std::size_t index,
                       const TensorShape &in, std::vector<Violation> *violations) {
  auto violate = [&](const std::string &msg) {
    violations->push_back({index, ErrorCode::kShapeChain,
                           "layer " + std::to_string(index) + ": " + msg});
  };
  switch (layer.kind()) {
    case LayerKind::kDense: {
      const auto &d = std::get<DenseLayer>(layer.op);
      if (d.InDim() != in.Size())
        violate("dense in_dim " + std::to_string(d.InDim()) +
                " does not match incoming " + ToString(in));
      return TensorShape::Flat(d.OutDim());
    }
    case LayerKind::kConv2D: {
      const auto &c = std::get<Conv2DLayer>(layer.op);
      if (in.flat) {
        violate("conv layer cannot follow a flat activation");
        return TensorShape::Map(c.out_channels, 1, 1);
      }
      if (c.in_channels != in.channels)
        violate("conv in_channels " + std::to_string(c.in_channels) +
                " does not match incoming " + ToString(in));
      return TensorShape::Map(c.out_channels, in.time, in.freq);
    }
    case LayerKind::kMaxPool: {
      const auto &p = std::get<MaxPoolLayer>(layer.op);
      if (in.flat) {
        violate("maxpool cannot follow a flat activation");
        return in;
      }
      if (p.window_time == 0 || p.window_freq == 0 || p.stride_time == 0 ||
          p.stride_freq == 0) {
        violate("maxpool window and stride must be positive");
        return in;
      }
      if (p.window_time > in.time || p.window_freq > in.freq) {
        violate("maxpool window larger than incoming " + ToString(in));
        return in;
      }
      return TensorShape::Map(in.channels,
                              (in.time - p.window_time) / p.stride_time + 1,
                              (in.freq - p.window_freq) / p.stride_freq + 1);
    }
    case LayerKind::kReLU:
      return in;
  }
  return in;
}

Eigen::MatrixXd ApplyConv(const Conv2DLayer &conv, const TensorShape &in_shape,
                          const Eigen::MatrixXd &in) {
  using RowMat =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto ci = static_cast<Eigen::Index>(conv.in_channels);
  const auto co = static_cast<Eigen::Index>(conv.out_channels);
  const auto nt = static_cast<Eigen::Index>(in_shape.time);
  const auto nf = static_cast<Eigen::Index>(in_shape.freq);
  const Eigen::Index plane = nt * nf;
  Eigen::Map<const RowMat> kernel(conv.kernel.data(), co, ci * 9);

  Eigen::MatrixXd out(co * plane, in.cols());
  RowMat cols(ci * 9, plane);
  RowMat result(co, plane);
  for (Eigen::Index frame = 0; frame < in.cols(); ++frame) {
    const double *x = in.col(frame).data();
    cols.setZero();
    for (Eigen::Index c = 0; c < ci; ++c)
      for (Eigen::Index dt = 0; dt < 3; ++dt)
        for (Eigen::Index df = 0; df < 3; ++df) {
          double *row = cols.row((c * 3 + dt) * 3 + df).data();
          for (Eigen::Index t = 0; t < nt; ++t) {
            Eigen::Index st = t + dt - 1;
            if (st < 0 || st >= nt) continue;
            for (Eigen::Index f = 0; f < nf; ++f) {
              Eigen::Index sf = f + df - 1;
              if (sf < 0 || sf >= nf) continue;
              row[t * nf + f] = x[(c * nt + st) * nf + sf];
            }
          }
        }
    result.noalias() = kernel * cols;
    result.colwise() += conv.bias;
    out.col(frame) = Eigen::Map<const Eigen::VectorXd>(result.data(), co * plane);
  }
  return out;
}

Eigen::MatrixXd ApplyMaxPool(const MaxPoolLayer &pool, const TensorShape &in_shape,
                             const Eigen::MatrixXd &in) {
  const std::size_t ot = (in_shape.time - pool.window_time) / pool.stride_time + 1;
  const std::size_t of = (in_shape.freq - pool.window_freq) / pool.stride_freq + 1;
  const std::size_t nc = in_shape.channels, nt = in_shape.time, nf = in_shape.freq;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(nc * ot * of), in.cols());
  for (Eigen::Index frame = 0; frame < in.cols(); ++frame) {
    const double *x = in.col(frame).data();
    double *y = out.col(frame).data();
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t t = 0; t < ot; ++t)
        for (std::size_t f = 0; f < of; ++f) {
          double best = -std::numeric_limits<double>::infinity();
          for (std::size_t wt = 0; wt < pool.window_time; ++wt)
            for (std::size_t wf = 0; wf < pool.window_freq; ++wf) {
              std::size_t st = t * pool.stride_time + wt;
              std::size_t sf = f * pool.stride_freq + wf;
              best = std::max(best, x[(c * nt + st) * nf + sf]);
            }
          y[(c * ot + t) * of + f] = best;
        }
  }
  return out;
}

}  // namespace

std::string ToString(const TensorShape &shape) {
  if (shape.flat) return "[" + std::to_string(shape.channels) + "]";
  return "[" + std::to_string(shape.channels) + "x" + std::to_string(shape.time) +
         "x" + std::to_string(shape.freq) + "]";
}

std::string NetworkModel::LayerName(std::size_t layer) const {
  if (layer < layers.size() && !layers[layer].name.empty())
    return layers[layer].name;
  return "layer" + std::to_string(layer);
}

std::string NetworkModel::TapName(std::size_t tap) const {
  return LayerName(tap_points.at(tap));
}

std::vector<Violation> ValidateModel(const NetworkModel &model) {
  std::vector<Violation> violations;
  if (model.input_shape.flat || model.input_shape.Size() == 0)
    violations.push_back({std::nullopt, ErrorCode::kMalformedHeader,
                          "input shape must be a non-empty map"});
  TensorShape shape = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec &layer = model.layers[i];
    const std::string where = "layer " + std::to_string(i) + ": ";
    if (layer.kind() == LayerKind::kDense) {
      const auto &d = std::get<DenseLayer>(layer.op);
      if (static_cast<std::size_t>(d.bias.size()) != d.OutDim())
        violations.push_back({i, ErrorCode::kShapeChain, where + "bias size mismatch"});
      if (!AllFinite(d.weights.data(), d.weights.size()) ||
          !AllFinite(d.bias.data(), d.bias.size()))
        violations.push_back({i, ErrorCode::kNonFinite, where + "non-finite weight"});
    } else if (layer.kind() == LayerKind::kConv2D) {
      const auto &c = std::get<Conv2DLayer>(layer.op);
      if (c.kernel.size() != c.in_channels * c.out_channels * 9)
        violations.push_back({i, ErrorCode::kShapeChain,
                              where + "kernel is not 3x3 per channel pair"});
      if (static_cast<std::size_t>(c.bias.size()) != c.out_channels)
        violations.push_back({i, ErrorCode::kShapeChain, where + "bias size mismatch"});
      if (!AllFinite(c.kernel.data(), c.kernel.size()) ||
          !AllFinite(c.bias.data(), c.bias.size()))
        violations.push_back({i, ErrorCode::kNonFinite, where + "non-finite weight"});
    }
    shape = ChainLayer(layer, i, shape, &violations);
  }
  for (std::size_t k = 0; k < model.tap_points.size(); ++k) {
    std::size_t idx = model.tap_points[k];
    if (idx >= model.layers.size()) {
      violations.push_back({idx, ErrorCode::kMalformedHeader,
                            "tap point " + std::to_string(idx) + " out of range"});
      continue;
    }
    LayerKind kind = model.layers[idx].kind();
    if (kind != LayerKind::kDense && kind != LayerKind::kConv2D)
      violations.push_back({idx, ErrorCode::kMalformedHeader,
                            "tap point " + std::to_string(idx) +
                                " is not a dense or conv layer"});
    if (k > 0 && idx <= model.tap_points[k - 1])
      violations.push_back({idx, ErrorCode::kMalformedHeader,
                            "tap points not strictly increasing at " +
                                std::to_string(idx)});
  }
  return violations;
}

std::vector<TensorShape> LayerOutputShapes(const NetworkModel &model) {
  std::vector<TensorShape> shapes;
  std::vector<Violation> violations;
  TensorShape shape = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    shape = ChainLayer(model.layers[i], i, shape, &violations);
    if (!violations.empty()) Fail(ErrorCode::kShapeChain, violations.front().message);
    shapes.push_back(shape);
  }
  return shapes;
}

NetworkModel ParseModelHeader(const std::string &text) {
  NetworkModel model;
  bool have_input = false, have_taps = false;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      Fail(ErrorCode::kMalformedHeader, "header line without '=': " + line);
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "name") {
      model.name = value;
    } else if (key == "input_shape") {
      auto v = ParseCounts(value, 3);
      model.input_shape = TensorShape::Map(v[2], v[0], v[1]);
      have_input = true;
    } else if (key == "layer") {
      model.layers.push_back(ParseLayer(value));
    } else if (key == "tap_points") {
      model.tap_points = value.empty() ? std::vector<std::size_t>{}
                                       : ParseCounts(value, 0);
      have_taps = true;
    } else {
      Fail(ErrorCode::kMalformedHeader, "unknown header key '" + key + "'");
    }
  }
  if (!have_input) Fail(ErrorCode::kMalformedHeader, "header lacks input_shape");
  if (!have_taps) Fail(ErrorCode::kMalformedHeader, "header lacks tap_points");
  if (model.layers.empty()) Fail(ErrorCode::kMalformedHeader, "model has no layers");
  return model;
}

std::string FormatModelHeader(const NetworkModel &model) {
  std::string out;
  out += "name=" + model.name + "\n";
  out += "input_shape=" +
         JoinCounts({model.input_shape.time, model.input_shape.freq,
                     model.input_shape.channels}) + "\n";
  for (const auto &layer : model.layers) out += "layer=" + FormatLayer(layer) + "\n";
  out += "tap_points=";
  for (std::size_t k = 0; k < model.tap_points.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(model.tap_points[k]);
  }
  out += "\n\n";
  return out;
}

void SaveModel(const NetworkModel &model, const std::string &path) {
  BinaryWriter out(path);
  out.WriteMagic("NNM1");
  out.WriteString(FormatModelHeader(model));
  for (const auto &layer : model.layers) {
    if (layer.kind() == LayerKind::kDense) {
      const auto &d = std::get<DenseLayer>(layer.op);
      out.WriteMatrix(d.weights);
      out.WriteVector(d.bias);
    } else if (layer.kind() == LayerKind::kConv2D) {
      const auto &c = std::get<Conv2DLayer>(layer.op);
      out.WriteDoubles(c.kernel);
      out.WriteVector(c.bias);
    }
  }
  out.Close();
}

NetworkModel LoadModel(const std::string &path) {
  BinaryReader in(path);
  in.ExpectMagic("NNM1", ErrorCode::kMalformedHeader);
  std::string header;
  try {
    header = in.ReadString();
  } catch (const Error &) {
    Fail(ErrorCode::kMalformedHeader, path + ": truncated header");
  }
  if (header.size() < 2 || header.substr(header.size() - 2) != "\n\n")
    Fail(ErrorCode::kMalformedHeader, path + ": header not closed by a blank line");
  NetworkModel model = ParseModelHeader(header);
  for (auto &layer : model.layers) {
    if (layer.kind() == LayerKind::kDense) {
      auto &d = std::get<DenseLayer>(layer.op);
      d.weights = in.ReadMatrix(d.OutDim(), d.InDim());
      d.bias = in.ReadVector(d.OutDim());
    } else if (layer.kind() == LayerKind::kConv2D) {
      auto &c = std::get<Conv2DLayer>(layer.op);
      c.kernel = in.ReadDoubles(c.kernel.size());
      c.bias = in.ReadVector(c.out_channels);
    }
  }
  if (!in.AtEnd()) Fail(ErrorCode::kMalformedArchive, path + ": trailing bytes");
  auto violations = ValidateModel(model);
  if (!violations.empty())
    Fail(violations.front().code, path + ": " + violations.front().message);
  return model;
}

void InitRandomWeights(NetworkModel &model, std::uint64_t seed, double bias_scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto &layer : model.layers) {
    if (layer.kind() == LayerKind::kDense) {
      auto &d = std::get<DenseLayer>(layer.op);
      const double scale = std::sqrt(2.0 / static_cast<double>(d.InDim()));
      for (Eigen::Index r = 0; r < d.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < d.weights.cols(); ++c)
          d.weights(r, c) = scale * normal(rng);
      for (Eigen::Index r = 0; r < d.bias.size(); ++r) d.bias(r) = bias_scale * normal(rng);
    } else if (layer.kind() == LayerKind::kConv2D) {
      auto &c = std::get<Conv2DLayer>(layer.op);
      const double scale = std::sqrt(2.0 / static_cast<double>(c.in_channels * 9));
      for (double &w : c.kernel) w = scale * normal(rng);
      for (Eigen::Index r = 0; r < c.bias.size(); ++r) c.bias(r) = bias_scale * normal(rng);
    }
  }
}

NetworkModel InitModelFromArch(const std::string &arch_path, std::uint64_t seed,
                               double bias_scale) {
  std::ifstream in(arch_path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + arch_path);
  std::stringstream ss;
  ss << in.rdbuf();
  NetworkModel model = ParseModelHeader(ss.str());
  InitRandomWeights(model, seed, bias_scale);
  auto violations = ValidateModel(model);
  if (!violations.empty())
    Fail(violations.front().code, arch_path + ": " + violations.front().message);
  return model;
}

Eigen::MatrixXd ApplyLayer(const LayerSpec &layer, const TensorShape &in_shape,
                           const Eigen::MatrixXd &in) {
  switch (layer.kind()) {
    case LayerKind::kDense: {
      const auto &d = std::get<DenseLayer>(layer.op);
      Eigen::MatrixXd out = d.weights * in;
      out.colwise() += d.bias;
      return out;
    }
    case LayerKind::kConv2D:
      return ApplyConv(std::get<Conv2DLayer>(layer.op), in_shape, in);
    case LayerKind::kMaxPool:
      return ApplyMaxPool(std::get<MaxPoolLayer>(layer.op), in_shape, in);
    case LayerKind::kReLU:
      return in.cwiseMax(0.0);
  }
  return in;
}

ForwardResult Forward(const NetworkModel &model, const SplicedFrames &input) {
  const TensorShape &shape = model.input_shape;
  if (shape.channels != 1 || input.context != shape.time ||
      input.freq != shape.freq ||
      static_cast<std::size_t>(input.frames.rows()) != shape.Size())
    Fail(ErrorCode::kDimensionMismatch,
         "input frames " + std::to_string(input.context) + "x" +
             std::to_string(input.freq) + " do not match model input " +
             ToString(shape));
  std::vector<TensorShape> shapes = LayerOutputShapes(model);
  ForwardResult result;
  Eigen::MatrixXd act = input.frames;
  TensorShape act_shape = shape;
  std::size_t next_tap = 0;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    act = ApplyLayer(model.layers[i], act_shape, act);
    act_shape = shapes[i];
    if (next_tap < model.tap_points.size() && model.tap_points[next_tap] == i) {
      result.taps.push_back(act);
      result.tap_shapes.push_back(act_shape);
      ++next_tap;
    }
  }
  result.output = std::move(act);
  result.output_shape = act_shape;
  return result;
}

}  // namespace uttemb
