// include/uttemb/netio.hpp

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

#ifndef UTTEMB_NETIO_HPP_
#define UTTEMB_NETIO_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "uttemb/error.hpp"
#include "uttemb/features.hpp"

namespace uttemb {

enum class LayerKind { kDense, kConv2D, kMaxPool, kReLU };

/// Shape of one frame's activation. Maps are stored channel-major, then time,
/// then frequency. A flat shape is a plain vector of `channels` values.
struct TensorShape {
  std::size_t channels = 1;
  std::size_t time = 1;
  std::size_t freq = 1;
  bool flat = false;

  static TensorShape Flat(std::size_t n) { return {n, 1, 1, true}; }
  static TensorShape Map(std::size_t c, std::size_t t, std::size_t f) {
    return {c, t, f, false};
  }
  std::size_t Size() const { return channels * time * freq; }
  bool operator==(const TensorShape &) const = default;
};

std::string ToString(const TensorShape &shape);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Eigen::VectorXd bias;     // out_dim

  std::size_t InDim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t OutDim() const { return static_cast<std::size_t>(weights.rows()); }
};

/// 3x3 convolution, stride 1, zero "same" padding over (time, freq).
struct Conv2DLayer {
  static constexpr std::size_t kKernel = 3;

  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::vector<double> kernel;  // [out][in][3][3]
  Eigen::VectorXd bias;        // out_channels

  double &At(std::size_t o, std::size_t i, std::size_t dt, std::size_t df) {
    return kernel[((o * in_channels + i) * kKernel + dt) * kKernel + df];
  }
  double At(std::size_t o, std::size_t i, std::size_t dt, std::size_t df) const {
    return kernel[((o * in_channels + i) * kKernel + dt) * kKernel + df];
  }
};

struct MaxPoolLayer {
  std::size_t window_time = 1;
  std::size_t window_freq = 1;
  std::size_t stride_time = 1;
  std::size_t stride_freq = 1;
};

struct ReLULayer {};

struct LayerSpec {
  std::string name;
  std::variant<DenseLayer, Conv2DLayer, MaxPoolLayer, ReLULayer> op;

  LayerKind kind() const { return static_cast<LayerKind>(op.index()); }
};

struct NetworkModel {
  std::string name;
  TensorShape input_shape;  // Map(channels, context_frames, freq_bins)
  std::vector<LayerSpec> layers;
  std::vector<std::size_t> tap_points;

  /// Name of the layer behind a tap: its declared name or "layer<i>".
  std::string TapName(std::size_t tap) const;
  std::string LayerName(std::size_t layer) const;
};

struct Violation {
  std::optional<std::size_t> layer;
  ErrorCode code;
  std::string message;
};

/// Lists every invariant violation; empty iff the model is well formed.
std::vector<Violation> ValidateModel(const NetworkModel &model);

/// Per-layer output shapes. Throws kShapeChain if the layers do not chain.
std::vector<TensorShape> LayerOutputShapes(const NetworkModel &model);

/// Model file: "NNM1", u32 header length, key=value text header closed by a
/// blank line, then for each Dense/Conv2D layer its weights and bias as
/// count-prefixed float64 payloads (dense weights row-major out x in).
NetworkModel LoadModel(const std::string &path);
void SaveModel(const NetworkModel &model, const std::string &path);

/// Parses the text header (also the format of architecture config files).
/// Weight tensors are allocated and zero-filled.
NetworkModel ParseModelHeader(const std::string &text);
std::string FormatModelHeader(const NetworkModel &model);

/// Builds a model from an architecture config file with He-scaled Gaussian
/// weights drawn from `seed`; biases are drawn with stddev `bias_scale`.
NetworkModel InitModelFromArch(const std::string &arch_path, std::uint64_t seed,
                               double bias_scale = 0.1);
void InitRandomWeights(NetworkModel &model, std::uint64_t seed,
                       double bias_scale = 0.1);

struct ForwardResult {
  std::vector<Eigen::MatrixXd> taps;  // per tap point: Size() x T
  std::vector<TensorShape> tap_shapes;
  Eigen::MatrixXd output;             // final post-activation, Size() x T
  TensorShape output_shape;
};

/// Runs all frames through the network. Tap outputs are the affine (or
/// convolution) result of the tapped layer, before any following ReLU.
ForwardResult Forward(const NetworkModel &model, const SplicedFrames &input);

/// Applies one layer to a batch of frames (one frame per column).
Eigen::MatrixXd ApplyLayer(const LayerSpec &layer, const TensorShape &in_shape,
                           const Eigen::MatrixXd &in);

}  // namespace uttemb

#endif  // UTTEMB_NETIO_HPP_
