// Copyright 2026 The SA-DPSGD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small dense models with exact per-example gradients.
//
// Every model is a stack of dense layers. Parameters are packed layer by
// layer in ascending order; within a layer the weight matrix comes first
// (out x in, row-major) followed by the bias vector (out).
//
//   linear_regression   d -> 1, squared error (prediction - y)^2
//   softmax_regression  d -> k, cross-entropy
//   mlp                 d -> h1 -> ... -> k, hidden activation tanh or
//                       rectifier, cross-entropy

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sadp/error.hpp"
#include "sadp/rng.hpp"
#include "sadp/types.hpp"

namespace sadp {

enum class Architecture { kLinearRegression, kSoftmaxRegression, kMlp };
enum class Activation { kBoundedTanh, kRectifier };

inline std::string_view ArchitectureName(Architecture a) {
  switch (a) {
    case Architecture::kLinearRegression: return "linear_regression";
    case Architecture::kSoftmaxRegression: return "softmax_regression";
    case Architecture::kMlp: return "mlp";
  }
  return "?";
}

inline Architecture ParseArchitecture(std::string_view s) {
  if (s == "linear_regression") return Architecture::kLinearRegression;
  if (s == "softmax_regression") return Architecture::kSoftmaxRegression;
  if (s == "mlp") return Architecture::kMlp;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown architecture '" + std::string(s) + "'");
}

inline std::string_view ActivationName(Activation a) {
  return a == Activation::kBoundedTanh ? "bounded_tanh" : "rectifier";
}

inline Activation ParseActivation(std::string_view s) {
  if (s == "bounded_tanh" || s == "tanh") return Activation::kBoundedTanh;
  if (s == "rectifier" || s == "relu") return Activation::kRectifier;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown activation '" + std::string(s) + "'");
}

struct DenseLayer {
  Index in = 0;
  Index out = 0;
  Index offset = 0;  // first weight in the packed vector

  Index weight_count() const { return in * out; }
  Index bias_offset() const { return offset + weight_count(); }
  Index end() const { return bias_offset() + out; }
};

struct ModelSpec {
  Architecture architecture = Architecture::kSoftmaxRegression;
  std::vector<Index> hidden_widths;  // mlp only
  Activation activation = Activation::kBoundedTanh;
  Index input_dim = 0;
  Index output_dim = 0;

  bool is_classifier() const {
    return architecture != Architecture::kLinearRegression;
  }

  void Validate() const {
    using internal::Require;
    Require(input_dim >= 1, ErrorCode::kInvalidParameter,
            "input dimension must be >= 1");
    if (architecture == Architecture::kLinearRegression) {
      Require(output_dim == 1, ErrorCode::kInvalidParameter,
              "linear regression has a single output");
    } else {
      Require(output_dim >= 2, ErrorCode::kInvalidParameter,
              "a classifier needs at least two classes");
    }
    if (architecture == Architecture::kMlp) {
      Require(!hidden_widths.empty(), ErrorCode::kInvalidParameter,
              "mlp needs at least one hidden layer");
    }
    for (Index w : hidden_widths) {
      Require(w >= 1, ErrorCode::kInvalidParameter,
              "layer widths must be >= 1");
    }
  }

  std::vector<DenseLayer> Layers() const {
    std::vector<Index> widths{input_dim};
    if (architecture == Architecture::kMlp) {
      widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
    }
    widths.push_back(output_dim);
    std::vector<DenseLayer> layers;
    Index offset = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      DenseLayer l{widths[i], widths[i + 1], offset};
      offset = l.end();
      layers.push_back(l);
    }
    return layers;
  }

  Index ParameterCount() const { return Layers().back().end(); }
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)) for weights, zero biases.
inline ParameterVector InitParameters(const ModelSpec& spec, Rng& rng) {
  spec.Validate();
  ParameterVector w = ParameterVector::Zero(spec.ParameterCount());
  for (const DenseLayer& l : spec.Layers()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    for (Index i = 0; i < l.weight_count(); ++i) {
      w[l.offset + i] = rng.Uniform(-limit, limit);
    }
  }
  return w;
}

struct ExampleGradient {
  double loss = 0.0;
  ParameterVector gradient;
};

struct EvalResult {
  double loss = 0.0;
  std::optional<double> accuracy;  // classifiers only
};

namespace internal {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeightMap = Eigen::Map<const RowMatrix>;

inline void CheckInputs(const ModelSpec& spec, const ParameterVector& w,
                        const Eigen::Ref<const FeatureMatrix>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& y) {
  spec.Validate();
  Require(w.size() == spec.ParameterCount(), ErrorCode::kDimensionMismatch,
          "parameter vector length does not match the model");
  Require(x.cols() == spec.input_dim, ErrorCode::kDimensionMismatch,
          "feature width does not match the model input");
  Require(x.rows() == y.size(), ErrorCode::kDimensionMismatch,
          "feature and target row counts differ");
  Require(w.allFinite(), ErrorCode::kNonFiniteInput,
          "parameters contain NaN or Inf");
  if (spec.is_classifier()) {
    for (Index i = 0; i < y.size(); ++i) {
      Require(y[i] >= 0 && y[i] < static_cast<double>(spec.output_dim) &&
                  y[i] == std::floor(y[i]),
              ErrorCode::kInvalidParameter, "class label out of range");
    }
  }
}

inline ConstWeightMap Weights(const ParameterVector& w, const DenseLayer& l) {
  return ConstWeightMap(w.data() + l.offset, l.out, l.in);
}

inline void Activate(Activation act, RowMatrix& z) {
  if (act == Activation::kBoundedTanh) {
    z = z.array().tanh();
  } else {
    z = z.array().max(0.0);
  }
}

// Derivative in terms of the activation output.
inline void MultiplyDerivative(Activation act, const RowMatrix& a,
                               RowMatrix& d) {
  if (act == Activation::kBoundedTanh) {
    d.array() *= 1.0 - a.array().square();
  } else {
    d.array() *= (a.array() > 0.0).cast<double>();
  }
}

// Forward pass returning the output-layer pre-activations, and optionally
// the hidden activations (activations[0] is the input).
inline RowMatrix Forward(const ModelSpec& spec,
                         const std::vector<DenseLayer>& layers,
                         const ParameterVector& w,
                         const Eigen::Ref<const FeatureMatrix>& x,
                         std::vector<RowMatrix>* activations) {
  RowMatrix a = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    RowMatrix z = a * Weights(w, layer).transpose();
    z.rowwise() += w.segment(layer.bias_offset(), layer.out).transpose();
    if (activations != nullptr) activations->push_back(std::move(a));
    if (l + 1 < layers.size()) Activate(spec.activation, z);
    a = std::move(z);
  }
  return a;
}

// Per-example loss and d loss / d output for the rows of `out`.
inline Eigen::VectorXd LossAndOutputDelta(
    const ModelSpec& spec, RowMatrix& out,
    const Eigen::Ref<const Eigen::VectorXd>& y, Index* correct = nullptr) {
  const Index n = out.rows();
  Eigen::VectorXd loss(n);
  if (!spec.is_classifier()) {
    for (Index i = 0; i < n; ++i) {
      const double r = out(i, 0) - y[i];
      loss[i] = r * r;
      out(i, 0) = 2.0 * r;
    }
    return loss;
  }
  Index hits = 0;
  for (Index i = 0; i < n; ++i) {
    auto row = out.row(i);
    Index argmax = 0;
    const double m = row.maxCoeff(&argmax);
    const auto label = static_cast<Index>(y[i]);
    if (argmax == label) ++hits;
    const double shifted_label = row[label] - m;
    row.array() = (row.array() - m).exp();
    const double z = row.sum();
    loss[i] = std::log(z) - shifted_label;
    row /= z;
    row[label] -= 1.0;
  }
  if (correct != nullptr) *correct = hits;
  return loss;
}

}  // namespace internal

// Forward and backward pass over one batch. Holds the per-layer activations
// and output deltas so per-example gradients, their norms, and weighted sums
// can be formed without materializing every gradient.
class Backprop {
 public:
  Backprop(const ModelSpec& spec, const ParameterVector& w,
           const Eigen::Ref<const FeatureMatrix>& x,
           const Eigen::Ref<const Eigen::VectorXd>& y)
      : spec_(spec), layers_(spec.Layers()) {
    internal::CheckInputs(spec, w, x, y);
    internal::RowMatrix out =
        internal::Forward(spec_, layers_, w, x, &activations_);
    losses_ = internal::LossAndOutputDelta(spec_, out, y);
    deltas_.resize(layers_.size());
    deltas_.back() = std::move(out);
    for (std::size_t l = layers_.size() - 1; l > 0; --l) {
      internal::RowMatrix d = deltas_[l] * internal::Weights(w, layers_[l]);
      internal::MultiplyDerivative(spec_.activation, activations_[l], d);
      deltas_[l - 1] = std::move(d);
    }
  }

  Index size() const { return losses_.size(); }
  const Eigen::VectorXd& losses() const { return losses_; }
  // activations()[0] is the batch input, activations()[l] the output of
  // hidden layer l.
  const std::vector<internal::RowMatrix>& activations() const {
    return activations_;
  }

  ParameterVector ExampleGradient(Index i) const {
    ParameterVector g(spec_.ParameterCount());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& layer = layers_[l];
      Eigen::Map<internal::RowMatrix>(g.data() + layer.offset, layer.out,
                                      layer.in) =
          deltas_[l].row(i).transpose() * activations_[l].row(i);
      g.segment(layer.bias_offset(), layer.out) = deltas_[l].row(i).transpose();
    }
    return g;
  }

  // ||grad_i||_2 for every example; a dense layer's gradient is an outer
  // product, so its squared norm is |delta|^2 (|input|^2 + 1).
  Eigen::VectorXd GradientNorms() const {
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      sq.array() += deltas_[l].rowwise().squaredNorm().array() *
                    (activations_[l].rowwise().squaredNorm().array() + 1.0);
    }
    return sq.cwiseSqrt();
  }

  // sum_i weights[i] * grad_i.
  ParameterVector WeightedGradientSum(const Eigen::VectorXd& weights) const {
    internal::Require(weights.size() == size(), ErrorCode::kDimensionMismatch,
                      "one weight per example required");
    ParameterVector g(spec_.ParameterCount());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& layer = layers_[l];
      const internal::RowMatrix scaled = weights.asDiagonal() * deltas_[l];
      Eigen::Map<internal::RowMatrix>(g.data() + layer.offset, layer.out,
                                      layer.in) =
          scaled.transpose() * activations_[l];
      g.segment(layer.bias_offset(), layer.out) =
          scaled.colwise().sum().transpose();
    }
    return g;
  }

 private:
  ModelSpec spec_;
  std::vector<DenseLayer> layers_;
  std::vector<internal::RowMatrix> activations_;  // inputs to each layer
  std::vector<internal::RowMatrix> deltas_;       // d loss / d pre-activation
  Eigen::VectorXd losses_;
};

inline std::vector<ExampleGradient> PerExampleGradients(
    const ModelSpec& spec, const ParameterVector& w,
    const Eigen::Ref<const FeatureMatrix>& x,
    const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Backprop bp(spec, w, x, y);
  std::vector<ExampleGradient> out;
  out.reserve(bp.size());
  for (Index i = 0; i < bp.size(); ++i) {
    out.push_back({bp.losses()[i], bp.ExampleGradient(i)});
  }
  return out;
}

// Mean loss (and accuracy for classifiers) over every row.
inline EvalResult Evaluate(const ModelSpec& spec, const ParameterVector& w,
                           const Eigen::Ref<const FeatureMatrix>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& y) {
  internal::CheckInputs(spec, w, x, y);
  internal::Require(x.rows() > 0, ErrorCode::kEmptyDataset,
                    "cannot evaluate on an empty dataset");
  const auto layers = spec.Layers();
  constexpr Index kChunk = 1024;
  double loss_sum = 0.0;
  Index correct = 0;
  for (Index begin = 0; begin < x.rows(); begin += kChunk) {
    const Index rows = std::min(kChunk, x.rows() - begin);
    internal::RowMatrix out = internal::Forward(
        spec, layers, w, x.middleRows(begin, rows), nullptr);
    Index hits = 0;
    loss_sum += internal::LossAndOutputDelta(spec, out,
                                             y.segment(begin, rows), &hits)
                    .sum();
    correct += hits;
  }
  EvalResult r;
  const auto n = static_cast<double>(x.rows());
  r.loss = loss_sum / n;
  if (spec.is_classifier()) r.accuracy = static_cast<double>(correct) / n;
  return r;
}

// Checkpoint: "SADP", uint32 version, uint64 length, then `length` float64
// values; all integers and floats little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace internal {

template <typename T>
void PutLittleEndian(std::ofstream& os, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  }
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T GetLittleEndian(const unsigned char* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(p[i]) << (8 * i);
  }
  return value;
}

}  // namespace internal

inline void WriteCheckpoint(const std::string& path, const ParameterVector& w) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot open " + path);
  os.write("SADP", 4);
  internal::PutLittleEndian<std::uint32_t>(os, kCheckpointVersion);
  internal::PutLittleEndian<std::uint64_t>(os, w.size());
  for (Index i = 0; i < w.size(); ++i) {
    internal::PutLittleEndian(os, std::bit_cast<std::uint64_t>(w[i]));
  }
  if (!os) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

inline ParameterVector ReadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  internal::Require(bytes.size() >= 16, ErrorCode::kTruncatedFile,
                    "checkpoint header truncated");
  internal::Require(std::memcmp(bytes.data(), "SADP", 4) == 0,
                    ErrorCode::kBadMagic, "not a checkpoint: " + path);
  const auto version =
      internal::GetLittleEndian<std::uint32_t>(bytes.data() + 4);
  internal::Require(version == kCheckpointVersion, ErrorCode::kBadMagic,
                    "unsupported checkpoint version");
  const auto length =
      internal::GetLittleEndian<std::uint64_t>(bytes.data() + 8);
  internal::Require(bytes.size() - 16 == length * 8, ErrorCode::kTruncatedFile,
                    "checkpoint payload length mismatch");
  ParameterVector w(static_cast<Index>(length));
  for (std::uint64_t i = 0; i < length; ++i) {
    w[static_cast<Index>(i)] = std::bit_cast<double>(
        internal::GetLittleEndian<std::uint64_t>(bytes.data() + 16 + 8 * i));
  }
  return w;
}

}  // namespace sadp
