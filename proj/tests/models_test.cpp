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

#include "sadp/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "sadp/data.hpp"
#include "sadp/rng.hpp"
#include "test_util.hpp"

namespace sadp {
namespace {

struct Case {
  const char* name;
  ModelSpec spec;
};

std::vector<Case> AllModels() {
  ModelSpec lin{Architecture::kLinearRegression, {}, Activation::kBoundedTanh, 6, 1};
  ModelSpec soft{Architecture::kSoftmaxRegression, {}, Activation::kBoundedTanh, 6, 4};
  ModelSpec mlp_tanh{Architecture::kMlp, {5, 3}, Activation::kBoundedTanh, 6, 4};
  ModelSpec mlp_relu{Architecture::kMlp, {5, 3}, Activation::kRectifier, 6, 4};
  ModelSpec mlp1_tanh{Architecture::kMlp, {7}, Activation::kBoundedTanh, 6, 3};
  ModelSpec mlp1_relu{Architecture::kMlp, {7}, Activation::kRectifier, 6, 3};
  return {{"linear_regression", lin},   {"softmax_regression", soft},
          {"mlp_tanh", mlp_tanh},       {"mlp_relu", mlp_relu},
          {"mlp1_tanh", mlp1_tanh},     {"mlp1_relu", mlp1_relu}};
}

FeatureMatrix RandomFeatures(Rng& rng, Index n, Index d) {
  FeatureMatrix x(n, d);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.Uniform(-1.0, 1.0);
  return x;
}

Eigen::VectorXd RandomTargets(Rng& rng, const ModelSpec& spec, Index n) {
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = spec.is_classifier()
               ? static_cast<double>(rng.NextU64() % spec.output_dim)
               : rng.Uniform(-2.0, 2.0);
  }
  return y;
}

ParameterVector RandomParams(Rng& rng, const ModelSpec& spec, double scale) {
  ParameterVector w(spec.ParameterCount());
  for (Index i = 0; i < w.size(); ++i) w[i] = scale * rng.Normal();
  return w;
}

double LossAt(const ModelSpec& spec, const ParameterVector& w,
              const FeatureMatrix& x, const Eigen::VectorXd& y) {
  return Evaluate(spec, w, x, y).loss;
}

TEST(ModelSpecTest, ParameterCountAndPacking) {
  const ModelSpec mlp{Architecture::kMlp, {128}, Activation::kBoundedTanh, 784, 10};
  EXPECT_EQ(mlp.ParameterCount(), 784 * 128 + 128 + 128 * 10 + 10);
  const auto layers = mlp.Layers();
  ASSERT_EQ(layers.size(), 2u);
  EXPECT_EQ(layers[0].offset, 0);
  EXPECT_EQ(layers[0].bias_offset(), 784 * 128);
  EXPECT_EQ(layers[1].offset, 784 * 128 + 128);
  const ModelSpec soft{Architecture::kSoftmaxRegression, {}, Activation::kBoundedTanh, 784, 10};
  EXPECT_EQ(soft.ParameterCount(), 7850);
}

TEST(ModelSpecTest, RejectsInconsistentSpecs) {
  EXPECT_THROW((ModelSpec{Architecture::kLinearRegression, {}, Activation::kBoundedTanh, 3, 2}.Validate()), Error);
  EXPECT_THROW((ModelSpec{Architecture::kSoftmaxRegression, {}, Activation::kBoundedTanh, 3, 1}.Validate()), Error);
  EXPECT_THROW((ModelSpec{Architecture::kMlp, {}, Activation::kBoundedTanh, 3, 2}.Validate()), Error);
  EXPECT_THROW((ModelSpec{Architecture::kMlp, {0}, Activation::kBoundedTanh, 3, 2}.Validate()), Error);
}

TEST(PerExampleGradientsTest, LinearRegressionPerfectFitAtOrigin) {
  const ModelSpec spec{Architecture::kLinearRegression, {}, Activation::kBoundedTanh, 3, 1};
  FeatureMatrix x(1, 3);
  x << 0.3, -0.7, 1.1;
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(1);
  const auto out = PerExampleGradients(spec, ParameterVector::Zero(4), x, y);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].loss, 0.0);
  EXPECT_EQ(out[0].gradient, ParameterVector::Zero(4));
}

TEST(PerExampleGradientsTest, SoftmaxAtZeroIsUniform) {
  const ModelSpec spec{Architecture::kSoftmaxRegression, {}, Activation::kBoundedTanh, 3, 2};
  FeatureMatrix x(2, 3);
  x << 0.5, -1.0, 2.0,
       1.5, 0.25, -0.5;
  Eigen::VectorXd y(2);
  y << 1, 0;
  const auto out = PerExampleGradients(spec, ParameterVector::Zero(8), x, y);
  for (Index i = 0; i < 2; ++i) {
    EXPECT_NEAR(out[i].loss, std::log(2.0), 1e-15);
    // d loss / d W[c][j] = (p_c - onehot_c) x_j, p = (1/2, 1/2).
    for (Index c = 0; c < 2; ++c) {
      const double r = 0.5 - (static_cast<Index>(y[i]) == c ? 1.0 : 0.0);
      for (Index j = 0; j < 3; ++j) {
        EXPECT_NEAR(out[i].gradient[c * 3 + j], r * x(i, j), 1e-15);
      }
      EXPECT_NEAR(out[i].gradient[6 + c], r, 1e-15);
    }
  }
}

TEST(PerExampleGradientsTest, MatchCentralFiniteDifferences) {
  constexpr double kStep = 1e-5;
  for (const Case& c : AllModels()) {
    Rng rng(std::hash<std::string>{}(c.name));
    for (int pair = 0; pair < 20; ++pair) {
      const ParameterVector w = RandomParams(rng, c.spec, 0.7);
      const FeatureMatrix x = RandomFeatures(rng, 1, c.spec.input_dim);
      const Eigen::VectorXd y = RandomTargets(rng, c.spec, 1);
      const ParameterVector g = PerExampleGradients(c.spec, w, x, y)[0].gradient;
      for (Index k = 0; k < w.size(); ++k) {
        ParameterVector wp = w, wm = w;
        wp[k] += kStep;
        wm[k] -= kStep;
        const double fd =
            (LossAt(c.spec, wp, x, y) - LossAt(c.spec, wm, x, y)) / (2 * kStep);
        // 1e-6 floor keeps 0/0 out of coordinates that are numerically zero.
        const double scale = std::max({std::abs(fd), std::abs(g[k]), 1e-6});
        EXPECT_LE(std::abs(fd - g[k]) / scale, 1e-4)
            << c.name << " pair " << pair << " coord " << k << " analytic " << g[k]
            << " fd " << fd;
      }
    }
  }
}

TEST(BackpropTest, MeanGradientIsMeanOfExampleGradients) {
  for (const Case& c : AllModels()) {
    Rng rng(17);
    const Index n = 13;
    const ParameterVector w = RandomParams(rng, c.spec, 0.5);
    const FeatureMatrix x = RandomFeatures(rng, n, c.spec.input_dim);
    const Eigen::VectorXd y = RandomTargets(rng, c.spec, n);
    const Backprop bp(c.spec, w, x, y);
    ParameterVector mean = ParameterVector::Zero(w.size());
    for (Index i = 0; i < n; ++i) mean += bp.ExampleGradient(i);
    mean /= static_cast<double>(n);
    const ParameterVector batch_mean =
        bp.WeightedGradientSum(Eigen::VectorXd::Constant(n, 1.0 / n));
    EXPECT_LE((batch_mean - mean).cwiseAbs().maxCoeff(), 1e-12) << c.name;
    EXPECT_NEAR(bp.losses().mean(), Evaluate(c.spec, w, x, y).loss, 1e-12);
  }
}

TEST(BackpropTest, NormsAndWeightedSumMatchMaterializedGradients) {
  for (const Case& c : AllModels()) {
    Rng rng(23);
    const Index n = 9;
    const ParameterVector w = RandomParams(rng, c.spec, 0.8);
    const FeatureMatrix x = RandomFeatures(rng, n, c.spec.input_dim);
    const Eigen::VectorXd y = RandomTargets(rng, c.spec, n);
    const Backprop bp(c.spec, w, x, y);
    const Eigen::VectorXd norms = bp.GradientNorms();
    Eigen::VectorXd weights(n);
    ParameterVector sum = ParameterVector::Zero(w.size());
    for (Index i = 0; i < n; ++i) {
      const ParameterVector g = bp.ExampleGradient(i);
      EXPECT_NEAR(norms[i], g.norm(), 1e-12 * std::max(1.0, g.norm())) << c.name;
      weights[i] = rng.Uniform(0.0, 2.0);
      sum += weights[i] * g;
    }
    EXPECT_LE((bp.WeightedGradientSum(weights) - sum).cwiseAbs().maxCoeff(), 1e-12)
        << c.name;
  }
}

TEST(BackpropTest, ActivationRanges) {
  Rng rng(5);
  for (Activation act : {Activation::kBoundedTanh, Activation::kRectifier}) {
    const ModelSpec spec{Architecture::kMlp, {32, 16}, act, 8, 5};
    for (int trial = 0; trial < 20; ++trial) {
      // Pre-activations stay well below where tanh rounds to exactly 1.
      const ParameterVector w = RandomParams(rng, spec, 0.5);
      const FeatureMatrix x = RandomFeatures(rng, 16, 8) * 2.0;
      const Backprop bp(spec, w, x, RandomTargets(rng, spec, 16));
      for (std::size_t l = 1; l < bp.activations().size(); ++l) {
        const auto& a = bp.activations()[l];
        if (act == Activation::kBoundedTanh) {
          EXPECT_LT(a.cwiseAbs().maxCoeff(), 1.0);
        } else {
          EXPECT_GE(a.minCoeff(), 0.0);
          EXPECT_GT(a.maxCoeff(), 0.0);
        }
      }
    }
  }
}

TEST(BackpropTest, BitIdenticalOnRepeat) {
  const ModelSpec spec{Architecture::kMlp, {10}, Activation::kBoundedTanh, 6, 3};
  Rng rng(9);
  const ParameterVector w = RandomParams(rng, spec, 0.5);
  const FeatureMatrix x = RandomFeatures(rng, 20, 6);
  const Eigen::VectorXd y = RandomTargets(rng, spec, 20);
  const auto a = PerExampleGradients(spec, w, x, y);
  const auto b = PerExampleGradients(spec, w, x, y);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].loss, b[i].loss);
    EXPECT_EQ(a[i].gradient, b[i].gradient);
  }
}

TEST(PerExampleGradientsTest, Errors) {
  const ModelSpec spec{Architecture::kSoftmaxRegression, {}, Activation::kBoundedTanh, 3, 2};
  const FeatureMatrix x = FeatureMatrix::Zero(2, 3);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  try {
    PerExampleGradients(spec, ParameterVector::Zero(7), x, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  EXPECT_THROW(PerExampleGradients(spec, ParameterVector::Zero(8), FeatureMatrix::Zero(2, 4), y), Error);
  EXPECT_THROW(PerExampleGradients(spec, ParameterVector::Zero(8), x, Eigen::VectorXd::Zero(3)), Error);
  ParameterVector bad = ParameterVector::Zero(8);
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  try {
    PerExampleGradients(spec, bad, x, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteInput);
  }
  Eigen::VectorXd bad_label = y;
  bad_label[1] = 2;
  EXPECT_THROW(PerExampleGradients(spec, ParameterVector::Zero(8), x, bad_label), Error);
}

TEST(EvaluateTest, ZeroSoftmaxHasLogKLoss) {
  for (Index k : {2, 3, 10}) {
    const ModelSpec spec{Architecture::kSoftmaxRegression, {}, Activation::kBoundedTanh, 4, k};
    Rng rng(k);
    const FeatureMatrix x = RandomFeatures(rng, 50, 4);
    const Eigen::VectorXd y = RandomTargets(rng, spec, 50);
    const EvalResult r = Evaluate(spec, ParameterVector::Zero(spec.ParameterCount()), x, y);
    EXPECT_NEAR(r.loss, std::log(static_cast<double>(k)), 1e-14);
    ASSERT_TRUE(r.accuracy.has_value());
  }
}

TEST(EvaluateTest, ConfidentPerfectClassifier) {
  // Class = index of the hot coordinate; W = 100 I.
  const ModelSpec spec{Architecture::kSoftmaxRegression, {}, Activation::kBoundedTanh, 3, 3};
  FeatureMatrix x = FeatureMatrix::Identity(3, 3);
  Eigen::VectorXd y(3);
  y << 0, 1, 2;
  ParameterVector w = ParameterVector::Zero(12);
  for (Index c = 0; c < 3; ++c) w[c * 3 + c] = 100.0;
  const EvalResult r = Evaluate(spec, w, x, y);
  EXPECT_EQ(*r.accuracy, 1.0);
  EXPECT_LT(r.loss, 1e-40);
}

TEST(EvaluateTest, RegressionHasNoAccuracy) {
  const ModelSpec spec{Architecture::kLinearRegression, {}, Activation::kBoundedTanh, 2, 1};
  const EvalResult r = Evaluate(spec, ParameterVector::Zero(3), FeatureMatrix::Ones(4, 2),
                                Eigen::VectorXd::Constant(4, 2.0));
  EXPECT_FALSE(r.accuracy.has_value());
  EXPECT_EQ(r.loss, 4.0);
}

TEST(EvaluateTest, EmptyDatasetIsAnError) {
  const ModelSpec spec{Architecture::kLinearRegression, {}, Activation::kBoundedTanh, 2, 1};
  try {
    Evaluate(spec, ParameterVector::Zero(3), FeatureMatrix(0, 2), Eigen::VectorXd(0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
}

TEST(EvaluateTest, LeastSquaresOptimumOnSyntheticFixture) {
  // 100 points from y = 2 x1 - 3 x2 + N(0, 0.1^2). The oracle solves the
  // normal equations in long double and sums the residuals itself.
  const std::vector<double> truth = {2.0, -3.0};
  const LabeledDataset ds = SynthLinear(100, truth, 0.1, 42);
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  MatL a(100, 3);
  VecL b(100);
  for (Index i = 0; i < 100; ++i) {
    a(i, 0) = ds.features(i, 0);
    a(i, 1) = ds.features(i, 1);
    a(i, 2) = 1.0L;
    b[i] = ds.targets[i];
  }
  const VecL coef = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  long double sse = 0.0L;
  for (Index i = 0; i < 100; ++i) {
    const long double r = a.row(i).dot(coef) - b[i];
    sse += r * r;
  }
  const double oracle_j = static_cast<double>(sse / 100.0L);

  const ModelSpec spec{Architecture::kLinearRegression, {}, Activation::kBoundedTanh, 2, 1};
  ParameterVector w(3);
  for (Index k = 0; k < 3; ++k) w[k] = static_cast<double>(coef[k]);
  EXPECT_NEAR(Evaluate(spec, w, ds.features, ds.targets).loss, oracle_j, 1e-14);
  // Residual variance near the generator's noise level.
  EXPECT_NEAR(oracle_j, 0.01, 0.005);
  // The optimum is stationary.
  const Backprop bp(spec, w, ds.features, ds.targets);
  EXPECT_LE(bp.WeightedGradientSum(Eigen::VectorXd::Constant(100, 0.01)).norm(), 1e-12);
}

TEST(InitParametersTest, GlorotUniformAndZeroBiases) {
  const ModelSpec spec{Architecture::kMlp, {50}, Activation::kBoundedTanh, 30, 10};
  Rng a(3), b(3);
  const ParameterVector w = InitParameters(spec, a);
  EXPECT_EQ(w, InitParameters(spec, b));
  const auto layers = spec.Layers();
  for (const DenseLayer& l : layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    const auto weights = w.segment(l.offset, l.weight_count());
    EXPECT_LE(weights.cwiseAbs().maxCoeff(), limit);
    EXPECT_GT(weights.cwiseAbs().maxCoeff(), 0.9 * limit);
    EXPECT_EQ(w.segment(l.bias_offset(), l.out), ParameterVector::Zero(l.out));
  }
}

TEST(CheckpointTest, RoundTripAndHeader) {
  const auto dir = testing::TempDir("checkpoint");
  const std::string path = (dir / "w.ckpt").string();
  Rng rng(1);
  ParameterVector w(37);
  for (Index i = 0; i < w.size(); ++i) w[i] = rng.Normal() * 1e3;
  w[0] = -0.0;
  w[1] = std::numeric_limits<double>::denorm_min();
  WriteCheckpoint(path, w);
  EXPECT_EQ(ReadCheckpoint(path), w);

  std::ifstream is(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), {});
  ASSERT_EQ(bytes.size(), 16u + 8u * 37u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SADP");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  EXPECT_EQ(bytes[8], 37);
  // 1.0 is 0x3ff0000000000000, stored low byte first.
  WriteCheckpoint(path, ParameterVector::Ones(1));
  std::ifstream is2(path, std::ios::binary);
  std::vector<unsigned char> one((std::istreambuf_iterator<char>(is2)), {});
  ASSERT_EQ(one.size(), 24u);
  EXPECT_EQ(one[22], 0xf0);
  EXPECT_EQ(one[23], 0x3f);
}

TEST(CheckpointTest, RejectsCorruptFiles) {
  const auto dir = testing::TempDir("checkpoint_bad");
  const std::string path = (dir / "bad.ckpt").string();
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE0000000000000000";
  }
  try {
    ReadCheckpoint(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadMagic);
  }
  WriteCheckpoint(path, ParameterVector::Ones(4));
  std::filesystem::resize_file(path, 16 + 8 * 3);
  try {
    ReadCheckpoint(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTruncatedFile);
  }
  EXPECT_THROW(ReadCheckpoint((dir / "missing").string()), Error);
}

}  // namespace
}  // namespace sadp
