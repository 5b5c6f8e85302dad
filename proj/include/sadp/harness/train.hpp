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

// One training run: Poisson-sampled lots, clipped and noised gradients, an
// SGD candidate, and (for sa_dpsgd) the annealing screen deciding whether the
// candidate replaces the incumbent model.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sadp/accountant.hpp"
#include "sadp/annealer.hpp"
#include "sadp/data.hpp"
#include "sadp/dp_optimizer.hpp"
#include "sadp/harness/config.hpp"
#include "sadp/models.hpp"
#include "sadp/rng.hpp"

namespace sadp {

struct IterationRecord {
  std::int64_t t = 0;
  std::int64_t tau = 0;
  std::int64_t mu = 0;
  double temperature = 0.0;
  double delta_e = 0.0;
  double probability = 0.0;
  bool accepted = false;
  bool forced = false;
  double eval_loss = 0.0;  // energy of the incumbent after the decision
  std::optional<double> eval_accuracy;
  double epsilon_so_far = 0.0;

  bool operator==(const IterationRecord&) const = default;
};

struct PreparedData {
  LabeledDataset train;  // examples the gradients are computed on
  LabeledDataset eval;   // energy J(w) is measured here
  std::optional<LabeledDataset> test;
  int num_classes = 0;
};

struct TrainResult {
  ModelSpec model;
  ParameterVector params;
  PrivacySpend spend;
  std::int64_t charged_steps = 0;
  std::vector<IterationRecord> records;
  EvalResult final_eval;
  std::optional<EvalResult> final_test;
};

// Called once per iteration with the candidate formed before screening.
using IterationObserver =
    std::function<void(const ParameterVector& candidate, const IterationRecord&)>;

// Stream keys for Rng::Split; every component draws from its own stream so
// that changing one (e.g. the annealer) leaves the others aligned.
enum RngStream : std::uint64_t {
  kInitStream = 1,
  kSampleStream = 2,
  kNoiseStream = 3,
  kAnnealStream = 4,
};

inline std::string ChargingRule(Method m) {
  return m == Method::kDpsgd ? "every iteration charged (tau = t)"
                             : "accepted iterations charged (tau)";
}

inline PreparedData PrepareData(const TrainConfig& config) {
  const DataSource& src = config.data;
  LabeledDataset full;
  std::optional<LabeledDataset> test;
  switch (src.kind) {
    case DataKind::kIdx:
      full = LoadIdx(src.train_images, src.train_labels);
      if (!src.test_images.empty()) test = LoadIdx(src.test_images, src.test_labels);
      break;
    case DataKind::kCsv: {
      const CsvOptions opts{src.csv_classification};
      full = LoadCsv(src.train_csv, opts);
      if (!src.test_csv.empty()) test = LoadCsv(src.test_csv, opts);
      break;
    }
    case DataKind::kSynthLinear:
      full = SynthLinear(src.synth_n, src.synth_weights, src.synth_noise_std,
                         src.synth_seed);
      break;
  }
  if (src.train_limit > 0 && src.train_limit < full.size()) {
    std::vector<Index> first(static_cast<std::size_t>(src.train_limit));
    for (std::size_t i = 0; i < first.size(); ++i) first[i] = static_cast<Index>(i);
    full = full.Subset(first);
  }
  if (!test) {
    auto [rest, carved] = Split(full, src.test_fraction, config.data_seed + 1);
    full = std::move(rest);
    test = std::move(carved);
  }

  PreparedData out;
  if (config.eval_set == EvalSet::kHeldOut) {
    auto [train, held_out] = Split(full, config.held_out_fraction, config.data_seed);
    out.train = std::move(train);
    out.eval = std::move(held_out);
  } else {
    out.train = std::move(full);
    out.eval = *test;
  }
  out.test = std::move(test);
  out.num_classes = std::max({out.train.num_classes, out.eval.num_classes,
                              out.test ? out.test->num_classes : 0});
  out.train.num_classes = out.eval.num_classes = out.num_classes;
  if (out.test) out.test->num_classes = out.num_classes;
  internal::Require(out.train.size() > 0 && out.eval.size() > 0,
                    ErrorCode::kEmptyDataset,
                    "training or evaluation split is empty");
  return out;
}

inline ModelSpec ResolveModel(const TrainConfig& config, const PreparedData& data) {
  ModelSpec spec = config.model;
  spec.input_dim = data.train.dims();
  spec.output_dim = spec.is_classifier() ? data.num_classes : 1;
  if (spec.is_classifier() && data.num_classes == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "classifier model on a regression dataset");
  }
  if (!spec.is_classifier() && data.num_classes > 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "linear_regression needs real-valued targets");
  }
  spec.Validate();
  return spec;
}

inline AccountantState MakeAccountant(const TrainConfig& config, Index n_train) {
  AccountantState state;
  state.q = static_cast<double>(config.batch_size) / static_cast<double>(n_train);
  state.sigma = config.sigma;
  state.delta = config.delta;
  state.tight_conversion = config.tight_conversion;
  return state;
}

inline TrainResult Train(const TrainConfig& config, const PreparedData& data,
                         const IterationObserver& observer = {}) {
  config.Validate();
  const ModelSpec spec = ResolveModel(config, data);
  const Index n_train = data.train.size();
  internal::Require(config.batch_size <= n_train, ErrorCode::kInvalidConfig,
                    "batch_size exceeds the training set size");
  const bool screened = config.method == Method::kSaDpsgd;

  AccountantState accountant = MakeAccountant(config, n_train);
  const RdpCurve curve(accountant);
  const std::int64_t max_charged =
      config.eps_budget ? MaxStepsWithin(accountant, *config.eps_budget)
                        : kUnlimitedIterations;

  const Rng root(config.seed);
  Rng init_rng = root.Split(kInitStream);
  Rng sample_rng = root.Split(kSampleStream);
  Rng noise_rng = root.Split(kNoiseStream);
  Rng anneal_rng = root.Split(kAnnealStream);

  const NoisePolicy noise{config.sigma, config.batch_size};
  ParameterVector w = InitParameters(spec, init_rng);
  EvalResult current = Evaluate(spec, w, data.eval.features, data.eval.targets);
  AnnealerState annealer =
      AnnealerState::Initial(config.initial_temperature,
                             config.rejection_threshold, current.loss,
                             config.clamp_tau_floor);

  TrainResult result;
  result.model = spec;
  std::int64_t charged = 0;
  FeatureMatrix batch_x;
  Eigen::VectorXd batch_y;
  while (annealer.t < config.max_iterations && charged < max_charged) {
    const std::vector<Index> lot = PoissonSample(n_train, accountant.q, sample_rng);
    ParameterVector sum = ParameterVector::Zero(spec.ParameterCount());
    if (!lot.empty()) {
      batch_x.resize(static_cast<Index>(lot.size()), spec.input_dim);
      batch_y.resize(static_cast<Index>(lot.size()));
      for (std::size_t i = 0; i < lot.size(); ++i) {
        batch_x.row(static_cast<Index>(i)) = data.train.features.row(lot[i]);
        batch_y[static_cast<Index>(i)] = data.train.targets[lot[i]];
      }
      const Backprop bp(spec, w, batch_x, batch_y);
      Eigen::VectorXd scale = bp.GradientNorms();
      internal::Require(scale.allFinite(), ErrorCode::kNonFiniteInput,
                        "per-example gradient is not finite");
      for (Index i = 0; i < scale.size(); ++i) scale[i] = ClipScale(scale[i], config.clip);
      sum = bp.WeightedGradientSum(scale);
    }
    const ParameterVector g_tilde =
        NoiseAndAverage(std::move(sum), noise, config.clip.clip_norm, noise_rng);
    ParameterVector candidate = SgdStep(w, g_tilde, config.eta);
    const EvalResult candidate_eval =
        Evaluate(spec, candidate, data.eval.features, data.eval.targets);
    const double delta_e = candidate_eval.loss - annealer.energy;

    Decision decision;
    if (screened) {
      decision = Decide(delta_e, annealer, anneal_rng);
    } else {
      decision.accepted = true;
      decision.probability = 1.0;
      decision.delta_e = delta_e;
    }
    annealer = Advance(annealer, decision, candidate_eval.loss);
    charged = screened ? annealer.tau : annealer.t;

    IterationRecord rec;
    rec.t = annealer.t;
    rec.tau = annealer.tau;
    rec.mu = annealer.mu;
    rec.temperature = annealer.temperature;
    rec.delta_e = delta_e;
    rec.probability = decision.probability;
    rec.accepted = decision.accepted;
    rec.forced = decision.forced;
    if (observer) observer(candidate, rec);
    if (decision.accepted) {
      w = std::move(candidate);
      current = candidate_eval;
    }
    rec.eval_loss = current.loss;
    rec.eval_accuracy = current.accuracy;
    rec.epsilon_so_far = curve.SpendAt(charged).epsilon;
    result.records.push_back(rec);
  }

  accountant.tau = charged;
  result.spend = Spend(accountant);
  result.charged_steps = charged;
  result.params = std::move(w);
  result.final_eval = current;
  if (data.test) {
    result.final_test = Evaluate(spec, result.params, data.test->features,
                                 data.test->targets);
  }
  return result;
}

inline TrainResult Train(const TrainConfig& config) {
  config.Validate();
  return Train(config, PrepareData(config));
}

}  // namespace sadp
