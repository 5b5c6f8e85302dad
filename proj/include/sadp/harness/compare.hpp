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

// Runs several configurations over several seeds and summarizes each
// configuration by mean and sample standard deviation across seeds.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sadp/harness/config.hpp"
#include "sadp/harness/train.hpp"

namespace sadp {

struct Stat {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();
  std::int64_t count = 0;

  static Stat Of(const std::vector<double>& xs) {
    Stat s;
    s.count = static_cast<std::int64_t>(xs.size());
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    return s;
  }
};

struct RunOutcome {
  std::uint64_t seed = 0;
  std::int64_t iterations = 0;
  std::int64_t charged_steps = 0;
  double epsilon = 0.0;
  double final_eval_loss = 0.0;
  std::optional<double> final_eval_accuracy;
  std::optional<double> final_test_accuracy;
  // epsilon_so_far at the first record whose eval accuracy reached the target.
  std::optional<double> epsilon_at_target;
};

struct MethodSummary {
  std::string name;
  Method method = Method::kSaDpsgd;
  std::vector<RunOutcome> runs;
  Stat final_eval_accuracy;
  Stat final_test_accuracy;
  Stat final_eval_loss;
  Stat epsilon;
  Stat epsilon_at_target;
  Stat iterations;
  Stat charged_steps;
};

inline RunOutcome Summarize(const TrainConfig& config, const TrainResult& r) {
  RunOutcome o;
  o.seed = config.seed;
  o.iterations = r.records.empty() ? 0 : r.records.back().t;
  o.charged_steps = r.charged_steps;
  o.epsilon = r.spend.epsilon;
  o.final_eval_loss = r.final_eval.loss;
  o.final_eval_accuracy = r.final_eval.accuracy;
  if (r.final_test) o.final_test_accuracy = r.final_test->accuracy;
  if (config.target_accuracy) {
    for (const auto& rec : r.records) {
      if (rec.eval_accuracy && *rec.eval_accuracy >= *config.target_accuracy) {
        o.epsilon_at_target = rec.epsilon_so_far;
        break;
      }
    }
  }
  return o;
}

inline MethodSummary Aggregate(const TrainConfig& config,
                               std::vector<RunOutcome> runs) {
  MethodSummary s;
  s.name = config.label();
  s.method = config.method;
  std::vector<double> eval_acc, test_acc, loss, eps, eps_target, iters, charged;
  for (const auto& r : runs) {
    if (r.final_eval_accuracy) eval_acc.push_back(*r.final_eval_accuracy);
    if (r.final_test_accuracy) test_acc.push_back(*r.final_test_accuracy);
    if (r.epsilon_at_target) eps_target.push_back(*r.epsilon_at_target);
    loss.push_back(r.final_eval_loss);
    eps.push_back(r.epsilon);
    iters.push_back(static_cast<double>(r.iterations));
    charged.push_back(static_cast<double>(r.charged_steps));
  }
  s.final_eval_accuracy = Stat::Of(eval_acc);
  s.final_test_accuracy = Stat::Of(test_acc);
  s.final_eval_loss = Stat::Of(loss);
  s.epsilon = Stat::Of(eps);
  s.epsilon_at_target = Stat::Of(eps_target);
  s.iterations = Stat::Of(iters);
  s.charged_steps = Stat::Of(charged);
  s.runs = std::move(runs);
  return s;
}

// Data is prepared once per configuration and shared across its seeds.
inline std::vector<MethodSummary> Compare(const std::vector<TrainConfig>& configs,
                                          const std::vector<std::uint64_t>& seeds) {
  internal::Require(!configs.empty(), ErrorCode::kInvalidConfig, "no configs given");
  internal::Require(!seeds.empty(), ErrorCode::kInvalidConfig, "no seeds given");
  std::vector<MethodSummary> out;
  for (const TrainConfig& base : configs) {
    const PreparedData data = PrepareData(base);
    std::vector<RunOutcome> runs;
    for (std::uint64_t seed : seeds) {
      TrainConfig c = base;
      c.seed = seed;
      runs.push_back(Summarize(c, Train(c, data)));
    }
    out.push_back(Aggregate(base, std::move(runs)));
  }
  return out;
}

namespace internal {

inline std::string CsvNumber(double v) {
  return std::isnan(v) ? std::string() : FormatNumber(v);
}

inline nlohmann::json StatJson(const Stat& s) {
  auto num = [](double v) {
    return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
  };
  return {{"mean", num(s.mean)}, {"std", num(s.stddev)}, {"count", s.count}};
}

}  // namespace internal

inline constexpr const char* kSummaryCsvHeader =
    "name,method,runs,final_eval_accuracy_mean,final_eval_accuracy_std,"
    "final_test_accuracy_mean,final_test_accuracy_std,final_eval_loss_mean,"
    "final_eval_loss_std,epsilon_mean,epsilon_std,epsilon_at_target_mean,"
    "epsilon_at_target_std,epsilon_at_target_reached,iterations_mean,"
    "charged_steps_mean";

inline void WriteSummaryCsv(const std::vector<MethodSummary>& rows,
                            const std::string& path) {
  using internal::CsvNumber;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot open " + path);
  os << kSummaryCsvHeader << '\n';
  for (const auto& s : rows) {
    os << s.name << ',' << MethodName(s.method) << ',' << s.runs.size() << ','
       << CsvNumber(s.final_eval_accuracy.mean) << ','
       << CsvNumber(s.final_eval_accuracy.stddev) << ','
       << CsvNumber(s.final_test_accuracy.mean) << ','
       << CsvNumber(s.final_test_accuracy.stddev) << ','
       << CsvNumber(s.final_eval_loss.mean) << ','
       << CsvNumber(s.final_eval_loss.stddev) << ','
       << CsvNumber(s.epsilon.mean) << ',' << CsvNumber(s.epsilon.stddev) << ','
       << CsvNumber(s.epsilon_at_target.mean) << ','
       << CsvNumber(s.epsilon_at_target.stddev) << ','
       << s.epsilon_at_target.count << ',' << CsvNumber(s.iterations.mean) << ','
       << CsvNumber(s.charged_steps.mean) << '\n';
  }
  if (!os) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

inline nlohmann::json SummaryToJson(const std::vector<MethodSummary>& rows) {
  using internal::StatJson;
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : rows) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : s.runs) {
      auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
      };
      runs.push_back({{"seed", r.seed},
                      {"iterations", r.iterations},
                      {"charged_steps", r.charged_steps},
                      {"epsilon", r.epsilon},
                      {"final_eval_loss", r.final_eval_loss},
                      {"final_eval_accuracy", opt(r.final_eval_accuracy)},
                      {"final_test_accuracy", opt(r.final_test_accuracy)},
                      {"epsilon_at_target", opt(r.epsilon_at_target)}});
    }
    out.push_back({{"name", s.name},
                   {"method", MethodName(s.method)},
                   {"privacy_charging", ChargingRule(s.method)},
                   {"final_eval_accuracy", StatJson(s.final_eval_accuracy)},
                   {"final_test_accuracy", StatJson(s.final_test_accuracy)},
                   {"final_eval_loss", StatJson(s.final_eval_loss)},
                   {"epsilon", StatJson(s.epsilon)},
                   {"epsilon_at_target", StatJson(s.epsilon_at_target)},
                   {"iterations", StatJson(s.iterations)},
                   {"charged_steps", StatJson(s.charged_steps)},
                   {"runs", std::move(runs)}});
  }
  return out;
}

inline void WriteSummaryJson(const std::vector<MethodSummary>& rows,
                             const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot open " + path);
  os << SummaryToJson(rows).dump(1) << '\n';
  if (!os) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

}  // namespace sadp
