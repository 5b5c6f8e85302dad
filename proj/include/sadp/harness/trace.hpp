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

// Per-iteration trace files.
//
// CSV: header row, then one row per iteration with the columns
//   t,tau,mu,Q,delta_E,P,accepted,forced,eval_loss,eval_accuracy,epsilon_so_far
// Reals use the shortest round-trip decimal form, booleans are 0/1, an
// absent accuracy (regression) is an empty field, and every row ends in '\n'.

#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sadp/harness/config.hpp"
#include "sadp/harness/train.hpp"

namespace sadp {

inline constexpr std::array<std::string_view, 11> kTraceColumns = {
    "t",       "tau",      "mu",        "Q",
    "delta_E", "P",        "accepted",  "forced",
    "eval_loss", "eval_accuracy", "epsilon_so_far"};

inline std::string TraceCsvHeader() {
  std::string h;
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) {
    if (i) h += ',';
    h += kTraceColumns[i];
  }
  return h;
}

inline std::string FormatTraceRow(const IterationRecord& r) {
  using internal::FormatNumber;
  std::string s;
  s += std::to_string(r.t) + ',' + std::to_string(r.tau) + ',' +
       std::to_string(r.mu) + ',';
  s += FormatNumber(r.temperature) + ',' + FormatNumber(r.delta_e) + ',' +
       FormatNumber(r.probability) + ',';
  s += std::string(r.accepted ? "1" : "0") + ',' + (r.forced ? "1" : "0") + ',';
  s += FormatNumber(r.eval_loss) + ',';
  if (r.eval_accuracy) s += FormatNumber(*r.eval_accuracy);
  s += ',' + FormatNumber(r.epsilon_so_far);
  return s;
}

inline void WriteTraceCsv(const std::vector<IterationRecord>& records,
                          const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot open " + path);
  os << TraceCsvHeader() << '\n';
  for (const auto& r : records) os << FormatTraceRow(r) << '\n';
  if (!os) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

inline std::vector<IterationRecord> ReadTraceCsv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != TraceCsvHeader()) {
    throw Error(ErrorCode::kIoError, path + ": missing or unexpected header");
  }
  std::vector<IterationRecord> out;
  while (std::getline(is, line)) {
    const auto f = internal::SplitCommas(line);
    if (f.size() != kTraceColumns.size()) {
      throw Error(ErrorCode::kIoError, path + ": wrong column count");
    }
    auto num = [&](std::size_t i) {
      double v = 0.0;
      if (!internal::ParseDouble(f[i], v)) {
        throw Error(ErrorCode::kIoError, path + ": bad field '" + std::string(f[i]) + "'");
      }
      return v;
    };
    IterationRecord r;
    r.t = static_cast<std::int64_t>(num(0));
    r.tau = static_cast<std::int64_t>(num(1));
    r.mu = static_cast<std::int64_t>(num(2));
    r.temperature = num(3);
    r.delta_e = num(4);
    r.probability = num(5);
    r.accepted = num(6) != 0.0;
    r.forced = num(7) != 0.0;
    r.eval_loss = num(8);
    if (!f[9].empty()) r.eval_accuracy = num(9);
    r.epsilon_so_far = num(10);
    out.push_back(r);
  }
  return out;
}

inline nlohmann::json RecordToJson(const IterationRecord& r) {
  nlohmann::json j;
  j["t"] = r.t;
  j["tau"] = r.tau;
  j["mu"] = r.mu;
  j["Q"] = r.temperature;
  j["delta_E"] = r.delta_e;
  j["P"] = r.probability;
  j["accepted"] = r.accepted;
  j["forced"] = r.forced;
  j["eval_loss"] = r.eval_loss;
  j["eval_accuracy"] = r.eval_accuracy ? nlohmann::json(*r.eval_accuracy)
                                       : nlohmann::json(nullptr);
  j["epsilon_so_far"] = r.epsilon_so_far;
  return j;
}

// Run summary plus metadata describing how privacy was charged.
inline nlohmann::json RunToJson(const TrainConfig& config,
                                const TrainResult& result) {
  nlohmann::json j;
  j["name"] = config.label();
  j["method"] = MethodName(config.method);
  j["seed"] = config.seed;
  j["privacy_charging"] = ChargingRule(config.method);
  j["epsilon"] = result.spend.epsilon;
  j["delta"] = result.spend.delta;
  j["best_alpha"] = result.spend.best_alpha;
  j["charged_steps"] = result.charged_steps;
  j["iterations"] = result.records.empty() ? 0 : result.records.back().t;
  j["final_eval_loss"] = result.final_eval.loss;
  j["final_eval_accuracy"] = result.final_eval.accuracy
                                 ? nlohmann::json(*result.final_eval.accuracy)
                                 : nlohmann::json(nullptr);
  if (result.final_test) {
    j["final_test_loss"] = result.final_test->loss;
    j["final_test_accuracy"] = result.final_test->accuracy
                                   ? nlohmann::json(*result.final_test->accuracy)
                                   : nlohmann::json(nullptr);
  }
  j["parameter_count"] = result.params.size();
  return j;
}

inline void WriteTraceJson(const TrainConfig& config, const TrainResult& result,
                           const std::string& path) {
  nlohmann::json j = RunToJson(config, result);
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : result.records) records.push_back(RecordToJson(r));
  j["records"] = std::move(records);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot open " + path);
  os << j.dump(1) << '\n';
  if (!os) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

}  // namespace sadp
