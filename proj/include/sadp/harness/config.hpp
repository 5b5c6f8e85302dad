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

// Experiment configuration: flat "key = value" text, one entry per line,
// '#' starts a comment. Relative data paths resolve against the directory of
// the config file.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "sadp/data.hpp"
#include "sadp/dp_optimizer.hpp"
#include "sadp/error.hpp"
#include "sadp/models.hpp"

namespace sadp {

enum class Method { kDpsgd, kSaDpsgd };
enum class EvalSet { kHeldOut, kTest };
enum class DataKind { kIdx, kCsv, kSynthLinear };

inline std::string_view MethodName(Method m) {
  return m == Method::kDpsgd ? "dpsgd" : "sa_dpsgd";
}
inline std::string_view EvalSetName(EvalSet e) {
  return e == EvalSet::kHeldOut ? "held_out" : "test";
}
inline std::string_view DataKindName(DataKind k) {
  switch (k) {
    case DataKind::kIdx: return "idx";
    case DataKind::kCsv: return "csv";
    case DataKind::kSynthLinear: return "synth_linear";
  }
  return "?";
}
inline std::string_view ClipKindName(ClipKind k) {
  return k == ClipKind::kAbadi ? "abadi" : "auto_s";
}

inline Method ParseMethod(std::string_view s) {
  if (s == "dpsgd") return Method::kDpsgd;
  if (s == "sa_dpsgd") return Method::kSaDpsgd;
  throw Error(ErrorCode::kInvalidConfig, "unknown method '" + std::string(s) + "'");
}
inline EvalSet ParseEvalSet(std::string_view s) {
  if (s == "held_out" || s == "held_out_split") return EvalSet::kHeldOut;
  if (s == "test" || s == "test_set") return EvalSet::kTest;
  throw Error(ErrorCode::kInvalidConfig, "unknown eval_set '" + std::string(s) + "'");
}
inline DataKind ParseDataKind(std::string_view s) {
  if (s == "idx") return DataKind::kIdx;
  if (s == "csv") return DataKind::kCsv;
  if (s == "synth_linear") return DataKind::kSynthLinear;
  throw Error(ErrorCode::kInvalidConfig, "unknown data kind '" + std::string(s) + "'");
}
inline ClipKind ParseClipKind(std::string_view s) {
  if (s == "abadi") return ClipKind::kAbadi;
  if (s == "auto_s") return ClipKind::kAutoS;
  throw Error(ErrorCode::kInvalidConfig, "unknown clip policy '" + std::string(s) + "'");
}

struct DataSource {
  DataKind kind = DataKind::kSynthLinear;
  std::string train_images, train_labels, test_images, test_labels;  // idx
  std::string train_csv, test_csv;                                    // csv
  bool csv_classification = true;
  // Synthetic linear regression.
  Index synth_n = 1000;
  std::vector<double> synth_weights{2.0, -3.0};
  double synth_noise_std = 0.1;
  std::uint64_t synth_seed = 7;
  // Keep only the first n training examples (0 keeps all).
  Index train_limit = 0;
  // Fraction carved off as the test set when no test files are given.
  double test_fraction = 0.2;
};

inline constexpr std::int64_t kUnlimitedIterations =
    std::numeric_limits<std::int64_t>::max();

struct TrainConfig {
  std::string name;  // label in comparisons; defaults to the method name
  Method method = Method::kSaDpsgd;
  ModelSpec model;  // input/output dims are filled in from the data
  ClipPolicy clip;
  double eta = 0.5;
  std::int64_t batch_size = 512;
  double sigma = 1.23;
  std::int64_t max_iterations = kUnlimitedIterations;
  double initial_temperature = 10.0;
  std::int64_t rejection_threshold = 10;
  double delta = 1e-5;
  std::optional<double> eps_budget;
  EvalSet eval_set = EvalSet::kHeldOut;
  double held_out_fraction = 0.1;
  std::uint64_t seed = 0;
  std::uint64_t data_seed = 1234;
  bool clamp_tau_floor = false;
  bool tight_conversion = false;
  std::optional<double> target_accuracy;
  DataSource data;

  std::string label() const {
    return name.empty() ? std::string(MethodName(method)) : name;
  }

  void Validate() const {
    auto check = [](bool ok, const std::string& what) {
      if (!ok) throw Error(ErrorCode::kInvalidConfig, what);
    };
    check(eta > 0.0, "eta must be > 0");
    check(batch_size >= 1, "batch_size must be >= 1");
    check(sigma > 0.0, "sigma must be > 0");
    check(max_iterations >= 1, "max_iterations must be >= 1");
    check(initial_temperature > 0.0, "q0 must be > 0");
    check(rejection_threshold >= 1, "mu0 must be >= 1");
    check(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    check(!eps_budget || *eps_budget > 0.0, "epsilon must be > 0");
    check(held_out_fraction > 0.0 && held_out_fraction < 1.0,
          "held_out_fraction must lie in (0, 1)");
    check(data.test_fraction > 0.0 && data.test_fraction < 1.0,
          "test_fraction must lie in (0, 1)");
    check(clip.clip_norm > 0.0, "clip_norm must be > 0");
    check(clip.kind != ClipKind::kAutoS || clip.gamma > 0.0,
          "gamma must be > 0");
    check(eps_budget.has_value() || max_iterations != kUnlimitedIterations,
          "set epsilon or max_iterations so the run terminates");
    if (model.architecture == Architecture::kMlp) {
      check(!model.hidden_widths.empty(), "mlp needs hidden = <widths>");
    }
  }
};

namespace internal {

inline std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double ConfigDouble(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!ParseDouble(v, out)) {
    throw Error(ErrorCode::kInvalidConfig, key + ": expected a number, got '" + v + "'");
  }
  return out;
}

inline std::int64_t ConfigInt(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorCode::kInvalidConfig, key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

inline bool ConfigBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::kInvalidConfig, key + ": expected a boolean, got '" + v + "'");
}

inline std::vector<std::string> ConfigList(const std::string& v) {
  std::vector<std::string> out;
  for (std::string_view f : SplitCommas(v)) {
    std::string item = Trim(f);
    if (!item.empty()) out.push_back(std::move(item));
  }
  return out;
}

inline std::string FormatNumber(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace internal

// Parses config text. `base_dir` anchors relative paths.
inline TrainConfig ParseConfig(std::string_view text,
                               const std::filesystem::path& base_dir = {}) {
  using namespace internal;
  TrainConfig c;
  auto path_of = [&](const std::string& v) {
    const std::filesystem::path p(v);
    return (p.is_absolute() || base_dir.empty() ? p : base_dir / p).string();
  };
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (Trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = Trim(std::string_view(line).substr(0, eq));
    const std::string v = Trim(std::string_view(line).substr(eq + 1));

    if (key == "name") c.name = v;
    else if (key == "method") c.method = ParseMethod(v);
    else if (key == "model") c.model.architecture = ParseArchitecture(v);
    else if (key == "activation") c.model.activation = ParseActivation(v);
    else if (key == "hidden") {
      c.model.hidden_widths.clear();
      for (const auto& w : ConfigList(v)) c.model.hidden_widths.push_back(ConfigInt(key, w));
    }
    else if (key == "clip") c.clip.kind = ParseClipKind(v);
    else if (key == "clip_norm") c.clip.clip_norm = ConfigDouble(key, v);
    else if (key == "gamma") c.clip.gamma = ConfigDouble(key, v);
    else if (key == "eta") c.eta = ConfigDouble(key, v);
    else if (key == "batch_size") c.batch_size = ConfigInt(key, v);
    else if (key == "sigma") c.sigma = ConfigDouble(key, v);
    else if (key == "max_iterations") {
      c.max_iterations = (v == "unlimited") ? kUnlimitedIterations : ConfigInt(key, v);
    }
    else if (key == "q0") c.initial_temperature = ConfigDouble(key, v);
    else if (key == "mu0") c.rejection_threshold = ConfigInt(key, v);
    else if (key == "delta") c.delta = ConfigDouble(key, v);
    else if (key == "epsilon") {
      if (v == "none") c.eps_budget.reset(); else c.eps_budget = ConfigDouble(key, v);
    }
    else if (key == "eval_set") c.eval_set = ParseEvalSet(v);
    else if (key == "held_out_fraction") c.held_out_fraction = ConfigDouble(key, v);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(ConfigInt(key, v));
    else if (key == "data_seed") c.data_seed = static_cast<std::uint64_t>(ConfigInt(key, v));
    else if (key == "clamp_tau_floor") c.clamp_tau_floor = ConfigBool(key, v);
    else if (key == "tight_conversion") c.tight_conversion = ConfigBool(key, v);
    else if (key == "target_accuracy") {
      if (v == "none") c.target_accuracy.reset(); else c.target_accuracy = ConfigDouble(key, v);
    }
    else if (key == "data") c.data.kind = ParseDataKind(v);
    else if (key == "train_images") c.data.train_images = path_of(v);
    else if (key == "train_labels") c.data.train_labels = path_of(v);
    else if (key == "test_images") c.data.test_images = path_of(v);
    else if (key == "test_labels") c.data.test_labels = path_of(v);
    else if (key == "train_csv") c.data.train_csv = path_of(v);
    else if (key == "test_csv") c.data.test_csv = path_of(v);
    else if (key == "csv_task") {
      if (v == "classification") c.data.csv_classification = true;
      else if (v == "regression") c.data.csv_classification = false;
      else throw Error(ErrorCode::kInvalidConfig, "csv_task must be classification or regression");
    }
    else if (key == "synth_n") c.data.synth_n = ConfigInt(key, v);
    else if (key == "synth_weights") {
      c.data.synth_weights.clear();
      for (const auto& w : ConfigList(v)) c.data.synth_weights.push_back(ConfigDouble(key, w));
    }
    else if (key == "synth_noise_std") c.data.synth_noise_std = ConfigDouble(key, v);
    else if (key == "synth_seed") c.data.synth_seed = static_cast<std::uint64_t>(ConfigInt(key, v));
    else if (key == "train_limit") c.data.train_limit = ConfigInt(key, v);
    else if (key == "test_fraction") c.data.test_fraction = ConfigDouble(key, v);
    else {
      throw Error(ErrorCode::kInvalidConfig,
                  "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  c.Validate();
  return c;
}

inline TrainConfig LoadConfig(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ParseConfig(ss.str(), std::filesystem::path(path).parent_path());
}

// Serializes back to the config format; ParseConfig(ToConfigText(c)) == c.
inline std::string ToConfigText(const TrainConfig& c) {
  using internal::FormatNumber;
  std::ostringstream o;
  auto list = [](const auto& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ",";
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(xs[i])>>) {
        s += FormatNumber(xs[i]);
      } else {
        s += std::to_string(xs[i]);
      }
    }
    return s;
  };
  if (!c.name.empty()) o << "name = " << c.name << "\n";
  o << "method = " << MethodName(c.method) << "\n"
    << "model = " << ArchitectureName(c.model.architecture) << "\n"
    << "activation = " << ActivationName(c.model.activation) << "\n";
  if (!c.model.hidden_widths.empty()) o << "hidden = " << list(c.model.hidden_widths) << "\n";
  o << "clip = " << ClipKindName(c.clip.kind) << "\n"
    << "clip_norm = " << FormatNumber(c.clip.clip_norm) << "\n"
    << "gamma = " << FormatNumber(c.clip.gamma) << "\n"
    << "eta = " << FormatNumber(c.eta) << "\n"
    << "batch_size = " << c.batch_size << "\n"
    << "sigma = " << FormatNumber(c.sigma) << "\n"
    << "max_iterations = "
    << (c.max_iterations == kUnlimitedIterations ? std::string("unlimited")
                                                 : std::to_string(c.max_iterations))
    << "\n"
    << "q0 = " << FormatNumber(c.initial_temperature) << "\n"
    << "mu0 = " << c.rejection_threshold << "\n"
    << "delta = " << FormatNumber(c.delta) << "\n"
    << "epsilon = " << (c.eps_budget ? FormatNumber(*c.eps_budget) : "none") << "\n"
    << "eval_set = " << EvalSetName(c.eval_set) << "\n"
    << "held_out_fraction = " << FormatNumber(c.held_out_fraction) << "\n"
    << "seed = " << c.seed << "\n"
    << "data_seed = " << c.data_seed << "\n"
    << "clamp_tau_floor = " << (c.clamp_tau_floor ? "true" : "false") << "\n"
    << "tight_conversion = " << (c.tight_conversion ? "true" : "false") << "\n"
    << "target_accuracy = "
    << (c.target_accuracy ? FormatNumber(*c.target_accuracy) : "none") << "\n"
    << "data = " << DataKindName(c.data.kind) << "\n";
  const auto& d = c.data;
  auto path = [&](const char* key, const std::string& v) {
    if (!v.empty()) o << key << " = " << v << "\n";
  };
  path("train_images", d.train_images);
  path("train_labels", d.train_labels);
  path("test_images", d.test_images);
  path("test_labels", d.test_labels);
  path("train_csv", d.train_csv);
  path("test_csv", d.test_csv);
  o << "csv_task = " << (d.csv_classification ? "classification" : "regression") << "\n"
    << "synth_n = " << d.synth_n << "\n"
    << "synth_weights = " << list(d.synth_weights) << "\n"
    << "synth_noise_std = " << FormatNumber(d.synth_noise_std) << "\n"
    << "synth_seed = " << d.synth_seed << "\n"
    << "train_limit = " << d.train_limit << "\n"
    << "test_fraction = " << FormatNumber(d.test_fraction) << "\n";
  return o.str();
}

}  // namespace sadp
