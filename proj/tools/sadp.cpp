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

// sadp: train, compare and privacy-calculator front end.
//
// Exit codes: 0 success, 2 invalid config or arguments, 3 budget infeasible,
// 4 io error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sadp/sadp.hpp"

namespace {

constexpr int kExitInvalidConfig = 2;
constexpr int kExitBudgetInfeasible = 3;
constexpr int kExitIoError = 4;

int ExitCodeFor(sadp::ErrorCode code) {
  switch (code) {
    case sadp::ErrorCode::kBudgetInfeasible:
      return kExitBudgetInfeasible;
    case sadp::ErrorCode::kIoError:
    case sadp::ErrorCode::kBadMagic:
    case sadp::ErrorCode::kTruncatedFile:
    case sadp::ErrorCode::kCountMismatch:
      return kExitIoError;
    default:
      return kExitInvalidConfig;
  }
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  bool clamp_tau_floor = false;
  std::string eval_set;
};

void Apply(const Overrides& o, sadp::TrainConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.clamp_tau_floor) c.clamp_tau_floor = true;
  if (!o.eval_set.empty()) c.eval_set = sadp::ParseEvalSet(o.eval_set);
  c.Validate();
}

std::filesystem::path EnsureDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw sadp::Error(sadp::ErrorCode::kIoError, "cannot create " + dir);
  return dir;
}

int RunTrain(const std::string& config_path, const Overrides& overrides,
             const std::string& out_dir, bool json) {
  sadp::TrainConfig config = sadp::LoadConfig(config_path);
  Apply(overrides, config);
  const sadp::TrainResult result = sadp::Train(config);
  const auto dir = EnsureDir(out_dir);
  sadp::WriteTraceCsv(result.records, (dir / "trace.csv").string());
  if (json) sadp::WriteTraceJson(config, result, (dir / "trace.json").string());
  sadp::WriteCheckpoint((dir / "model.ckpt").string(), result.params);
  const nlohmann::json summary = sadp::RunToJson(config, result);
  {
    std::ofstream os(dir / "summary.json", std::ios::binary | std::ios::trunc);
    os << summary.dump(1) << '\n';
    if (!os) throw sadp::Error(sadp::ErrorCode::kIoError, "cannot write summary.json");
  }
  std::cout << summary.dump(1) << '\n';
  return 0;
}

int RunCompare(const std::vector<std::string>& config_paths,
               const std::vector<std::uint64_t>& seeds, const Overrides& overrides,
               const std::string& out_dir) {
  std::vector<sadp::TrainConfig> configs;
  for (const auto& p : config_paths) {
    configs.push_back(sadp::LoadConfig(p));
    Apply(overrides, configs.back());
  }
  const auto rows = sadp::Compare(configs, seeds);
  const auto dir = EnsureDir(out_dir);
  sadp::WriteSummaryCsv(rows, (dir / "summary.csv").string());
  sadp::WriteSummaryJson(rows, (dir / "summary.json").string());
  std::ifstream is(dir / "summary.csv");
  std::cout << is.rdbuf();
  return 0;
}

int RunPrivacy(double q, double sigma, double delta, std::int64_t tau,
               std::optional<double> budget, bool tight) {
  sadp::AccountantState state;
  state.q = q;
  state.sigma = sigma;
  state.delta = delta;
  state.tau = tau;
  state.tight_conversion = tight;
  const sadp::PrivacySpend spend = sadp::Spend(state);
  nlohmann::json j{{"q", q},
                   {"sigma", sigma},
                   {"delta", delta},
                   {"tau", tau},
                   {"epsilon", spend.epsilon},
                   {"best_alpha", spend.best_alpha},
                   {"conversion", tight ? "tight" : "standard"}};
  if (budget) {
    j["eps_budget"] = *budget;
    j["max_steps"] = sadp::MaxStepsWithin(state, *budget);
  }
  std::cout << j.dump(1) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DP-SGD with simulated-annealing update screening"};
  app.require_subcommand(1);

  Overrides overrides;
  std::uint64_t seed_value = 0;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_value, "Override the config seed")
        ->each([&](const std::string&) { overrides.seed = seed_value; });
    sub->add_flag("--clamp-tau-floor", overrides.clamp_tau_floor,
                  "Use Q = Q0 * max(tau, 1)");
    sub->add_option("--eval-set", overrides.eval_set,
                    "Energy evaluation set: held_out or test")
        ->check(CLI::IsMember({"held_out", "test"}));
  };

  std::string config_path;
  std::string out_dir = "out";
  bool json = false;
  auto* train = app.add_subcommand("train", "Run one training job");
  train->add_option("--config", config_path, "Config file")->required();
  train->add_option("--out", out_dir, "Output directory");
  train->add_flag("--json", json, "Also write trace.json");
  add_overrides(train);

  std::vector<std::string> config_paths;
  std::vector<std::uint64_t> seeds;
  auto* compare = app.add_subcommand("compare", "Compare configs over seeds");
  compare->add_option("--configs", config_paths, "Config files")
      ->required()
      ->delimiter(',');
  compare->add_option("--seeds", seeds, "Seeds")->required()->delimiter(',');
  compare->add_option("--out", out_dir, "Output directory");
  add_overrides(compare);

  double q = 0.0, sigma = 0.0, delta = 1e-5;
  std::int64_t tau = 0;
  std::optional<double> budget;
  bool tight = false;
  auto* privacy = app.add_subcommand("privacy", "Accountant calculator");
  privacy->add_option("--q", q, "Sampling rate B/N")->required();
  privacy->add_option("--sigma", sigma, "Noise multiplier")->required();
  privacy->add_option("--delta", delta, "Target delta")->required();
  privacy->add_option("--tau", tau, "Charged iterations")->required();
  privacy->add_option("--budget", budget, "Also report max steps within this epsilon");
  privacy->add_flag("--tight", tight, "Use the tighter RDP-to-DP conversion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalidConfig;
  }

  try {
    if (*train) return RunTrain(config_path, overrides, out_dir, json);
    if (*compare) return RunCompare(config_paths, seeds, overrides, out_dir);
    if (*privacy) return RunPrivacy(q, sigma, delta, tau, budget, tight);
  } catch (const sadp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
