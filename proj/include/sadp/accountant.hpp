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

// Renyi-DP accountant for the sampled Gaussian mechanism.
//
// Per-step cost at integer order alpha is (1/(alpha-1)) log A_alpha(q, sigma)
// with
//
//   A_alpha = sum_{k=0}^{alpha} C(alpha,k) (1-q)^(alpha-k) q^k
//             exp((k^2 - k) / (2 sigma^2)),
//
// composed linearly over charged iterations and converted to (eps, delta)-DP
// by minimizing over a grid of integer orders.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sadp/error.hpp"

namespace sadp {

inline std::vector<int> DefaultAlphaGrid() {
  std::vector<int> grid(63);
  std::iota(grid.begin(), grid.end(), 2);
  return grid;
}

struct AccountantState {
  double q = 0.0;
  double sigma = 1.0;
  double delta = 1e-5;
  std::int64_t tau = 0;
  std::vector<int> alpha_grid = DefaultAlphaGrid();
  bool tight_conversion = false;

  void Validate() const {
    using internal::Require;
    Require(q > 0.0 && q <= 1.0, ErrorCode::kInvalidParameter,
            "sampling rate q must lie in (0, 1]");
    Require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::kInvalidParameter,
            "noise multiplier must be positive");
    Require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidParameter,
            "delta must lie in (0, 1)");
    Require(tau >= 0, ErrorCode::kInvalidParameter, "tau must be >= 0");
    Require(!alpha_grid.empty(), ErrorCode::kInvalidParameter,
            "alpha grid is empty");
    for (int a : alpha_grid) {
      Require(a >= 2, ErrorCode::kInvalidParameter,
              "every Renyi order must be an integer >= 2");
    }
  }
};

struct PrivacySpend {
  double epsilon = 0.0;
  double delta = 0.0;
  int best_alpha = 0;
};

// Per-step RDP of the sampled Gaussian mechanism. q == 0 is accepted as the
// degenerate no-sampling case and costs nothing.
inline double RdpPerStep(double q, double sigma, int alpha) {
  using internal::Require;
  Require(q >= 0.0 && q <= 1.0, ErrorCode::kInvalidParameter,
          "sampling rate q must lie in (0, 1]");
  Require(sigma > 0.0 && std::isfinite(sigma), ErrorCode::kInvalidParameter,
          "noise multiplier must be positive");
  Require(alpha >= 2, ErrorCode::kInvalidParameter,
          "Renyi order must be an integer >= 2");
  if (q == 0.0) return 0.0;

  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);  // -inf when q == 1
  const double lgamma_a1 = std::lgamma(alpha + 1.0);
  const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);

  std::vector<double> log_terms;
  log_terms.reserve(alpha + 1);
  for (int k = 0; k <= alpha; ++k) {
    const int rest = alpha - k;
    if (q == 1.0 && rest > 0) continue;  // (1-q)^rest vanishes
    double lt = lgamma_a1 - std::lgamma(k + 1.0) - std::lgamma(rest + 1.0);
    if (rest > 0) lt += rest * log_1mq;
    if (k > 0) lt += k * log_q;
    lt += (static_cast<double>(k) * k - k) * inv_2s2;
    log_terms.push_back(lt);
  }

  // log-sum-exp; the remainder goes through log1p so that A_alpha close to 1
  // keeps its relative precision.
  const auto max_it = std::max_element(log_terms.begin(), log_terms.end());
  const double lmax = *max_it;
  double rest_sum = 0.0;
  for (auto it = log_terms.begin(); it != log_terms.end(); ++it) {
    if (it != max_it) rest_sum += std::exp(*it - lmax);
  }
  const double log_a = lmax + std::log1p(rest_sum);
  return std::max(0.0, log_a / (alpha - 1));
}

inline double Compose(double per_step_rdp, std::int64_t tau) {
  return static_cast<double>(tau) * per_step_rdp;
}

inline double RdpToDp(int alpha, double rdp_eps, double delta) {
  using internal::Require;
  Require(alpha >= 2, ErrorCode::kInvalidParameter, "alpha must be >= 2");
  Require(rdp_eps >= 0.0, ErrorCode::kInvalidParameter, "rdp epsilon < 0");
  Require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidParameter,
          "delta must lie in (0, 1)");
  return rdp_eps + std::log(1.0 / delta) / (alpha - 1);
}

// Hypothesis-testing conversion; never looser than RdpToDp when
// delta <= 1/alpha. Clamped at zero.
inline double RdpToDpTight(int alpha, double rdp_eps, double delta) {
  using internal::Require;
  Require(alpha >= 2, ErrorCode::kInvalidParameter, "alpha must be >= 2");
  Require(rdp_eps >= 0.0, ErrorCode::kInvalidParameter, "rdp epsilon < 0");
  Require(delta > 0.0 && delta < 1.0, ErrorCode::kInvalidParameter,
          "delta must lie in (0, 1)");
  const double a = alpha;
  const double eps = rdp_eps + std::log((a - 1.0) / a) -
                     (std::log(delta) + std::log(a)) / (a - 1.0);
  return std::max(0.0, eps);
}

// Per-order RDP table for fixed (q, sigma). Evaluating spend from the table is
// exactly the computation Spend() performs, so both agree bit for bit.
class RdpCurve {
 public:
  RdpCurve(const AccountantState& state) : state_(state) {
    state_.Validate();
    per_step_.reserve(state_.alpha_grid.size());
    for (int a : state_.alpha_grid) {
      per_step_.push_back(RdpPerStep(state_.q, state_.sigma, a));
    }
  }

  PrivacySpend SpendAt(std::int64_t tau) const {
    internal::Require(tau >= 0, ErrorCode::kInvalidParameter, "tau < 0");
    PrivacySpend best{std::numeric_limits<double>::infinity(), state_.delta,
                      0};
    for (std::size_t i = 0; i < per_step_.size(); ++i) {
      const int a = state_.alpha_grid[i];
      const double rdp = Compose(per_step_[i], tau);
      const double eps = state_.tight_conversion
                             ? RdpToDpTight(a, rdp, state_.delta)
                             : RdpToDp(a, rdp, state_.delta);
      // Strict comparison: ties go to the earliest (smallest) order.
      if (eps < best.epsilon || (eps == best.epsilon && a < best.best_alpha)) {
        best.epsilon = eps;
        best.best_alpha = a;
      }
    }
    return best;
  }

  const AccountantState& state() const { return state_; }

 private:
  AccountantState state_;
  std::vector<double> per_step_;
};

inline PrivacySpend Spend(const AccountantState& state) {
  return RdpCurve(state).SpendAt(state.tau);
}

// Largest tau whose spend stays within eps_budget (state.tau is ignored).
inline std::int64_t MaxStepsWithin(const AccountantState& state,
                                   double eps_budget) {
  const RdpCurve curve(state);
  const double floor_eps = curve.SpendAt(0).epsilon;
  if (!(floor_eps <= eps_budget)) {
    throw Error(ErrorCode::kBudgetInfeasible,
                "budget " + std::to_string(eps_budget) +
                    " is below the zero-step floor " +
                    std::to_string(floor_eps));
  }
  constexpr std::int64_t kCap = std::int64_t{1} << 62;
  std::int64_t lo = 0;
  std::int64_t hi = 1;
  while (curve.SpendAt(hi).epsilon <= eps_budget) {
    lo = hi;
    if (hi >= kCap) return kCap;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (curve.SpendAt(mid).epsilon <= eps_budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace sadp
