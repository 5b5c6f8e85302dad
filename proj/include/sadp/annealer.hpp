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

// Update screening by simulated annealing.
//
// A candidate whose energy change is dE is accepted with probability
//
//   P = 1             if dE <= 0
//   P = exp(-dE * Q)  if dE > 0
//
// where the temperature Q = Q0 * tau grows with the number of accepted
// updates tau, so worse candidates pass less often as training proceeds.
// After mu0 consecutive rejections the next candidate is accepted regardless.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "sadp/error.hpp"
#include "sadp/rng.hpp"

namespace sadp {

struct AnnealerState {
  std::int64_t t = 0;    // iterations completed
  std::int64_t tau = 0;  // accepted iterations
  std::int64_t mu = 0;   // consecutive rejections
  double temperature = 0.0;
  double initial_temperature = 10.0;
  std::int64_t rejection_threshold = 10;
  double energy = 0.0;
  // Use Q0 * max(tau, 1) so a rejection at tau == 0 does not zero Q.
  bool clamp_tau_floor = false;

  static AnnealerState Initial(double initial_temperature,
                               std::int64_t rejection_threshold, double energy,
                               bool clamp_tau_floor = false) {
    internal::Require(initial_temperature > 0.0 &&
                          std::isfinite(initial_temperature),
                      ErrorCode::kInvalidParameter, "Q0 must be > 0");
    internal::Require(rejection_threshold >= 1, ErrorCode::kInvalidParameter,
                      "mu0 must be >= 1");
    AnnealerState s;
    s.temperature = initial_temperature;
    s.initial_temperature = initial_temperature;
    s.rejection_threshold = rejection_threshold;
    s.energy = energy;
    s.clamp_tau_floor = clamp_tau_floor;
    return s;
  }

  double ScheduledTemperature() const {
    const std::int64_t n = clamp_tau_floor ? std::max<std::int64_t>(tau, 1)
                                           : tau;
    return initial_temperature * static_cast<double>(n);
  }
};

struct Decision {
  bool accepted = false;
  bool forced = false;
  double probability = 0.0;
  double delta_e = 0.0;
};

inline double AcceptanceProbability(double delta_e, double temperature) {
  internal::Require(std::isfinite(delta_e) && std::isfinite(temperature),
                    ErrorCode::kNonFiniteInput,
                    "energy change and temperature must be finite");
  internal::Require(temperature >= 0.0, ErrorCode::kInvalidParameter,
                    "temperature must be >= 0");
  if (delta_e <= 0.0) return 1.0;
  return std::clamp(std::exp(-delta_e * temperature), 0.0, 1.0);
}

// Consumes exactly one uniform draw on every path.
inline Decision Decide(double delta_e, const AnnealerState& state, Rng& rng) {
  const double u = rng.Uniform();
  Decision d;
  d.delta_e = delta_e;
  if (!std::isfinite(delta_e)) {
    // A broken candidate is never taken, not even on the forced path.
    return d;
  }
  d.probability = AcceptanceProbability(delta_e, state.temperature);
  if (state.mu >= state.rejection_threshold) {
    d.accepted = true;
    d.forced = true;
    return d;
  }
  d.accepted = u <= d.probability;
  return d;
}

inline AnnealerState Advance(const AnnealerState& state,
                             const Decision& decision, double new_energy) {
  AnnealerState next = state;
  if (decision.accepted) {
    ++next.tau;
    next.mu = 0;
    next.energy = new_energy;
  } else {
    next.mu = std::min(next.mu + 1, next.rejection_threshold);
  }
  ++next.t;
  next.temperature = next.ScheduledTemperature();
  return next;
}

// Textbook simulated annealing with geometric cooling:
//   prob = exp(-(f(s_new) - f(s)) / T), accept iff random(0,1) < prob,
//   T <- cool * T after each iteration.
// Like the classical formulation it reports s^(n-1), the solution held at
// the start of the final iteration.
template <typename Solution, typename Objective, typename Neighbor>
Solution RunClassicSa(Solution initial, Objective&& objective,
                      Neighbor&& neighbor, double initial_temperature,
                      double cool, std::int64_t iterations, Rng& rng) {
  internal::Require(initial_temperature > 0.0, ErrorCode::kInvalidParameter,
                    "T0 must be > 0");
  internal::Require(cool > 0.0 && cool < 1.0, ErrorCode::kInvalidParameter,
                    "cooling factor must lie in (0, 1)");
  internal::Require(iterations >= 1, ErrorCode::kInvalidParameter,
                    "need at least one iteration");
  Solution current = std::move(initial);
  double current_f = objective(current);
  double temperature = initial_temperature;
  Solution previous = current;
  for (std::int64_t i = 0; i < iterations; ++i) {
    previous = current;
    Solution candidate = neighbor(current, rng);
    const double candidate_f = objective(candidate);
    const double prob = std::exp(-(candidate_f - current_f) / temperature);
    if (rng.Uniform() < prob) {
      current = std::move(candidate);
      current_f = candidate_f;
    }
    temperature *= cool;
  }
  return previous;
}

}  // namespace sadp
