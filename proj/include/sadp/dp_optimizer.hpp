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

// Per-example clipping, Gaussian noising of the clipped sum and the plain SGD
// update.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "sadp/error.hpp"
#include "sadp/rng.hpp"
#include "sadp/types.hpp"

namespace sadp {

enum class ClipKind { kAbadi, kAutoS };

struct ClipPolicy {
  ClipKind kind = ClipKind::kAbadi;
  double clip_norm = 0.1;
  // Stability constant, auto_s only.
  double gamma = 0.01;

  void Validate() const {
    internal::Require(clip_norm > 0.0 && std::isfinite(clip_norm),
                      ErrorCode::kInvalidParameter, "clip norm must be > 0");
    if (kind == ClipKind::kAutoS) {
      internal::Require(gamma > 0.0 && std::isfinite(gamma),
                        ErrorCode::kInvalidParameter,
                        "auto_s stability constant must be > 0");
    }
  }
};

struct NoisePolicy {
  double sigma = 1.0;
  std::int64_t lot_size = 1;

  void Validate() const {
    internal::Require(sigma > 0.0 && std::isfinite(sigma),
                      ErrorCode::kInvalidParameter,
                      "noise multiplier must be > 0");
    internal::Require(lot_size >= 1, ErrorCode::kInvalidParameter,
                      "lot size must be >= 1");
  }
};

// Factor applied to a gradient of l2 norm `norm`.
//   abadi:  1 / max(1, norm / C)
//   auto_s: C / (norm + gamma)
inline double ClipScale(double norm, const ClipPolicy& policy) {
  switch (policy.kind) {
    case ClipKind::kAbadi:
      return norm > policy.clip_norm ? policy.clip_norm / norm : 1.0;
    case ClipKind::kAutoS:
      return policy.clip_norm / (norm + policy.gamma);
  }
  return 1.0;
}

inline ParameterVector Clip(const ParameterVector& grad,
                            const ClipPolicy& policy) {
  policy.Validate();
  internal::Require(grad.allFinite(), ErrorCode::kNonFiniteInput,
                    "gradient has NaN or Inf coordinates");
  const double norm = grad.norm();
  if (policy.kind == ClipKind::kAbadi && norm <= policy.clip_norm) {
    return grad;
  }
  return grad * ClipScale(norm, policy);
}

// Adds N(0, (sigma C)^2) independently to every coordinate of `sum` and
// divides by the nominal lot size.
inline ParameterVector NoiseAndAverage(ParameterVector sum,
                                       const NoisePolicy& noise,
                                       double clip_norm, Rng& rng) {
  noise.Validate();
  internal::Require(clip_norm > 0.0, ErrorCode::kInvalidParameter,
                    "clip norm must be > 0");
  const double stddev = noise.sigma * clip_norm;
  for (Index i = 0; i < sum.size(); ++i) sum[i] += stddev * rng.Normal();
  sum /= static_cast<double>(noise.lot_size);
  return sum;
}

// (sum_i clipped_i + z) / B. The sum runs in list order, so the result is a
// deterministic function of the inputs and the generator state.
inline ParameterVector NoisyAverage(std::span<const ParameterVector> clipped,
                                    Index dim, const NoisePolicy& noise,
                                    double clip_norm, Rng& rng) {
  ParameterVector sum = ParameterVector::Zero(dim);
  for (const ParameterVector& g : clipped) {
    internal::Require(g.size() == dim, ErrorCode::kDimensionMismatch,
                      "clipped gradient has the wrong length");
    sum += g;
  }
  return NoiseAndAverage(std::move(sum), noise, clip_norm, rng);
}

inline ParameterVector SgdStep(const ParameterVector& w,
                               const ParameterVector& g_tilde, double eta) {
  internal::Require(w.size() == g_tilde.size(), ErrorCode::kDimensionMismatch,
                    "parameter and gradient lengths differ");
  internal::Require(eta > 0.0 && std::isfinite(eta),
                    ErrorCode::kInvalidParameter, "learning rate must be > 0");
  return w - eta * g_tilde;
}

}  // namespace sadp
