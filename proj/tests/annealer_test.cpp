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

#include "sadp/annealer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sadp/rng.hpp"

namespace sadp {
namespace {

AnnealerState Fresh(double q0 = 10.0, std::int64_t mu0 = 10) {
  return AnnealerState::Initial(q0, mu0, 1.0);
}

TEST(AcceptanceProbabilityTest, ImprovementAlwaysAccepted) {
  EXPECT_EQ(AcceptanceProbability(-0.3, 50.0), 1.0);
  EXPECT_EQ(AcceptanceProbability(0.0, 50.0), 1.0);
}

TEST(AcceptanceProbabilityTest, TemperatureMultiplies) {
  EXPECT_NEAR(AcceptanceProbability(0.1, 10.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(AcceptanceProbability(0.1, 10.0), 0.367879, 1e-6);
  EXPECT_EQ(AcceptanceProbability(0.1, 0.0), 1.0);
}

TEST(AcceptanceProbabilityTest, RejectsNonFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(AcceptanceProbability(nan, 1.0), Error);
  EXPECT_THROW(AcceptanceProbability(std::numeric_limits<double>::infinity(), 1.0),
               Error);
}

TEST(AcceptanceProbabilityTest, Monotone) {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const double de = rng.Uniform(1e-6, 2.0);
    const double de2 = de + rng.Uniform(0.0, 1.0);
    const double q = rng.Uniform(0.0, 100.0);
    const double q2 = q + rng.Uniform(0.0, 10.0);
    EXPECT_GE(AcceptanceProbability(de, q), AcceptanceProbability(de2, q));
    EXPECT_GE(AcceptanceProbability(de, q), AcceptanceProbability(de, q2));
  }
}

TEST(DecideTest, ForcedAfterThreshold) {
  AnnealerState s = Fresh();
  s.mu = 10;
  Rng rng(1);
  const Decision d = Decide(1e6, s, rng);
  EXPECT_TRUE(d.accepted);
  EXPECT_TRUE(d.forced);
}

TEST(DecideTest, ImprovementAcceptedNotForced) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    AnnealerState s = Fresh(rng.Uniform(0.1, 100.0), 1 + rng.NextU64() % 20);
    s.tau = static_cast<std::int64_t>(rng.NextU64() % 100);
    s.temperature = s.ScheduledTemperature();
    s.mu = static_cast<std::int64_t>(rng.NextU64() % s.rejection_threshold);
    const Decision d = Decide(-rng.Uniform(0.0, 5.0), s, rng);
    EXPECT_TRUE(d.accepted);
    EXPECT_FALSE(d.forced);
    EXPECT_EQ(d.probability, 1.0);
  }
}

TEST(DecideTest, NanIsRejectedEvenWhenForced) {
  AnnealerState s = Fresh();
  s.mu = 10;
  Rng rng(3);
  const Decision d = Decide(std::numeric_limits<double>::quiet_NaN(), s, rng);
  EXPECT_FALSE(d.accepted);
  EXPECT_FALSE(d.forced);
  const AnnealerState next = Advance(s, d, 0.0);
  EXPECT_EQ(next.mu, 10);
  EXPECT_EQ(next.energy, s.energy);
}

TEST(DecideTest, ConsumesOneDrawOnEveryPath) {
  AnnealerState forced = Fresh();
  forced.mu = 10;
  const AnnealerState normal = Fresh();
  for (double de : {-1.0, 0.5, 1e6, std::numeric_limits<double>::quiet_NaN()}) {
    for (const AnnealerState& s : {forced, normal}) {
      Rng a(99), b(99);
      Decide(de, s, a);
      b.Uniform();
      EXPECT_EQ(a.NextU64(), b.NextU64());
    }
  }
}

TEST(DecideTest, EmpiricalAcceptanceRate) {
  AnnealerState s = Fresh();
  s.temperature = 20.0;
  Rng rng(12345);
  const int trials = 100000;
  int accepted = 0;
  for (int i = 0; i < trials; ++i) accepted += Decide(0.05, s, rng).accepted;
  const double p = std::exp(-1.0);
  EXPECT_NEAR(static_cast<double>(accepted) / trials, p,
              3.0 * std::sqrt(p * (1 - p) / trials));
}

TEST(AdvanceTest, AcceptFromInitial) {
  const AnnealerState s = Fresh(10.0, 10);
  Decision d;
  d.accepted = true;
  const AnnealerState n = Advance(s, d, 0.5);
  EXPECT_EQ(n.t, 1);
  EXPECT_EQ(n.tau, 1);
  EXPECT_EQ(n.mu, 0);
  EXPECT_EQ(n.temperature, 10.0);
  EXPECT_EQ(n.energy, 0.5);
}

TEST(AdvanceTest, RejectFromInitialZeroesTemperature) {
  const AnnealerState s = Fresh(10.0, 10);
  const AnnealerState n = Advance(s, Decision{}, 0.5);
  EXPECT_EQ(n.t, 1);
  EXPECT_EQ(n.tau, 0);
  EXPECT_EQ(n.mu, 1);
  EXPECT_EQ(n.temperature, 0.0);
  EXPECT_EQ(n.energy, 1.0);
}

TEST(AdvanceTest, ClampTauFloorKeepsTemperature) {
  const AnnealerState s = AnnealerState::Initial(10.0, 10, 1.0, true);
  EXPECT_EQ(Advance(s, Decision{}, 0.5).temperature, 10.0);
}

TEST(AdvanceTest, EleventhDecisionAfterTenRejectionsIsForced) {
  AnnealerState s = Fresh(10.0, 10);
  s = Advance(s, Decision{true, false, 1.0, -1.0}, 0.5);  // tau = 1, Q = 10
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    Decision reject;
    s = Advance(s, reject, 9.0);
  }
  ASSERT_EQ(s.mu, 10);
  const Decision d = Decide(100.0, s, rng);
  EXPECT_TRUE(d.forced);
  EXPECT_TRUE(d.accepted);
  s = Advance(s, d, 100.5);
  EXPECT_EQ(s.mu, 0);
  EXPECT_EQ(s.tau, 2);
  EXPECT_EQ(s.temperature, 20.0);
}

TEST(AdvanceTest, TrajectoryBookkeeping) {
  Rng rng(31);
  for (int run = 0; run < 20; ++run) {
    AnnealerState s = Fresh(rng.Uniform(0.5, 20.0), 1 + rng.NextU64() % 12);
    std::int64_t accepts = 0;
    std::int64_t longest_rejections = 0, streak = 0;
    for (int k = 0; k < 2000; ++k) {
      const double de = rng.Uniform(-0.2, 0.5);
      const Decision d = Decide(de, s, rng);
      const AnnealerState prior = s;
      s = Advance(s, d, s.energy + de);
      accepts += d.accepted;
      streak = d.accepted ? 0 : streak + 1;
      longest_rejections = std::max(longest_rejections, streak);
      EXPECT_EQ(s.t, k + 1);
      EXPECT_EQ(s.tau, accepts);
      EXPECT_LE(s.tau, s.t);
      EXPECT_LE(s.mu, s.rejection_threshold);
      EXPECT_EQ(s.temperature, s.initial_temperature * static_cast<double>(s.tau));
      if (s.energy > prior.energy) {
        // Q = Q0 * tau is zero after a rejection at tau == 0; that is the one
        // state where an uphill move is taken with P == 1.
        const bool zero_temperature = prior.temperature == 0.0 && prior.tau == 0;
        EXPECT_TRUE(d.probability < 1.0 || d.forced || zero_temperature);
      }
    }
    EXPECT_LE(longest_rejections, s.rejection_threshold);
  }
}

TEST(AdvanceTest, UphillMovesNeedProbabilityBelowOneWithTauFloor) {
  Rng rng(32);
  for (int run = 0; run < 20; ++run) {
    AnnealerState s = AnnealerState::Initial(rng.Uniform(0.5, 20.0),
                                             1 + rng.NextU64() % 12, 1.0, true);
    for (int k = 0; k < 2000; ++k) {
      const double de = rng.Uniform(-0.2, 0.5);
      const Decision d = Decide(de, s, rng);
      const double before = s.energy;
      s = Advance(s, d, s.energy + de);
      EXPECT_GT(s.temperature, 0.0);
      if (s.energy > before) {
        EXPECT_TRUE(d.probability < 1.0 || d.forced);
      }
    }
  }
}

TEST(AdvanceTest, RejectionAtTauZeroMakesNextUphillMoveCertain) {
  AnnealerState s = Fresh(10.0, 10);
  s = Advance(s, Decision{}, 5.0);
  ASSERT_EQ(s.temperature, 0.0);
  Rng rng(1);
  const Decision d = Decide(0.7, s, rng);
  EXPECT_EQ(d.probability, 1.0);
  EXPECT_TRUE(d.accepted);
  EXPECT_FALSE(d.forced);
}

TEST(ClassicSaTest, ConstantObjectiveAcceptsEverything) {
  Rng rng(1);
  int proposals = 0;
  const double final_x = RunClassicSa(
      0.0, [](double) { return 3.0; },
      [&](double x, Rng& r) {
        ++proposals;
        return x + r.Uniform(0.5, 1.0);
      },
      1.0, 0.9, 50, rng);
  EXPECT_EQ(proposals, 50);
  // Every step moved right, so s^(49) is at least 49 * 0.5 away.
  EXPECT_GE(final_x, 49 * 0.5);
}

TEST(ClassicSaTest, ReturnsSolutionBeforeLastIteration) {
  Rng rng(2);
  // Deterministic +1 walk on a constant objective: s^(n-1) = n - 1.
  const int final_x = RunClassicSa(
      0, [](int) { return 0.0; }, [](int x, Rng&) { return x + 1; }, 1.0, 0.5, 7,
      rng);
  EXPECT_EQ(final_x, 6);
}

TEST(ClassicSaTest, QuadraticConvergesInMostRuns) {
  int hits = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    const double x = RunClassicSa(
        rng.Uniform(-3.0, 3.0), [](double v) { return v * v; },
        [](double v, Rng& r) { return v + r.Uniform(-0.1, 0.1); }, 1.0, 0.99,
        5000, rng);
    hits += std::abs(x) < 0.5;
  }
  EXPECT_GE(hits, 95);
}

TEST(ClassicSaTest, HotAndSlowCoolingIsRandomWalk) {
  Rng rng(3);
  int accepted = 0;
  double prev = 0.0;
  RunClassicSa(
      0.0, [](double v) { return v * v; },
      [&](double v, Rng& r) {
        if (v != prev) ++accepted;
        prev = v;
        return v + r.Uniform(-1.0, 1.0);
      },
      1e12, 1.0 - 1e-12, 1000, rng);
  EXPECT_GE(accepted, 998);
}

TEST(ClassicSaTest, RejectsInvalidParameters) {
  Rng rng(0);
  auto f = [](double v) { return v; };
  auto nb = [](double v, Rng&) { return v; };
  EXPECT_THROW(RunClassicSa(0.0, f, nb, 0.0, 0.5, 10, rng), Error);
  EXPECT_THROW(RunClassicSa(0.0, f, nb, 1.0, 1.0, 10, rng), Error);
  EXPECT_THROW(RunClassicSa(0.0, f, nb, 1.0, 0.5, 0, rng), Error);
}

}  // namespace
}  // namespace sadp
