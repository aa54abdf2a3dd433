#include <cmath>

#include <gtest/gtest.h>

#include "secmpc/cycle.h"
#include "secmpc/scenario.h"

namespace secmpc {
namespace {

constexpr double kDt = 0.02;

// Measured state that follows the current reference exactly.
SystemState Follow(const SequenceSpec& spec, const CycleState& cs, double clock) {
  SystemState s = SystemState::AtRest(spec.layout.InitialConfig());
  ReadObjectDofs(spec.layout, spec.scene, &s.x);
  const int na = spec.layout.actuated_dim();
  if (!cs.reference.empty()) {
    const SplineSample r = cs.reference.Evaluate(clock);
    s.x.head(na) = r.position;
    s.xdot.head(na) = r.velocity;
  }
  return s;
}

bool HasEvent(const CycleReport& r, CycleEventKind kind) {
  for (const auto& e : r.events) {
    if (e.kind == kind) return true;
  }
  return false;
}

TEST(Cycle, FilterSnapsInsideTheTube) {
  SystemState m(Eigen::Vector3d(0, 0, 7), Eigen::Vector3d(1, 1, 7));
  const SystemState f = FilterState(m, Eigen::Vector3d(0.005, 0, 0), Eigen::Vector3d(2, 2, 0), 0.01, 2);
  EXPECT_DOUBLE_EQ(f.x(0), 0.005);
  EXPECT_DOUBLE_EQ(f.xdot(0), 2.0);
  EXPECT_DOUBLE_EQ(f.x(2), 7.0);  // non-actuated untouched
  EXPECT_DOUBLE_EQ(f.xdot(2), 7.0);
}

TEST(Cycle, FilterMovesByTheRadiusOutsideTheTube) {
  SystemState m(Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0));
  const SystemState f = FilterState(m, Eigen::Vector2d(3, 4), Eigen::Vector2d(5, 0), 0.5, 2);
  EXPECT_NEAR(f.x(0), 0.3, 1e-12);
  EXPECT_NEAR(f.x(1), 0.4, 1e-12);
  EXPECT_NEAR(f.xdot(0), 0.5, 1e-12);
}

TEST(Cycle, ExpectedPhaseUsesCumulativeDurations) {
  CycleState cs;
  cs.phase = 2;
  cs.timing.taus = {0.5, 1.0, 0.7};
  EXPECT_EQ(ExpectedPhaseAt(cs, 0.1), 2);
  EXPECT_EQ(ExpectedPhaseAt(cs, 0.5), 2);
  EXPECT_EQ(ExpectedPhaseAt(cs, 0.6), 3);
  EXPECT_EQ(ExpectedPhaseAt(cs, 2.0), 4);
  EXPECT_EQ(ExpectedPhaseAt(cs, 9.0), 4);
}

TEST(Cycle, RejectsInvalidConfig) {
  CycleConfig c;
  c.tube_radius = 0.0;
  EXPECT_THROW(c.Validate(), SpecError);
  c = {};
  c.timing_lookahead = -1;
  EXPECT_THROW(c.Validate(), SpecError);
}

TEST(Cycle, ClockMustIncrease) {
  const SequenceSpec spec = LoadScenario("five_waypoints").spec;
  CycleState cs;
  const CycleConfig cfg;
  Step(&cs, Follow(spec, cs, 0.0), 0.0, spec, spec.scene, cfg);
  EXPECT_THROW(Step(&cs, Follow(spec, cs, 0.0), 0.0, spec, spec.scene, cfg), DomainError);
}

// With perfect tracking, each cycle's plan is the previous plan advanced by
// the elapsed time.
TEST(Cycle, TemporalConsistencyUnderPerfectTracking) {
  const SequenceSpec spec = LoadScenario("five_waypoints").spec;
  CycleConfig cfg;
  cfg.solve_horizon = false;
  CycleState cs;
  TimingSolution prev;
  int prev_phase = -1;
  int pairs = 0, progressions = 0;
  double worst = 0.0;
  bool done = false;
  for (int i = 0; i < 2000 && !done; ++i) {
    const double t = i * kDt;
    const CycleReport r = Step(&cs, Follow(spec, cs, t), t, spec, spec.scene, cfg);
    done = r.done;
    progressions += HasEvent(r, CycleEventKind::kProgression);
    EXPECT_FALSE(HasEvent(r, CycleEventKind::kRetry));
    EXPECT_FALSE(HasEvent(r, CycleEventKind::kBacktrack));
    if (!done && prev_phase == cs.phase && prev.num_pieces() == cs.timing.num_pieces() && prev.taus[0] > kDt) {
      worst = std::max(worst, std::abs(cs.timing.taus[0] - (prev.taus[0] - kDt)));
      for (int k = 1; k < cs.timing.num_pieces(); ++k) worst = std::max(worst, std::abs(cs.timing.taus[k] - prev.taus[k]));
      ++pairs;
    }
    prev = cs.timing;
    prev_phase = cs.phase;
  }
  EXPECT_TRUE(done);
  EXPECT_EQ(progressions, 4);
  EXPECT_GT(pairs, 500);
  EXPECT_LE(worst, 1e-6);
}

// Track until the timing freezes near the first knot, then stall short of
// the waypoint: the knot passes without collection.
TEST(Cycle, RetryWhenTheWaypointIsMissed) {
  const SequenceSpec spec = LoadScenario("five_waypoints").spec;
  CycleConfig cfg;
  cfg.solve_horizon = false;
  CycleState cs;
  double t = 0.0;
  for (int i = 0; i < 1000; ++i, t += kDt) {
    const CycleReport r = Step(&cs, Follow(spec, cs, t), t, spec, spec.scene, cfg);
    if (r.frozen) break;
  }
  ASSERT_EQ(cs.phase, 0);
  SystemState stuck = Follow(spec, cs, t);
  stuck.x(0) -= 0.1;
  stuck.xdot.setZero();
  bool retried = false;
  for (int i = 0; i < 20 && !retried; ++i) {
    t += kDt;
    const CycleReport r = Step(&cs, stuck, t, spec, spec.scene, cfg);
    if (HasEvent(r, CycleEventKind::kRetry)) {
      retried = true;
      EXPECT_GT(r.collect_violation, cfg.waypoint_tol);
    }
  }
  EXPECT_TRUE(retried);
  EXPECT_EQ(cs.phase, 0);
  EXPECT_GT(cs.timing.taus[0], 0.0);
}

TEST(Cycle, BacktracksWhenTheRunningConstraintBreaks) {
  const Scenario sc = LoadScenario("push2d");
  const SequenceSpec& spec = sc.spec;
  Scene scene = spec.scene;
  CycleConfig cfg;
  CycleState cs;
  double t = 0.0;
  for (int i = 0; i < 1000 && cs.phase < 2; ++i, t += kDt) Step(&cs, Follow(spec, cs, t), t, spec, scene, cfg);
  ASSERT_EQ(cs.phase, 2);
  // Knock the box sideways off the push line.
  scene.at("red_box").position(1) += 0.3;
  const CycleReport r = Step(&cs, Follow(spec, cs, t), t, spec, scene, cfg);
  ASSERT_EQ(r.events.size(), 2u);
  EXPECT_EQ(r.events[0].kind, CycleEventKind::kBacktrack);
  EXPECT_EQ(r.events[0].from, 2);
  EXPECT_EQ(r.events[1].to, 0);
  EXPECT_EQ(cs.phase, 0);
  EXPECT_EQ(cs.backtrack_count, 2);
  EXPECT_EQ(cs.timing.num_pieces(), spec.num_phases());
  EXPECT_FALSE(r.degraded);
}

TEST(Cycle, TimingFreezesNearTheKnot) {
  const SequenceSpec spec = LoadScenario("five_waypoints").spec;
  CycleConfig cfg;
  cfg.solve_horizon = false;
  CycleState cs;
  bool frozen = false;
  for (int i = 0; i < 500 && !frozen; ++i) {
    const double t = i * kDt;
    const CycleReport r = Step(&cs, Follow(spec, cs, t), t, spec, spec.scene, cfg);
    if (r.frozen) {
      frozen = true;
      EXPECT_LT(cs.timing.taus[0], cfg.eps_cutoff + 1e-9);
    }
  }
  EXPECT_TRUE(frozen);
}

TEST(Cycle, SequentialLookaheadEndsEveryLegAtRest) {
  const SequenceSpec spec = LoadScenario("five_waypoints").spec;
  CycleConfig cfg;
  cfg.timing_lookahead = 1;
  CycleState cs;
  Step(&cs, Follow(spec, cs, 0.0), 0.0, spec, spec.scene, cfg);
  ASSERT_EQ(cs.timing.num_pieces(), 1);
  const double d = spec.scene.at("wp1").position.norm();
  EXPECT_NEAR(cs.timing.taus[0], std::pow(36.0 * spec.alpha, 0.25) * std::sqrt(d), 1e-4);
}

}  // namespace
}  // namespace secmpc
