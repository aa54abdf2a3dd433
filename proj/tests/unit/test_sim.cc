#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "secmpc/scenario.h"
#include "secmpc/sim.h"
#include "secmpc/trace.h"

namespace secmpc {
namespace {

// Root of (1 + t) e^-t = 0.01 by bisection: the time a critically damped
// regulator with omega = 1 needs to bring a unit error to 1%.
double UnitDecayTime() {
  double lo = 1.0, hi = 20.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((1 + mid) * std::exp(-mid) > 0.01 ? lo : hi) = mid;
  }
  return lo;
}

TEST(Regulator, DecayTimeMatchesClosedForm) {
  RegulatorParams p;
  p.omega = 1.0;
  EXPECT_NEAR(RegulatorTimeToDecay(0.0, 0.0, 1.0, p), UnitDecayTime(), 2e-3);
  // Time scales with 1/omega and not with the error size.
  p.omega = 2.0;
  EXPECT_NEAR(RegulatorTimeToDecay(0.0, 0.0, 7.0, p), UnitDecayTime() / 2, 2e-3);
}

TEST(Regulator, ClippingSlowsLargeErrors) {
  RegulatorParams p;
  p.omega = 2.0;
  const double unclipped = RegulatorTimeToDecay(0.0, 0.0, 10.0, p);
  p.a_max = 4.0;
  EXPECT_GT(RegulatorTimeToDecay(0.0, 0.0, 10.0, p), unclipped);
  EXPECT_EQ(RegulatorTimeToDecay(3.0, 0.0, 3.0, p), 0.0);
}

TEST(Regulator, AccelIsClippedByNorm) {
  RegulatorParams p;
  p.omega = 2.0;
  p.a_max = 1.0;
  const Vector a = p.Accel(Eigen::Vector2d(3, 4), Eigen::Vector2d(0, 0));
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
  EXPECT_NEAR(a(0) / a(1), 0.75, 1e-12);
}

TEST(Simulation, ParseController) {
  EXPECT_EQ(ParseController("secmpc"), ControllerKind::kSecMpc);
  EXPECT_EQ(ParseController("sequential_1stage"), ControllerKind::kSequential);
  EXPECT_EQ(ParseController("regulator"), ControllerKind::kRegulator);
  EXPECT_THROW(ParseController("pid"), SpecError);
}

TEST(Simulation, NoiselessPlantStaysOnTheReference) {
  Simulation sim(LoadScenario("five_waypoints"), SimOptions{});
  double worst = 0.0;
  while (!sim.finished()) {
    sim.Advance();
    const CubicSplinePath& ref = sim.cycle_state().reference;
    if (ref.empty()) continue;
    // The plant has already stepped past the clock of the last cycle.
    const double t = static_cast<double>(sim.step_index()) * sim.options().plant_dt;
    worst = std::max(worst, (sim.world().agent.x - ref.Evaluate(t).position).norm());
  }
  EXPECT_LT(worst, 1e-9);
  EXPECT_TRUE(sim.summary().completed);
}

TEST(Simulation, FiveWaypointsFinishesWhenPlanned) {
  const Trace t = Simulate(LoadScenario("five_waypoints"), SimOptions{});
  ASSERT_TRUE(t.summary.completed);
  EXPECT_EQ(t.summary.progressions, 4);
  EXPECT_EQ(t.summary.backtracks, 0);
  EXPECT_NEAR(t.summary.total_time, t.summary.predicted_time, 0.01 * t.summary.predicted_time);
  EXPECT_TRUE(t.summary.healthy);
}

TEST(Simulation, AtGoalCompletesImmediately) {
  const Trace t = Simulate(LoadScenario("at_goal"), SimOptions{});
  ASSERT_TRUE(t.summary.completed);
  EXPECT_LT(t.summary.total_time, 1.0);
  EXPECT_LT(t.summary.max_accel, 1e-6);
}

TEST(Simulation, SameSeedSameTrace) {
  SimOptions opt;
  opt.noise = 0.5;
  opt.seed = 42;
  const Scenario sc = LoadScenario("pick_place");
  Trace a = Simulate(sc, opt), b = Simulate(sc, opt);
  // Timings are wall-clock measurements and legitimately differ.
  for (Trace* t : {&a, &b}) {
    for (auto& r : t->records) r.waypoint_ms = r.timing_ms = r.horizon_ms = r.cycle_ms = 0.0;
    t->summary.median_cycle_ms = 0.0;
  }
  std::ostringstream sa, sb;
  WriteTrace(a, sa);
  WriteTrace(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
  opt.seed = 43;
  EXPECT_NE(Simulate(sc, opt).records.back().q, a.records.back().q);
}

// Each sequential leg is a rest-to-rest cubic, whose optimal duration is
// (36 alpha)^(1/4) sqrt(distance); legs finish on the next 20 ms cycle.
TEST(Simulation, SequentialLegsFollowTheRestToRestLaw) {
  const Scenario sc = LoadScenario("five_waypoints");
  SimOptions opt;
  opt.controller = ControllerKind::kSequential;
  const Trace t = Simulate(sc, opt);
  ASSERT_TRUE(t.summary.completed);
  std::vector<double> ends;
  for (const auto& r : t.records) {
    for (const auto& e : r.events) {
      if (e.rfind("progression", 0) == 0 || e.rfind("done", 0) == 0) ends.push_back(r.clock);
    }
  }
  ASSERT_EQ(ends.size(), 5u);
  Vector prev = sc.spec.layout.InitialConfig();
  double start = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vector& wp = sc.spec.scene.at("wp" + std::to_string(k + 1)).position;
    const double expected = std::pow(36.0 * sc.spec.alpha, 0.25) * std::sqrt((wp - prev).norm());
    EXPECT_NEAR(ends[k] - start, expected, 0.03) << "leg " << k;
    start = ends[k];
    prev = wp;
  }
}

TEST(Simulation, SecMpcBeatsSequentialOnTheShippedWaypoints) {
  const Scenario sc = LoadScenario("five_waypoints");
  SimOptions opt;
  const double secmpc = Simulate(sc, opt).summary.total_time;
  opt.controller = ControllerKind::kSequential;
  EXPECT_LT(secmpc, Simulate(sc, opt).summary.total_time);
}

TEST(Simulation, PushWithoutDisturbanceNeverBacktracks) {
  SimOptions opt;
  opt.heading_noise = 0.0;
  opt.apply_events = false;
  const Trace t = Simulate(LoadScenario("push2d"), opt);
  ASSERT_TRUE(t.summary.completed);
  EXPECT_EQ(t.summary.backtracks, 0);
  EXPECT_EQ(t.summary.perturbations, 0);
}

TEST(Simulation, PushRecoversFromTheMovedTarget) {
  const Trace t = Simulate(LoadScenario("push2d"), SimOptions{});
  ASSERT_TRUE(t.summary.completed);
  EXPECT_GE(t.summary.backtracks, 1);
  EXPECT_EQ(t.summary.perturbations, 1);
  EXPECT_TRUE(t.summary.healthy);
}

TEST(Simulation, HoldThenReleaseStillCompletes) {
  Scenario sc = LoadScenario("five_waypoints");
  const double baseline = Simulate(sc, SimOptions{}).summary.total_time;
  PerturbationEvent on;
  on.time = 1.0;
  on.kind = PerturbationKind::kHoldAgent;
  on.on = true;
  PerturbationEvent off = on;
  off.time = 2.0;
  off.on = false;
  sc.events = {on, off};
  const Trace t = Simulate(sc, SimOptions{});
  ASSERT_TRUE(t.summary.completed);
  EXPECT_GT(t.summary.total_time, baseline + 0.5);
  // While held the agent does not move.
  Vector held;
  for (const auto& r : t.records) {
    if (r.clock > 1.05 && r.clock < 1.95) {
      if (held.size() == 0) held = r.q;
      EXPECT_LT((r.q - held).norm(), 1e-12);
    }
  }
}

TEST(Simulation, MovingAWaypointReplans) {
  Scenario sc = LoadScenario("five_waypoints");
  PerturbationEvent e;
  e.time = 0.5;
  e.kind = PerturbationKind::kMoveFrame;
  e.frame = "wp2";
  e.position = Eigen::Vector3d(0.1, 0.1, 0.1);
  sc.events = {e};
  Simulation sim(sc, SimOptions{});
  bool seen = false;
  while (!sim.finished()) {
    const auto rec = sim.Advance();
    if (rec && rec->clock > 0.55 && !seen && sim.cycle_state().phase <= 1) {
      seen = true;
      EXPECT_LT((sim.cycle_state().waypoints.waypoint(1) - e.position).norm(), 1e-4);
    }
  }
  EXPECT_TRUE(seen);
  EXPECT_TRUE(sim.summary().completed);
}

TEST(Simulation, RegulatorReachesTheGoal) {
  SimOptions opt;
  opt.controller = ControllerKind::kRegulator;
  const Trace t = Simulate(LoadScenario("regulator1d"), opt);
  EXPECT_LT(std::abs(t.records.back().q(0) - 10.0), 0.05);
  EXPECT_FALSE(t.records.back().time_to_go.has_value());
}

TEST(Plant, ImpulseAndHoldEvents) {
  WorldState w;
  w.agent = SystemState::AtRest(Eigen::Vector2d(0, 0));
  PerturbationEvent e;
  e.kind = PerturbationKind::kImpulseAgent;
  e.impulse = Eigen::Vector2d(1, -1);
  ApplyEvent(e, &w);
  EXPECT_EQ(w.agent.xdot, Vector(Eigen::Vector2d(1, -1)));
  e.kind = PerturbationKind::kHoldAgent;
  e.on = true;
  ApplyEvent(e, &w);
  EXPECT_TRUE(w.hold);
}

class PushTest : public ::testing::Test {
 protected:
  void SetUp() override {
    layout = DofLayout({{"tip", DofKind::kActuated, 0, 2, "", Vector::Zero(2)}});
    push.pusher = "tip";
    push.object = "box";
    push.contact_radius = 0.06;
    world.agent = SystemState::AtRest(Eigen::Vector2d(0, 0));
    Frame box;
    box.position = Eigen::Vector2d(0.05, 0);
    world.frames["box"] = box;
  }
  Vector Move(double dx, double dy, bool lifted = false) {
    const Vector before = world.agent.x;
    world.agent.x += Eigen::Vector2d(dx, dy);
    ApplyPush(push, layout, before, lifted, 0.0, &rng, &world);
    return world.frames["box"].position;
  }
  DofLayout layout;
  PushModel push;
  WorldState world;
  std::mt19937_64 rng{1};
};

TEST_F(PushTest, BoxFollowsATowardMotion) {
  EXPECT_LT((Move(0.01, 0) - Vector(Eigen::Vector2d(0.06, 0))).norm(), 1e-12);
  EXPECT_TRUE(world.in_contact);
}

TEST_F(PushTest, PullingAwayLeavesTheBox) {
  EXPECT_LT((Move(-0.01, 0) - Vector(Eigen::Vector2d(0.05, 0))).norm(), 1e-12);
}

TEST_F(PushTest, LiftedPusherNeverTouches) {
  EXPECT_LT((Move(0.01, 0, true) - Vector(Eigen::Vector2d(0.05, 0))).norm(), 1e-12);
  EXPECT_FALSE(world.in_contact);
}

TEST_F(PushTest, HeadingErrorSlipsSideways) {
  Move(0.001, 0);  // establish contact at heading 0
  world.frames["box"].heading = 0.2;
  const Vector before = world.frames["box"].position;
  const Vector after = Move(0.01, 0);
  EXPECT_NEAR(after(0) - before(0), 0.01, 1e-12);
  EXPECT_NEAR(after(1) - before(1), 0.2 * 0.01, 1e-12);
}

}  // namespace
}  // namespace secmpc
