#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "secmpc/cycle.h"
#include "secmpc/scenario.h"
#include "secmpc/trace.h"

namespace secmpc {

enum class ControllerKind { kSecMpc, kSequential, kRegulator };

const char* ToString(ControllerKind kind);
// "secmpc", "sequential_1stage" or "regulator"; SpecError otherwise.
ControllerKind ParseController(std::string_view name);

// Critically damped linear regulator, a = clip(w^2 e - 2 w xdot, a_max),
// clipped by norm.
struct RegulatorParams {
  double omega = 2.0;
  double a_max = INFINITY;

  Vector Accel(const Vector& error, const Vector& velocity) const;
};

struct SimOptions {
  ControllerKind controller = ControllerKind::kSecMpc;
  std::uint64_t seed = 1;
  double duration = -1.0;  // <= 0: the scenario's duration
  double noise = 0.0;      // std of the plant acceleration noise
  std::optional<double> heading_noise;  // overrides the scenario's push noise
  double plant_dt = 0.01;
  int cycle_every = 2;  // plant steps per controller cycle
  bool apply_events = true;
  CycleConfig cycle;
  RegulatorParams regulator;
};

// The plant: actuated double integrator plus the scene.
struct WorldState {
  SystemState agent;  // actuated dofs only
  Scene frames;
  double clock = 0.0;
  bool hold = false;
  bool in_contact = false;
  double push_heading0 = 0.0;
};

// Full configuration state seen by the controller.
SystemState MeasureState(const SequenceSpec& spec, const WorldState& world);

// Applies one event to the world.
void ApplyEvent(const PerturbationEvent& event, WorldState* world);

// Quasi-static planar push after the agent moved from `tip_before`: while in
// contact the box follows the pusher's motion, and slips sideways in
// proportion to its heading drift since contact began. A lifted pusher
// never touches the object.
void ApplyPush(const PushModel& push, const DofLayout& layout, const Vector& tip_before, bool lifted,
               double heading_noise, std::mt19937_64* rng, WorldState* world);

// Online simulation, one plant step at a time. Used by Simulate and by the
// live bridge.
class Simulation {
 public:
  Simulation(Scenario scenario, SimOptions options);

  // Runs the controller if a cycle is due, then advances the plant one step.
  // Returns the cycle record when a cycle ran.
  std::optional<TraceRecord> Advance();
  // Queues an external event for the next step.
  void Inject(PerturbationEvent event);

  bool finished() const { return finished_; }
  const WorldState& world() const { return world_; }
  const CycleState& cycle_state() const { return cs_; }
  const Scenario& scenario() const { return scenario_; }
  const SimOptions& options() const { return options_; }
  const TraceSummary& summary() const { return summary_; }
  double duration() const { return duration_; }
  long step_index() const { return step_; }
  // Finalizes the summary from the records gathered so far.
  TraceSummary Summarize(const std::vector<TraceRecord>& records) const;

 private:
  TraceRecord RunCycle();
  void StepPlant();
  void RegulatorCycle(TraceRecord* rec);

  Scenario scenario_;
  SimOptions options_;
  WorldState world_;
  CycleState cs_;
  std::mt19937_64 rng_;
  std::vector<PerturbationEvent> pending_;  // scripted, sorted
  std::vector<PerturbationEvent> injected_;
  std::vector<std::string> event_notes_;
  Vector last_accel_;
  Vector regulator_target_;
  int regulator_phase_ = 0;
  double duration_ = 0.0;
  long step_ = 0;
  size_t next_event_ = 0;
  bool finished_ = false;
  TraceSummary summary_;
  std::vector<double> cycle_ms_;
};

Trace Simulate(const Scenario& scenario, const SimOptions& options);

// Time until |x - target| and |xdot| / omega both drop below 1% of the
// initial error norm |(x - target, xdot / omega)|, for the 1-D regulator
// (RK4, dt = 1e-3). +inf if not reached within 60 s.
double RegulatorTimeToDecay(double x0, double v0, double target, const RegulatorParams& regulator);

}  // namespace secmpc
