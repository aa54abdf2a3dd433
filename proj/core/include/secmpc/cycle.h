#pragma once

#include <string>
#include <vector>

#include "secmpc/cubic.h"
#include "secmpc/horizon.h"
#include "secmpc/model.h"
#include "secmpc/timing.h"
#include "secmpc/waypoints.h"

namespace secmpc {

struct CycleConfig {
  double eps_cutoff = 0.1;     // seconds; timing frozen below this
  double tau_init = 0.5;       // seconds
  double waypoint_tol = 0.02;  // collection threshold on the waypoint feature
  double running_tol = 0.05;   // backtracking threshold on the running feature
  double tube_radius = 0.01;   // actuated configuration units
  // Number of upcoming waypoints the timing sees; 0 means all. 1 gives the
  // sequential baseline: every leg ends at rest.
  int timing_lookahead = 0;
  bool solve_horizon = true;
  TimingOptions timing;
  WaypointOptions waypoint;
  HorizonOptions horizon;

  // Throws SpecError unless all thresholds are positive.
  void Validate() const;
};

struct CycleState {
  bool initialized = false;
  bool done = false;
  int phase = 0;  // kappa, 0-based
  // Timing of the planned pieces: taus[0] belongs to phase kappa.
  TimingSolution timing;
  WaypointSolution waypoints;
  Vector shared;  // current estimate of the shared dofs
  CubicSplinePath reference;
  HorizonPath horizon;
  double last_clock = 0.0;
  int cycle = 0;
  int backtrack_count = 0;
  int progression_count = 0;

  // Sum of the planned durations.
  double time_to_go() const { return timing.total_time(); }
};

enum class CycleEventKind { kProgression, kRetry, kBacktrack, kDone };

const char* ToString(CycleEventKind kind);

struct CycleEvent {
  CycleEventKind kind = CycleEventKind::kProgression;
  int from = 0;
  int to = 0;
};

struct CycleReport {
  int cycle = 0;
  double clock = 0.0;
  double delta = 0.0;
  int phase = 0;
  bool done = false;
  bool frozen = false;
  bool degraded = false;
  std::vector<CycleEvent> events;
  SystemState filtered;
  double collect_violation = -1.0;  // -1: no collection check this cycle
  double running_violation = 0.0;
  double waypoint_violation = 0.0;
  double horizon_violation = 0.0;
  int waypoint_iterations = 0;
  int timing_iterations = 0;
  int horizon_iterations = 0;
  double waypoint_ms = 0.0;
  double timing_ms = 0.0;
  double horizon_ms = 0.0;
  double total_ms = 0.0;
};

// Tube filter on the actuated dofs (the first `actuated_dim` entries): snaps
// to the reference inside radius r, otherwise moves r toward it.
SystemState FilterState(const SystemState& measured, const Vector& ref_pos, const Vector& ref_vel, double radius,
                        int actuated_dim);

// Phase whose segment contains time t after the last cycle, by cumulative
// planned durations, clamped at the last planned phase.
int ExpectedPhaseAt(const CycleState& cs, double t);

// One controller cycle at clock T. `measured` is the full configuration
// state; object dofs are re-read from `scene` and shared dofs are replaced by
// the controller's estimate. Never throws on solver trouble: the report is
// flagged degraded and previous solutions are kept.
CycleReport Step(CycleState* cs, const SystemState& measured, double clock, const SequenceSpec& spec,
                 const Scene& scene, const CycleConfig& config);

}  // namespace secmpc
