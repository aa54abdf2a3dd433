#include "secmpc/cycle.h"

#include <chrono>
#include <cmath>

namespace secmpc {
namespace {

using SteadyClock = std::chrono::steady_clock;

double MillisSince(SteadyClock::time_point t0) {
  return std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
}

double RunningViolation(const SequenceSpec& spec, int phase, const SystemState& s, const Scene& scene) {
  const FeatureStack& run = spec.phases[phase].running;
  return run.empty() ? 0.0 : run.Violation(s, scene);
}

// Resizes the planned timing to `pieces`, keeping leading entries.
void FitTiming(TimingSolution* t, int pieces, int dim, double tau_init) {
  while (t->num_pieces() > pieces) {
    t->taus.pop_back();
    if (!t->velocities.empty()) t->velocities.pop_back();
  }
  while (t->num_pieces() < pieces) {
    if (t->num_pieces() > 0) t->velocities.push_back(Vector::Zero(dim));
    t->taus.push_back(tau_init);
  }
  for (auto& v : t->velocities) {
    if (v.size() != dim) v = Vector::Zero(dim);
  }
}

void DropFirstPiece(TimingSolution* t) {
  t->taus.erase(t->taus.begin());
  if (!t->velocities.empty()) t->velocities.erase(t->velocities.begin());
}

bool Finite(const TimingSolution& t) {
  for (double tau : t.taus) {
    if (!std::isfinite(tau)) return false;
  }
  for (const auto& v : t.velocities) {
    if (!v.allFinite()) return false;
  }
  return true;
}

}  // namespace

void CycleConfig::Validate() const {
  if (!(eps_cutoff > 0 && tau_init > 0 && waypoint_tol > 0 && running_tol > 0 && tube_radius > 0)) {
    throw SpecError("cycle config: eps_cutoff, tau_init, waypoint_tol, running_tol and tube_radius must be > 0");
  }
  if (timing_lookahead < 0) throw SpecError("cycle config: timing_lookahead must be >= 0");
}

const char* ToString(CycleEventKind kind) {
  switch (kind) {
    case CycleEventKind::kProgression:
      return "progression";
    case CycleEventKind::kRetry:
      return "retry";
    case CycleEventKind::kBacktrack:
      return "backtrack";
    case CycleEventKind::kDone:
      return "done";
  }
  return "?";
}

SystemState FilterState(const SystemState& measured, const Vector& ref_pos, const Vector& ref_vel, double radius,
                        int actuated_dim) {
  SystemState out = measured;
  const int na = actuated_dim;
  const Vector err = ref_pos.head(na) - measured.x.head(na);
  const double dist = err.norm();
  if (dist <= radius) {
    out.x.head(na) = ref_pos.head(na);
    out.xdot.head(na) = ref_vel.head(na);
  } else {
    const double w = radius / dist;
    out.x.head(na) = measured.x.head(na) + w * err;
    out.xdot.head(na) = measured.xdot.head(na) + w * (ref_vel.head(na) - measured.xdot.head(na));
  }
  return out;
}

int ExpectedPhaseAt(const CycleState& cs, double t) {
  const int pieces = cs.timing.num_pieces();
  if (pieces == 0) return cs.phase;
  double cum = 0.0;
  for (int k = 0; k < pieces; ++k) {
    cum += cs.timing.taus[k];
    if (cum >= t) return cs.phase + k;
  }
  return cs.phase + pieces - 1;
}

CycleReport Step(CycleState* cs, const SystemState& measured, double clock, const SequenceSpec& spec,
                 const Scene& scene, const CycleConfig& config) {
  const auto t_start = SteadyClock::now();
  const int K = spec.num_phases();
  const int na = spec.layout.actuated_dim();
  if (measured.dim() != spec.dim() || measured.xdot.size() != spec.dim()) {
    throw SpecError("cycle: measured state dimension does not match the layout");
  }
  const bool first = !cs->initialized;
  if (!first && !(clock > cs->last_clock)) throw DomainError("cycle: clock must increase between cycles");

  CycleReport rep;
  rep.cycle = cs->cycle;
  rep.clock = clock;
  rep.delta = first ? 0.0 : clock - cs->last_clock;

  SystemState state = measured;
  ReadObjectDofs(spec.layout, scene, &state.x);
  if (first) cs->shared = spec.layout.InitialConfig()(spec.layout.shared_indices()).eval();
  for (size_t j = 0; j < spec.layout.shared_indices().size(); ++j) {
    state.x(spec.layout.shared_indices()[j]) = cs->shared(static_cast<Eigen::Index>(j));
    state.xdot(spec.layout.shared_indices()[j]) = 0.0;
  }

  if (!first && !cs->done && cs->timing.num_pieces() > 0) {
    // (a) shift the running phase duration.
    cs->timing.taus[0] -= rep.delta;
    // (b) collection check, on the state rewound to the planned knot time.
    if (cs->timing.taus[0] < 0.0) {
      const double overshoot = -cs->timing.taus[0];
      SystemState at_knot = state;
      at_knot.x.head(na) -= overshoot * state.xdot.head(na);
      at_knot.xdot.head(na).setZero();
      const FeatureStack& wp = spec.phases[cs->phase].waypoint;
      rep.collect_violation = wp.empty() ? 0.0 : wp.Violation(at_knot, scene);
      if (rep.collect_violation <= config.waypoint_tol) {
        if (cs->phase + 1 < K) {
          rep.events.push_back({CycleEventKind::kProgression, cs->phase, cs->phase + 1});
          ++cs->phase;
          ++cs->progression_count;
          DropFirstPiece(&cs->timing);
          if (cs->timing.num_pieces() > 0) cs->timing.taus[0] -= overshoot;
        } else {
          rep.events.push_back({CycleEventKind::kDone, cs->phase, cs->phase});
          cs->done = true;
        }
      } else {
        rep.events.push_back({CycleEventKind::kRetry, cs->phase, cs->phase});
        cs->timing.taus[0] = config.tau_init;
      }
    }
    // (c) backtrack while the running constraint of the phase is violated.
    while (!cs->done && cs->phase > 0 &&
           RunningViolation(spec, cs->phase, state, scene) > config.running_tol) {
      rep.events.push_back({CycleEventKind::kBacktrack, cs->phase, cs->phase - 1});
      --cs->phase;
      ++cs->backtrack_count;
      if (cs->timing.num_pieces() > 0) cs->timing.taus[0] = config.tau_init;
      cs->timing.taus.insert(cs->timing.taus.begin(), config.tau_init);
      if (cs->timing.num_pieces() > 1) cs->timing.velocities.insert(cs->timing.velocities.begin(), Vector::Zero(na));
    }
  }
  rep.phase = cs->phase;
  rep.running_violation = RunningViolation(spec, cs->phase, state, scene);

  // (d) tube filter toward the previous reference.
  SystemState filtered = state;
  if (!first && !cs->reference.empty()) {
    const SplineSample ref = cs->reference.Evaluate(clock);
    filtered = FilterState(state, ref.position, ref.velocity, config.tube_radius, na);
  }
  rep.filtered = filtered;

  if (cs->done) {
    rep.done = true;
    cs->timing.taus.assign(cs->timing.num_pieces() > 0 ? 1 : 0, 0.0);
    cs->timing.velocities.clear();
    cs->last_clock = clock;
    cs->initialized = true;
    ++cs->cycle;
    rep.total_ms = MillisSince(t_start);
    return rep;
  }

  // (e) waypoints.
  auto t0 = SteadyClock::now();
  try {
    const bool have_warm = !cs->waypoints.waypoints.empty();
    WaypointSolution ws = SolveWaypoints(spec, scene, filtered, cs->phase, have_warm ? &cs->waypoints : nullptr,
                                         config.waypoint);
    bool finite = true;
    for (const auto& w : ws.waypoints) finite = finite && w.allFinite();
    if (finite) {
      rep.degraded = rep.degraded || !ws.converged;
      cs->waypoints = std::move(ws);
      cs->shared = cs->waypoints.shared;
    } else {
      rep.degraded = true;
    }
  } catch (const EvaluationError&) {
    rep.degraded = true;
  }
  rep.waypoint_ms = MillisSince(t0);
  rep.waypoint_iterations = cs->waypoints.outer_iterations;
  if (cs->waypoints.waypoints.empty() || cs->waypoints.first_phase > cs->phase) {
    // No usable waypoint solution for this phase: hold still.
    rep.degraded = true;
    cs->last_clock = clock;
    cs->initialized = true;
    ++cs->cycle;
    rep.total_ms = MillisSince(t_start);
    return rep;
  }
  rep.waypoint_violation = cs->waypoints.max_violation;

  // (f) timing, unless inside the cutoff.
  const int remaining = K - cs->phase;
  const int pieces = config.timing_lookahead > 0 ? std::min(config.timing_lookahead, remaining) : remaining;
  FitTiming(&cs->timing, pieces, na, config.tau_init);
  std::vector<Vector> targets;
  for (int k = 0; k < pieces; ++k) targets.push_back(cs->waypoints.waypoint(cs->phase + k).head(na));
  const Vector q = filtered.x.head(na);
  const Vector qdot = filtered.xdot.head(na);
  rep.frozen = !first && !cs->reference.empty() && cs->timing.taus[0] <= config.eps_cutoff;
  t0 = SteadyClock::now();
  if (!rep.frozen) {
    TimingSolution sol = SolveTiming(q, qdot, targets, spec.alpha, &cs->timing, config.timing);
    rep.timing_iterations = sol.iterations;
    if (sol.status != SolveStatus::kNonFinite && Finite(sol)) {
      cs->timing = std::move(sol);
    } else {
      rep.degraded = true;
    }
  }
  rep.timing_ms = MillisSince(t0);

  // (g) reference spline anchored at the filtered state.
  if (!rep.frozen) {
    try {
      for (auto& tau : cs->timing.taus) tau = std::max(tau, config.timing.tau_min);
      cs->reference = BuildSpline(clock, q, qdot, cs->timing.taus, targets, cs->timing.KnotVelocities(na));
    } catch (const DomainError&) {
      rep.degraded = true;
    }
  }

  // (h) short horizon.
  if (config.solve_horizon && !cs->reference.empty()) {
    t0 = SteadyClock::now();
    try {
      const CycleState& view = *cs;
      HorizonPath hp = SolveHorizon(spec, scene, filtered, cs->reference, clock,
                                    [&view](double t) { return ExpectedPhaseAt(view, t); }, spec.alpha,
                                    cs->horizon.empty() ? nullptr : &cs->horizon, config.horizon);
      rep.horizon_iterations = hp.outer_iterations;
      rep.horizon_violation = hp.max_violation;
      rep.degraded = rep.degraded || !std::isfinite(hp.objective);
      cs->horizon = std::move(hp);
    } catch (const EvaluationError&) {
      rep.degraded = true;
    }
    rep.horizon_ms = MillisSince(t0);
  }

  cs->last_clock = clock;
  cs->initialized = true;
  ++cs->cycle;
  rep.total_ms = MillisSince(t_start);
  return rep;
}

}  // namespace secmpc
