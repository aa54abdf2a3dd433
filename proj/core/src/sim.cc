#include "secmpc/sim.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace secmpc {

const char* ToString(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kSecMpc:
      return "secmpc";
    case ControllerKind::kSequential:
      return "sequential_1stage";
    case ControllerKind::kRegulator:
      return "regulator";
  }
  return "?";
}

ControllerKind ParseController(std::string_view name) {
  if (name == "secmpc") return ControllerKind::kSecMpc;
  if (name == "sequential_1stage") return ControllerKind::kSequential;
  if (name == "regulator") return ControllerKind::kRegulator;
  throw SpecError("unknown controller '" + std::string(name) +
                  "' (expected secmpc, sequential_1stage or regulator)");
}

Vector RegulatorParams::Accel(const Vector& error, const Vector& velocity) const {
  Vector a = omega * omega * error - 2.0 * omega * velocity;
  const double norm = a.norm();
  if (std::isfinite(a_max) && norm > a_max) a *= a_max / norm;
  return a;
}

SystemState MeasureState(const SequenceSpec& spec, const WorldState& world) {
  const int na = spec.layout.actuated_dim();
  SystemState s(spec.layout.InitialConfig(), Vector::Zero(spec.dim()));
  s.x.head(na) = world.agent.x;
  s.xdot.head(na) = world.agent.xdot;
  ReadObjectDofs(spec.layout, world.frames, &s.x);
  return s;
}

void ApplyEvent(const PerturbationEvent& event, WorldState* world) {
  switch (event.kind) {
    case PerturbationKind::kMoveFrame: {
      auto it = world->frames.find(event.frame);
      if (it == world->frames.end()) throw SpecError("move_frame: unknown frame '" + event.frame + "'");
      if (event.position.size() == it->second.position.size()) it->second.position = event.position;
      if (event.heading) it->second.heading = *event.heading;
      break;
    }
    case PerturbationKind::kHoldAgent:
      world->hold = event.on;
      if (event.on) world->agent.xdot.setZero();
      break;
    case PerturbationKind::kImpulseAgent:
      if (event.impulse.size() != world->agent.xdot.size()) throw SpecError("impulse_agent: wrong dimension");
      world->agent.xdot += event.impulse;
      break;
    case PerturbationKind::kAddObstacle: {
      auto it = world->frames.find(event.frame);
      if (it == world->frames.end()) throw SpecError("add_obstacle: unknown frame '" + event.frame + "'");
      it->second.active = true;
      if (event.position.size() == it->second.position.size()) it->second.position = event.position;
      break;
    }
    case PerturbationKind::kRemoveObstacle: {
      auto it = world->frames.find(event.frame);
      if (it == world->frames.end()) throw SpecError("remove_obstacle: unknown frame '" + event.frame + "'");
      it->second.active = false;
      break;
    }
  }
}

void ApplyPush(const PushModel& push, const DofLayout& layout, const Vector& tip_before, bool lifted,
               double heading_noise, std::mt19937_64* rng, WorldState* world) {
  const DofBlock& pusher = layout.block(push.pusher);
  auto it = world->frames.find(push.object);
  if (it == world->frames.end()) throw SpecError("push: unknown object frame '" + push.object + "'");
  Frame& box = it->second;
  const Vector tip = world->agent.x.segment(pusher.offset, pusher.size);
  const Vector d = box.position - tip;
  const double dist = d.norm();
  if (lifted || dist >= push.contact_radius || dist < 1e-12) {
    world->in_contact = false;
    return;
  }
  if (!world->in_contact) {
    world->in_contact = true;
    world->push_heading0 = box.heading;
  }
  const Vector motion = tip - tip_before;
  const double travel = motion.norm();
  if (travel < 1e-12 || motion.dot(d) <= 0.0) return;
  std::normal_distribution<double> normal(0.0, 1.0);
  box.heading += heading_noise * std::sqrt(travel) * normal(*rng);
  Vector perp = Vector::Zero(motion.size());
  if (motion.size() >= 2) {
    perp(0) = -motion(1) / travel;
    perp(1) = motion(0) / travel;
  }
  box.position += motion + push.slip_gain * (box.heading - world->push_heading0) * travel * perp;
}

Simulation::Simulation(Scenario scenario, SimOptions options)
    : scenario_(std::move(scenario)), options_(std::move(options)), rng_(options_.seed) {
  const SequenceSpec& spec = scenario_.spec;
  spec.Validate();
  options_.cycle.Validate();
  if (!(options_.plant_dt > 0.0) || options_.cycle_every < 1) throw SpecError("simulation: bad plant rate");
  if (options_.noise < 0.0) throw SpecError("simulation: noise must be >= 0");
  if (options_.controller == ControllerKind::kSequential) options_.cycle.timing_lookahead = 1;
  duration_ = options_.duration > 0.0 ? options_.duration : scenario_.sim.duration;
  if (!(duration_ > 0.0)) throw SpecError("simulation: duration must be positive");
  const int na = spec.layout.actuated_dim();
  world_.agent = SystemState::AtRest(spec.layout.InitialConfig().head(na));
  if (scenario_.sim.initial_velocity.size() == na) world_.agent.xdot = scenario_.sim.initial_velocity;
  world_.frames = spec.scene;
  last_accel_ = Vector::Zero(na);
  if (options_.apply_events) {
    pending_ = scenario_.events;
    std::stable_sort(pending_.begin(), pending_.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
  }
}

void Simulation::Inject(PerturbationEvent event) { injected_.push_back(std::move(event)); }

std::optional<TraceRecord> Simulation::Advance() {
  if (finished_) return std::nullopt;
  const double h = options_.plant_dt;
  world_.clock = static_cast<double>(step_) * h;
  while (next_event_ < pending_.size() && pending_[next_event_].time <= world_.clock + 1e-9) {
    const PerturbationEvent& e = pending_[next_event_++];
    ApplyEvent(e, &world_);
    event_notes_.push_back(std::string("perturbation ") + ToString(e.kind) + (e.frame.empty() ? "" : " " + e.frame));
  }
  for (const auto& e : injected_) {
    ApplyEvent(e, &world_);
    event_notes_.push_back(std::string("perturbation ") + ToString(e.kind) + (e.frame.empty() ? "" : " " + e.frame));
  }
  injected_.clear();

  std::optional<TraceRecord> rec;
  if (step_ % options_.cycle_every == 0) rec = RunCycle();
  if (!finished_ && world_.clock >= duration_ - 1e-9) {
    finished_ = true;
    summary_.completed = false;
    summary_.total_time = world_.clock;
  }
  if (!finished_) {
    StepPlant();
    ++step_;
  }
  return rec;
}

TraceRecord Simulation::RunCycle() {
  const SequenceSpec& spec = scenario_.spec;
  const int K = spec.num_phases();
  TraceRecord rec;
  rec.clock = world_.clock;
  rec.q = world_.agent.x;
  rec.qdot = world_.agent.xdot;
  for (const auto& [name, f] : world_.frames) rec.frames[name] = {f.position, f.heading};
  rec.accel = last_accel_;
  rec.events = std::move(event_notes_);
  summary_.perturbations += static_cast<int>(rec.events.size());
  event_notes_.clear();

  if (options_.controller == ControllerKind::kRegulator) {
    RegulatorCycle(&rec);
  } else {
    const SystemState measured = MeasureState(spec, world_);
    const CycleReport rep = Step(&cs_, measured, world_.clock, spec, world_.frames, options_.cycle);
    rec.cycle = rep.cycle;
    rec.phase = rep.phase;
    rec.taus = cs_.timing.taus;
    rec.time_to_go = cs_.time_to_go();
    rec.waypoint_iterations = rep.waypoint_iterations;
    rec.timing_iterations = rep.timing_iterations;
    rec.horizon_iterations = rep.horizon_iterations;
    rec.waypoint_ms = rep.waypoint_ms;
    rec.timing_ms = rep.timing_ms;
    rec.horizon_ms = rep.horizon_ms;
    rec.cycle_ms = rep.total_ms;
    rec.waypoint_violation = rep.waypoint_violation;
    rec.running_violation = rep.running_violation;
    rec.frozen = rep.frozen;
    rec.degraded = rep.degraded;
    for (const auto& e : rep.events) {
      std::ostringstream s;
      s << ToString(e.kind) << ' ' << e.from << "->" << e.to;
      rec.events.push_back(s.str());
    }
    if (cs_.done) {
      SystemState check = measured;
      for (size_t j = 0; j < spec.layout.shared_indices().size(); ++j) {
        check.x(spec.layout.shared_indices()[j]) = cs_.shared(static_cast<Eigen::Index>(j));
      }
      const FeatureStack& run = spec.phases[K - 1].running;
      if (run.empty() || run.Violation(check, world_.frames) <= options_.cycle.running_tol) {
        finished_ = true;
        summary_.completed = true;
        summary_.total_time = world_.clock;
      }
    }
  }
  cycle_ms_.push_back(rec.cycle_ms);
  return rec;
}

void Simulation::RegulatorCycle(TraceRecord* rec) {
  const SequenceSpec& spec = scenario_.spec;
  const int K = spec.num_phases();
  const int na = spec.layout.actuated_dim();
  const auto t0 = std::chrono::steady_clock::now();
  SystemState measured = MeasureState(spec, world_);
  if (cs_.shared.size() == static_cast<Eigen::Index>(spec.layout.shared_indices().size())) {
    for (size_t j = 0; j < spec.layout.shared_indices().size(); ++j) {
      measured.x(spec.layout.shared_indices()[j]) = cs_.shared(static_cast<Eigen::Index>(j));
    }
  }
  const FeatureStack& wp = spec.phases[regulator_phase_].waypoint;
  const double viol = wp.empty() ? 0.0 : wp.Violation(SystemState::AtRest(measured.x), world_.frames);
  if (regulator_target_.size() > 0 && viol <= options_.cycle.waypoint_tol &&
      world_.agent.xdot.norm() <= options_.cycle.waypoint_tol) {
    if (regulator_phase_ + 1 < K) {
      rec->events.push_back("progression " + std::to_string(regulator_phase_) + "->" +
                            std::to_string(regulator_phase_ + 1));
      ++regulator_phase_;
      ++summary_.progressions;
    } else {
      rec->events.push_back("done " + std::to_string(regulator_phase_) + "->" + std::to_string(regulator_phase_));
      finished_ = true;
      summary_.completed = true;
      summary_.total_time = world_.clock;
    }
  }
  const bool have_warm = !cs_.waypoints.waypoints.empty();
  cs_.waypoints = SolveWaypoints(spec, world_.frames, measured, regulator_phase_,
                                 have_warm ? &cs_.waypoints : nullptr, options_.cycle.waypoint);
  cs_.shared = cs_.waypoints.shared;
  regulator_target_ = cs_.waypoints.waypoint(regulator_phase_).head(na);
  rec->phase = regulator_phase_;
  rec->cycle = cs_.cycle++;
  rec->waypoint_iterations = cs_.waypoints.outer_iterations;
  rec->waypoint_violation = cs_.waypoints.max_violation;
  rec->degraded = !cs_.waypoints.converged;
  rec->cycle_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void Simulation::StepPlant() {
  const double h = options_.plant_dt;
  const int na = scenario_.spec.layout.actuated_dim();
  SystemState& a = world_.agent;
  const Vector before = a.x;
  if (world_.hold) {
    a.xdot.setZero();
    last_accel_ = Vector::Zero(na);
  } else {
    Vector w = Vector::Zero(na);
    if (options_.noise > 0.0) {
      std::normal_distribution<double> normal(0.0, options_.noise);
      for (int i = 0; i < na; ++i) w(i) = normal(rng_);
    }
    if (options_.controller == ControllerKind::kRegulator) {
      const Vector acc = regulator_target_.size() == na ? options_.regulator.Accel(regulator_target_ - a.x, a.xdot)
                                                        : Vector(Vector::Zero(na));
      const Vector total = acc + w;
      a.x += a.xdot * h + 0.5 * total * h * h;
      a.xdot += total * h;
      last_accel_ = acc;
    } else if (!cs_.reference.empty()) {
      const double t = world_.clock;
      const SplineSample p0 = cs_.reference.Evaluate(t);
      const SplineSample p1 = cs_.reference.Evaluate(t + h);
      a.x += a.xdot * h + (p1.position - p0.position - p0.velocity * h) + 0.5 * w * h * h;
      a.xdot += (p1.velocity - p0.velocity) + w * h;
      last_accel_ = (p1.velocity - p0.velocity) / h;
    }
  }
  if (scenario_.sim.push) {
    const double noise = options_.heading_noise ? *options_.heading_noise : scenario_.sim.push->heading_noise;
    const DofBlock& pusher = scenario_.spec.layout.block(scenario_.sim.push->pusher);
    const int phase = options_.controller == ControllerKind::kRegulator ? regulator_phase_ : cs_.phase;
    const auto& lifted = scenario_.sim.push->lifted_phases;
    ApplyPush(*scenario_.sim.push, scenario_.spec.layout, before.segment(pusher.offset, pusher.size),
              std::find(lifted.begin(), lifted.end(), phase) != lifted.end(), noise, &rng_, &world_);
  }
}

TraceSummary Simulation::Summarize(const std::vector<TraceRecord>& records) const {
  TraceSummary s = summary_;
  s.cycles = static_cast<int>(records.size());
  if (options_.controller != ControllerKind::kRegulator) {
    s.progressions = cs_.progression_count;
    s.backtracks = cs_.backtrack_count;
  }
  s.degraded_cycles = 0;
  s.max_accel = 0.0;
  for (const auto& r : records) {
    s.degraded_cycles += r.degraded ? 1 : 0;
    if (r.accel.size()) s.max_accel = std::max(s.max_accel, r.accel.norm());
  }
  s.healthy = 2 * s.degraded_cycles <= s.cycles;
  if (!records.empty() && records.front().time_to_go) s.predicted_time = *records.front().time_to_go;
  std::vector<double> ms = cycle_ms_;
  if (!ms.empty()) {
    std::nth_element(ms.begin(), ms.begin() + ms.size() / 2, ms.end());
    s.median_cycle_ms = ms[ms.size() / 2];
  }
  return s;
}

Trace Simulate(const Scenario& scenario, const SimOptions& options) {
  Simulation sim(scenario, options);
  Trace trace;
  trace.scenario = scenario.spec.name;
  trace.controller = ToString(options.controller);
  trace.seed = options.seed;
  trace.noise = options.noise;
  while (!sim.finished()) {
    if (auto rec = sim.Advance()) trace.records.push_back(std::move(*rec));
  }
  trace.summary = sim.Summarize(trace.records);
  return trace;
}

double RegulatorTimeToDecay(double x0, double v0, double target, const RegulatorParams& regulator) {
  const double w = regulator.omega;
  const double e0 = std::hypot(x0 - target, v0 / w);
  const double tol = 0.01 * e0;
  auto reached = [&](double x, double v) { return std::abs(x - target) < tol && std::abs(v) / w < tol; };
  if (e0 == 0.0) return 0.0;
  auto acc = [&](double x, double v) {
    Vector e(1), vel(1);
    e(0) = target - x;
    vel(0) = v;
    return regulator.Accel(e, vel)(0);
  };
  const double dt = 1e-3;
  double x = x0, v = v0;
  for (int i = 0; i < 60000; ++i) {
    const double k1x = v, k1v = acc(x, v);
    const double k2x = v + 0.5 * dt * k1v, k2v = acc(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
    const double k3x = v + 0.5 * dt * k2v, k3v = acc(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
    const double k4x = v + dt * k3v, k4v = acc(x + dt * k3x, v + dt * k3v);
    const double xn = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    const double vn = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (reached(xn, vn)) {
      // Linear interpolation of the crossing inside the step.
      const double before = std::max(std::abs(x - target), std::abs(v) / w);
      const double after = std::max(std::abs(xn - target), std::abs(vn) / w);
      const double frac = before > after ? (before - tol) / (before - after) : 1.0;
      return (i + std::clamp(frac, 0.0, 1.0)) * dt;
    }
    x = xn;
    v = vn;
  }
  return INFINITY;
}

}  // namespace secmpc
