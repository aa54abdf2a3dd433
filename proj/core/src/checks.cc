#include "secmpc/checks.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "secmpc/cubic.h"
#include "secmpc/horizon.h"
#include "secmpc/scenario.h"
#include "secmpc/sim.h"
#include "secmpc/timing.h"
#include "secmpc/waypoints.h"

namespace secmpc {
namespace {

constexpr int kPoints = 100;

Vector Uniform(std::mt19937_64* rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(*rng);
  return v;
}

// Composite Simpson on the squared acceleration, which is a quadratic in t,
// so a handful of panels is exact up to rounding.
double QuadratureCost(const CubicPiece& p) {
  const int n = 8;
  const double h = p.tau / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * p.Acceleration(i * h).squaredNorm();
  }
  return s * h / 3.0;
}

CheckResult CubicCostSuite(std::mt19937_64* rng) {
  CheckResult r{"cubic_cost", true, 0.0, 1e-6, ""};
  std::uniform_real_distribution<double> tau(0.05, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const Vector x0 = Uniform(rng, 3, -2, 2), x1 = Uniform(rng, 3, -2, 2);
    const Vector v0 = Uniform(rng, 3, -2, 2), v1 = Uniform(rng, 3, -2, 2);
    const double t = tau(*rng);
    const double psi = EvaluatePieceCost(x0, v0, x1, v1, t).psi;
    const double ref = QuadratureCost(FitCubic(x0, v0, x1, v1, t));
    r.metric = std::max(r.metric, std::abs(psi - ref) / std::max(std::abs(ref), 1e-12));
  }
  r.passed = r.metric <= r.tolerance;
  r.detail = "1000 random pieces against Simpson quadrature";
  return r;
}

CheckResult TimingOptimumSuite() {
  CheckResult r{"timing_optimum", true, 0.0, 1e-4, ""};
  const Vector zero = Vector::Zero(1);
  auto solve = [&](double d) {
    const TimingSolution s = SolveTiming(zero, zero, {Vector::Constant(1, d)}, 1.0);
    return s.taus.front();
  };
  const double t1 = solve(1.0);
  r.metric = std::abs(t1 - std::pow(36.0, 0.25));
  for (double lambda : {0.25, 4.0, 9.0}) {
    r.metric = std::max(r.metric, std::abs(solve(lambda) - std::sqrt(lambda) * t1));
  }
  r.passed = r.metric <= r.tolerance;
  std::ostringstream d;
  d.precision(10);
  d << "tau*(1) = " << t1;
  r.detail = d.str();
  return r;
}

CheckResult FeatureJacobianSuite(std::mt19937_64* rng) {
  CheckResult r{"feature_jacobians", true, 0.0, 1e-4, ""};
  int features = 0;
  for (const auto& name : ShippedScenarioNames()) {
    const Scenario sc = LoadScenario(name);
    const SequenceSpec& spec = sc.spec;
    for (const auto& phase : spec.phases) {
      for (const FeatureStack* stack : {&phase.waypoint, &phase.running, &phase.coupling}) {
        for (const auto& f : stack->features()) {
          ++features;
          for (int i = 0; i < kPoints; ++i) {
            SystemState s(spec.layout.InitialConfig() + Uniform(rng, spec.dim(), -0.5, 0.5),
                          Uniform(rng, spec.dim(), -1, 1));
            const double e = CheckFeatureJacobian(f, s, spec.scene);
            if (e > r.metric) {
              r.metric = e;
              r.detail = name + "/" + phase.name + "/" + f.name();
            }
          }
        }
      }
    }
  }
  r.passed = r.metric <= r.tolerance;
  r.detail = std::to_string(features) + " features" + (r.detail.empty() ? "" : ", worst " + r.detail);
  return r;
}

double MapCheck(const DifferentiableMap& map, const Vector& z) { return map ? CheckJacobian(map, z) : 0.0; }

CheckResult SolverResidualSuite(std::mt19937_64* rng) {
  CheckResult r{"solver_residuals", true, 0.0, 1e-4, ""};
  auto note = [&](double e, const char* what) {
    if (e > r.metric) {
      r.metric = e;
      r.detail = what;
    }
  };
  // Timing.
  for (int i = 0; i < kPoints; ++i) {
    const int K = 1 + i % 4;
    std::vector<Vector> wps;
    for (int k = 0; k < K; ++k) wps.push_back(Uniform(rng, 2, -1, 1));
    const LeastSquaresProblem p = BuildTimingProblem(Uniform(rng, 2, -1, 1), Uniform(rng, 2, -1, 1), wps, 0.7);
    Vector z = Uniform(rng, p.dim, -1, 1);
    for (int k = 0; k < K; ++k) z(k * 3) = std::uniform_real_distribution<double>(0.2, 2.0)(*rng);
    note(CheckJacobian(p.evaluate, z), "timing");
  }
  // Waypoints and horizon on the manipulation scenarios.
  for (const char* name : {"pick_place", "push2d"}) {
    const Scenario sc = LoadScenario(name);
    const SequenceSpec& spec = sc.spec;
    SystemState state = SystemState::AtRest(spec.layout.InitialConfig());
    ReadObjectDofs(spec.layout, spec.scene, &state.x);
    const WaypointProblem wp = BuildWaypointProblem(spec, spec.scene, state, 0);
    Vector mult;
    const Vector base = WaypointWarmStart(wp, spec, nullptr, &mult);
    for (int i = 0; i < kPoints; ++i) {
      const Vector z = base + Uniform(rng, wp.nlp.dim, -0.3, 0.3);
      note(MapCheck(wp.nlp.cost, z), "waypoint cost");
      note(MapCheck(wp.nlp.constraints, z), "waypoint constraints");
    }
    const int na = spec.layout.actuated_dim();
    const Vector q = state.x.head(na);
    const std::vector<Vector> targets = {q + Vector::Constant(na, 0.3)};
    const TimingSolution t = SolveTiming(q, Vector::Zero(na), targets, spec.alpha);
    const CubicSplinePath ref = BuildSpline(0.0, q, Vector::Zero(na), t.taus, targets, t.KnotVelocities(na));
    const int last = spec.num_phases() - 1;
    const HorizonProblem hp = BuildHorizonProblem(spec, spec.scene, state, ref, 0.0, [last](double) { return last; },
                                                  spec.alpha);
    for (int i = 0; i < kPoints; ++i) {
      Vector z(hp.nlp.dim);
      for (int k = 0; k < hp.steps; ++k) {
        z.segment(k * na, na) = ref.Evaluate(0.1 * (k + 1)).position + Uniform(rng, na, -0.1, 0.1);
      }
      note(MapCheck(hp.nlp.cost, z), "horizon cost");
      note(MapCheck(hp.nlp.constraints, z), "horizon constraints");
    }
  }
  r.passed = r.metric <= r.tolerance;
  if (!r.detail.empty()) r.detail = "worst " + r.detail;
  return r;
}

CheckResult TemporalConsistencySuite() {
  CheckResult r{"temporal_consistency", true, 0.0, 1e-6, ""};
  SimOptions opt;
  Simulation sim(LoadScenario("five_waypoints"), opt);
  TimingSolution prev;
  int prev_phase = -1;
  double prev_clock = 0.0;
  int pairs = 0;
  while (!sim.finished()) {
    const auto rec = sim.Advance();
    if (!rec) continue;
    const CycleState& cs = sim.cycle_state();
    if (cs.done) break;
    const TimingSolution& cur = cs.timing;
    const double delta = rec->clock - prev_clock;
    if (prev_phase == cs.phase && !prev.taus.empty() && prev.taus[0] > delta &&
        cur.num_pieces() == prev.num_pieces()) {
      double e = std::abs(cur.taus[0] - (prev.taus[0] - delta));
      for (int k = 1; k < cur.num_pieces(); ++k) e = std::max(e, std::abs(cur.taus[k] - prev.taus[k]));
      for (size_t k = 0; k < cur.velocities.size(); ++k) {
        e = std::max(e, (cur.velocities[k] - prev.velocities[k]).lpNorm<Eigen::Infinity>());
      }
      r.metric = std::max(r.metric, e);
      ++pairs;
    }
    prev = cur;
    prev_phase = cs.phase;
    prev_clock = rec->clock;
  }
  r.passed = pairs > 0 && r.metric <= r.tolerance;
  r.detail = std::to_string(pairs) + " cycle pairs on five_waypoints";
  return r;
}

}  // namespace

std::vector<CheckResult> RunSelfChecks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  out.push_back(CubicCostSuite(&rng));
  out.push_back(TimingOptimumSuite());
  out.push_back(FeatureJacobianSuite(&rng));
  out.push_back(SolverResidualSuite(&rng));
  out.push_back(TemporalConsistencySuite());
  return out;
}

}  // namespace secmpc
