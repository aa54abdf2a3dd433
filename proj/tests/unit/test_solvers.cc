#include <random>

#include <gtest/gtest.h>

#include "secmpc/auglag.h"
#include "secmpc/gauss_newton.h"
#include "secmpc/horizon.h"
#include "secmpc/linalg.h"
#include "secmpc/scenario.h"
#include "secmpc/timing.h"
#include "secmpc/waypoints.h"
#include "test_util.h"

namespace secmpc {
namespace {

using testing::RandomVec;

TEST(GaussNewton, Rosenbrock) {
  LeastSquaresProblem p;
  p.dim = 2;
  p.evaluate = [](const Vector& z, Vector* r, Matrix* J) {
    r->resize(2);
    (*r) << 10 * (z(1) - z(0) * z(0)), 1 - z(0);
    if (J) {
      J->resize(2, 2);
      (*J) << -20 * z(0), 10, -1, 0;
    }
  };
  Vector init(2);
  init << -1.2, 1.0;
  const GaussNewtonResult r = MinimizeGaussNewton(p, init);
  ASSERT_TRUE(r.ok()) << ToString(r.status);
  EXPECT_NEAR(r.z(0), 1.0, 1e-6);
  EXPECT_NEAR(r.z(1), 1.0, 1e-6);
}

TEST(GaussNewton, RespectsLowerBounds) {
  LeastSquaresProblem p;
  p.dim = 1;
  p.evaluate = [](const Vector& z, Vector* r, Matrix* J) {
    *r = z - Vector::Constant(1, -2.0);
    if (J) *J = Matrix::Identity(1, 1);
  };
  p.lower_bounds = Vector::Constant(1, 0.5);
  const GaussNewtonResult r = MinimizeGaussNewton(p, Vector::Constant(1, 3.0));
  EXPECT_NEAR(r.z(0), 0.5, 1e-9);
  EXPECT_TRUE(r.ok());
}

TEST(Linalg, BandedSolveMatchesDense) {
  std::mt19937_64 rng(31);
  for (int bw : {1, 2, 5}) {
    for (int border : {0, 3}) {
      const int n = 30;
      Matrix a = Matrix::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = std::max(0, i - bw); j <= i; ++j) a(i, j) = a(j, i) = std::uniform_real_distribution<double>(-1, 1)(rng);
      }
      for (int i = n - border; i < n; ++i) {
        for (int j = 0; j < n; ++j) a(i, j) = a(j, i) = std::uniform_real_distribution<double>(-1, 1)(rng);
      }
      a += n * Matrix::Identity(n, n);
      const Vector b = RandomVec(rng, n, -1, 1);
      Vector x;
      ASSERT_TRUE(SolveSymmetric(a, b, Sparsity::Banded(bw, border), &x));
      EXPECT_LT((x - a.ldlt().solve(b)).norm(), 1e-10);
    }
  }
}

TEST(Linalg, BandedCholeskyRejectsIndefinite) {
  Matrix a = Matrix::Identity(4, 4);
  a(2, 2) = -1;
  BandedCholesky chol;
  EXPECT_FALSE(chol.Factorize(a, 1));
}

// min (x-2)^2 + (y-1)^2 s.t. x + y = 1: x = 1, y = 0, multiplier 2.
NlpProblem LineProblem(bool with_bound) {
  NlpProblem p;
  p.dim = 2;
  p.cost = [](const Vector& z, Vector* r, Matrix* J) {
    r->resize(2);
    (*r) << z(0) - 2, z(1) - 1;
    if (J) *J = Matrix::Identity(2, 2);
  };
  p.labels = {ConstraintType::kEquality};
  if (with_bound) p.labels.push_back(ConstraintType::kInequality);
  p.constraints = [with_bound](const Vector& z, Vector* g, Matrix* J) {
    g->resize(with_bound ? 2 : 1);
    (*g)(0) = z(0) + z(1) - 1;
    if (with_bound) (*g)(1) = z(0) - 0.5;
    if (J) {
      J->setZero(g->size(), 2);
      (*J)(0, 0) = (*J)(0, 1) = 1;
      if (with_bound) (*J)(1, 0) = 1;
    }
  };
  return p;
}

TEST(AugLag, EqualityConstrainedQuadratic) {
  const SolverResult r = SolveAugmentedLagrangian(LineProblem(false), Vector::Zero(2));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.z(0), 1.0, 1e-5);
  EXPECT_NEAR(r.z(1), 0.0, 1e-5);
  EXPECT_NEAR(r.multipliers(0), 2.0, 1e-3);
  EXPECT_LE(r.max_violation, 1e-4);
}

TEST(AugLag, ActiveInequality) {
  // With x <= 0.5 the optimum moves to (0.5, 0.5); stationarity gives
  // 2(x-2) + l1 + l2 = 0 and 2(y-1) + l1 = 0, so l1 = 1, l2 = 2.
  const SolverResult r = SolveAugmentedLagrangian(LineProblem(true), Vector::Zero(2));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.z(0), 0.5, 1e-5);
  EXPECT_NEAR(r.z(1), 0.5, 1e-5);
  EXPECT_NEAR(r.multipliers(0), 1.0, 1e-3);
  EXPECT_NEAR(r.multipliers(1), 2.0, 1e-3);
}

TEST(AugLag, InactiveInequalityHasZeroMultiplier) {
  NlpProblem p = LineProblem(false);
  p.labels.push_back(ConstraintType::kInequality);
  p.constraints = [](const Vector& z, Vector* g, Matrix* J) {
    g->resize(2);
    (*g) << z(0) + z(1) - 1, z(0) - 5;
    if (J) {
      J->resize(2, 2);
      (*J) << 1, 1, 1, 0;
    }
  };
  const SolverResult r = SolveAugmentedLagrangian(p, Vector::Zero(2));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.z(0), 1.0, 1e-5);
  EXPECT_NEAR(r.multipliers(1), 0.0, 1e-6);
}

TEST(AugLag, WarmStartShiftCopiesAndFills) {
  Vector prev(6);
  prev << 1, 2, 3, 4, 5, 6;
  Vector fill = Vector::Constant(5, -1);
  BlockMapping m;
  m.blocks = {{2, 2}, {2, -1}, {1, 5}};
  const Vector out = WarmStartShift(prev, m, fill);
  Vector expected(5);
  expected << 3, 4, -1, -1, 6;
  EXPECT_EQ(out, expected);
}

SystemState InitialState(const SequenceSpec& spec) {
  SystemState s = SystemState::AtRest(spec.layout.InitialConfig());
  ReadObjectDofs(spec.layout, spec.scene, &s.x);
  return s;
}

// With the cube resting, a grasp offset g puts the hand at cube + g for the
// pick and at goal + g for the place. The cost
//   |o + g - h0|^2 + w |o + g|^2 + w |goal + g|^2 + e |g - g0|^2
// is quadratic in g alone.
TEST(Waypoints, PickPlaceMatchesClosedForm) {
  const SequenceSpec spec = LoadScenario("pick_place").spec;
  const SystemState s = InitialState(spec);
  const WaypointSolution sol = SolveWaypoints(spec, spec.scene, s, 0);
  ASSERT_TRUE(sol.converged);
  Vector h0(2), o(2), goal(2);
  h0 << 0.0, -0.2;
  o << 0.5, 0.2;
  goal << -0.3, 0.6;
  const double w = 0.5, e = 1e-4;
  const Vector g = (h0 - o - w * o - w * goal) / (1 + 2 * w + e);
  EXPECT_LT((sol.shared - g).norm(), 1e-4);
  EXPECT_LT((sol.waypoint(0).head(2) - (o + g)).norm(), 1e-4);
  EXPECT_LT((sol.waypoint(1).head(2) - (goal + g)).norm(), 1e-4);
  EXPECT_LT((sol.waypoint(1).segment(2, 2) - goal).norm(), 1e-4);
  EXPECT_LE(sol.max_violation, 1e-4);
}

TEST(Waypoints, FiveWaypointsAreTheFrames) {
  const SequenceSpec spec = LoadScenario("five_waypoints").spec;
  const WaypointSolution sol = SolveWaypoints(spec, spec.scene, InitialState(spec), 2);
  ASSERT_EQ(sol.waypoints.size(), 3u);
  for (int k = 2; k < 5; ++k) {
    const Vector& f = spec.scene.at("wp" + std::to_string(k + 1)).position;
    EXPECT_LT((sol.waypoint(k) - f).norm(), 1e-4);
  }
}

TEST(Waypoints, Push2dSatisfiesAllConstraints) {
  const SequenceSpec spec = LoadScenario("push2d").spec;
  const WaypointSolution sol = SolveWaypoints(spec, spec.scene, InitialState(spec), 0);
  ASSERT_TRUE(sol.converged);
  EXPECT_LE(sol.max_violation, 1e-4);
  // The box ends beside the target, touching it.
  const Vector box = sol.waypoints.back().segment(2, 2);
  EXPECT_NEAR((box - spec.scene.at("green_target").position).norm(), 0.1, 1e-3);
}

TEST(Waypoints, ProblemJacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(32);
  for (const char* name : {"pick_place", "push2d", "five_waypoints"}) {
    const SequenceSpec spec = LoadScenario(name).spec;
    for (int phase = 0; phase < spec.num_phases(); ++phase) {
      const WaypointProblem wp = BuildWaypointProblem(spec, spec.scene, InitialState(spec), phase);
      Vector mult;
      const Vector base = WaypointWarmStart(wp, spec, nullptr, &mult);
      for (int i = 0; i < 100; ++i) {
        const Vector z = base + RandomVec(rng, wp.nlp.dim, -0.3, 0.3);
        for (const DifferentiableMap* m : {&wp.nlp.cost, &wp.nlp.constraints}) {
          if (!*m) continue;
          Vector v;
          Matrix J;
          (*m)(z, &v, &J);
          auto f = [&](const Vector& w) {
            Vector out;
            (*m)(w, &out, nullptr);
            return out;
          };
          ASSERT_LE(testing::RelativeError(J, testing::NumericJacobian(f, z)), 1e-4) << name << " phase " << phase;
        }
      }
    }
  }
}

CubicSplinePath Reference(const Vector& q, const std::vector<Vector>& targets) {
  const int n = static_cast<int>(q.size());
  const TimingSolution t = SolveTiming(q, Vector::Zero(n), targets, 1.0);
  return BuildSpline(0.0, q, Vector::Zero(n), t.taus, targets, t.KnotVelocities(n));
}

// Without running constraints the horizon problem is linear least squares in
// the knots.
TEST(Horizon, UnconstrainedMatchesDenseLeastSquares) {
  const SequenceSpec spec = LoadScenario("five_waypoints").spec;
  SystemState s = InitialState(spec);
  s.xdot << 0.3, -0.2, 0.1;
  const CubicSplinePath ref = Reference(s.x, {spec.scene.at("wp1").position, spec.scene.at("wp2").position});
  const double alpha = 1.0, dt = 0.1;
  const int N = 10, n = 3;
  const HorizonPath h = SolveHorizon(spec, spec.scene, s, ref, 0.0, [](double) { return -1; }, alpha);
  ASSERT_EQ(static_cast<int>(h.knots.size()), N + 1);

  // Rows: sqrt(alpha dt)/dt^2 (x_{i+1} - 2 x_i + x_{i-1}) for i = 0..N-1 and
  // sqrt(dt) (x_i - ref_i) for i = 1..N; x_0 and x_{-1} are known.
  Matrix A = Matrix::Zero(2 * N * n, N * n);
  Vector b = Vector::Zero(2 * N * n);
  const double wa = std::sqrt(alpha * dt) / (dt * dt), wt = std::sqrt(dt);
  const Vector x0 = s.x, xm1 = s.x - dt * s.xdot;
  for (int i = 0; i < N; ++i) {
    const int row = i * n;
    for (int j = 0; j < 3; ++j) {
      const int knot = i + 1 - j;
      const double c = (j == 1 ? -2.0 : 1.0) * wa;
      if (knot >= 1) {
        A.block(row, (knot - 1) * n, n, n) += c * Matrix::Identity(n, n);
      } else {
        b.segment(row, n) -= c * (knot == 0 ? x0 : xm1);
      }
    }
  }
  for (int i = 1; i <= N; ++i) {
    const int row = (N + i - 1) * n;
    A.block(row, (i - 1) * n, n, n) = wt * Matrix::Identity(n, n);
    b.segment(row, n) = wt * ref.Evaluate(i * dt).position;
  }
  const Vector z = A.colPivHouseholderQr().solve(b);
  for (int i = 1; i <= N; ++i) EXPECT_LT((h.knots[i] - z.segment((i - 1) * n, n)).norm(), 1e-6) << i;
  EXPECT_LT((h.knots[0] - x0).norm(), 1e-12);
}

TEST(Horizon, RunningConstraintHolds) {
  const SequenceSpec spec = LoadScenario("push2d").spec;
  SystemState s = InitialState(spec);
  const Vector box = s.x.segment(2, 2), place = s.x.segment(4, 2);
  const Vector dir = (place - box).normalized();
  s.x.head(2) = box - 0.09 * dir;
  // Reference drifting off the push line; the alignment constraint must win.
  const Vector lateral = Eigen::Vector2d(-dir(1), dir(0));
  const CubicSplinePath ref = Reference(s.x.head(2), {Vector(box - 0.06 * dir + 0.05 * lateral)});
  const HorizonPath h = SolveHorizon(spec, spec.scene, s, ref, 0.0, [](double) { return 2; }, spec.alpha);
  ASSERT_TRUE(h.converged);
  EXPECT_LE(h.max_violation, 1e-4);
  for (size_t i = 1; i < h.knots.size(); ++i) {
    const Vector w = box - h.knots[i];
    EXPECT_LT(std::abs(dir(0) * w(1) - dir(1) * w(0)), 1e-3) << i;
  }
}

TEST(Horizon, ProblemJacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(33);
  const SequenceSpec spec = LoadScenario("push2d").spec;
  const SystemState s = InitialState(spec);
  const Vector q = s.x.head(2);
  const CubicSplinePath ref = Reference(q, {Vector(q + Vector::Constant(2, 0.3))});
  const HorizonProblem hp = BuildHorizonProblem(spec, spec.scene, s, ref, 0.0, [](double) { return 3; }, 1.0);
  for (int i = 0; i < 100; ++i) {
    Vector z(hp.nlp.dim);
    for (int k = 0; k < hp.steps; ++k) z.segment(2 * k, 2) = ref.Evaluate(0.1 * (k + 1)).position + RandomVec(rng, 2, -0.1, 0.1);
    for (const DifferentiableMap* m : {&hp.nlp.cost, &hp.nlp.constraints}) {
      Vector v;
      Matrix J;
      (*m)(z, &v, &J);
      auto f = [&](const Vector& w) {
        Vector out;
        (*m)(w, &out, nullptr);
        return out;
      };
      ASSERT_LE(testing::RelativeError(J, testing::NumericJacobian(f, z)), 1e-4);
    }
  }
}

TEST(Horizon, RejectsNonIntegerStepCount) {
  const SequenceSpec spec = LoadScenario("five_waypoints").spec;
  HorizonOptions opt;
  opt.dt = 0.3;
  const SystemState s = InitialState(spec);
  const CubicSplinePath ref = Reference(s.x, {spec.scene.at("wp1").position});
  EXPECT_THROW(BuildHorizonProblem(spec, spec.scene, s, ref, 0.0, nullptr, 1.0, opt), SpecError);
}

}  // namespace
}  // namespace secmpc
