#include <chrono>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "secmpc/cubic.h"
#include "test_util.h"

namespace secmpc {
namespace {

using testing::GaussLegendre;
using testing::RandomVec;

// Second derivative of the cubic Hermite interpolant, from the basis
// polynomials directly.
Vector HermiteAccel(const Vector& x0, const Vector& v0, const Vector& x1, const Vector& v1, double tau, double t) {
  const double s = t / tau;
  return x0 * (12 * s - 6) / (tau * tau) + v0 * (6 * s - 4) / tau + x1 * (6 - 12 * s) / (tau * tau) +
         v1 * (6 * s - 2) / tau;
}

TEST(Cubic, FitMeetsBoundaryConditions) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vector x0 = RandomVec(rng, 3, -1, 1), v0 = RandomVec(rng, 3, -1, 1);
    const Vector x1 = RandomVec(rng, 3, -1, 1), v1 = RandomVec(rng, 3, -1, 1);
    const double tau = std::uniform_real_distribution<double>(0.1, 3)(rng);
    const CubicPiece p = FitCubic(x0, v0, x1, v1, tau);
    EXPECT_LT((p.Position(0) - x0).norm(), 1e-12);
    EXPECT_LT((p.Velocity(0) - v0).norm(), 1e-12);
    EXPECT_LT((p.Position(tau) - x1).norm(), 1e-10);
    EXPECT_LT((p.Velocity(tau) - v1).norm(), 1e-10);
  }
}

TEST(Cubic, CostMatchesQuadratureOnRandomPieces) {
  std::mt19937_64 rng(2);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector x0 = RandomVec(rng, 3, -2, 2), v0 = RandomVec(rng, 3, -2, 2);
    const Vector x1 = RandomVec(rng, 3, -2, 2), v1 = RandomVec(rng, 3, -2, 2);
    const double tau = std::uniform_real_distribution<double>(0.05, 5)(rng);
    const double ref =
        GaussLegendre([&](double t) { return HermiteAccel(x0, v0, x1, v1, tau, t).squaredNorm(); }, tau);
    const double psi = EvaluatePieceCost(x0, v0, x1, v1, tau).psi;
    worst = std::max(worst, std::abs(psi - ref) / ref);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LE(worst, 1e-6);
  EXPECT_LT(secs, 5.0);
}

TEST(Cubic, RestToRestCost) {
  const Vector zero = Vector::Zero(1);
  for (double d : {0.5, 1.0, 3.0}) {
    for (double tau : {0.5, 2.0}) {
      EXPECT_NEAR(EvaluatePieceCost(zero, zero, Vector::Constant(1, d), zero, tau).psi, 12 * d * d / std::pow(tau, 3),
                  1e-12);
    }
  }
}

TEST(Cubic, CostJacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  const int n = 2;
  for (int i = 0; i < 100; ++i) {
    // z = [x0, v0, x1, v1, tau]
    Vector z(4 * n + 1);
    z << RandomVec(rng, 4 * n, -1, 1), std::uniform_real_distribution<double>(0.2, 3)(rng);
    auto residual = [&](const Vector& w) {
      const PieceCost c =
          EvaluatePieceCost(w.segment(0, n), w.segment(n, n), w.segment(2 * n, n), w.segment(3 * n, n), w(4 * n));
      Vector r(2 * n);
      r << c.d_tilde, c.v_tilde;
      return r;
    };
    const PieceCost c =
        EvaluatePieceCost(z.segment(0, n), z.segment(n, n), z.segment(2 * n, n), z.segment(3 * n, n), z(4 * n));
    Matrix J = Matrix::Zero(2 * n, 4 * n + 1);
    const Matrix I = Matrix::Identity(n, n);
    J.block(0, 0, n, n) = c.dd_dx0 * I;
    J.block(0, n, n, n) = c.dd_dv0 * I;
    J.block(0, 2 * n, n, n) = c.dd_dx1 * I;
    J.block(0, 3 * n, n, n) = c.dd_dv1 * I;
    J.block(0, 4 * n, n, 1) = c.dd_dtau;
    J.block(n, n, n, n) = c.dv_dv0 * I;
    J.block(n, 3 * n, n, n) = c.dv_dv1 * I;
    J.block(n, 4 * n, n, 1) = c.dv_dtau;
    EXPECT_LE(testing::RelativeError(J, testing::NumericJacobian(residual, z)), 1e-4);
  }
}

TEST(Cubic, RejectsNonPositiveDuration) {
  const Vector z = Vector::Zero(2);
  EXPECT_THROW(FitCubic(z, z, z, z, 0.0), DomainError);
  EXPECT_THROW(FitCubic(z, z, z, z, -1.0), DomainError);
}

TEST(Cubic, SplineIsC1AndHoldsAtTheEnd) {
  std::mt19937_64 rng(4);
  const Vector x0 = RandomVec(rng, 2, -1, 1), v0 = RandomVec(rng, 2, -1, 1);
  const std::vector<Vector> wps = {RandomVec(rng, 2, -1, 1), RandomVec(rng, 2, -1, 1), RandomVec(rng, 2, -1, 1)};
  const std::vector<Vector> vels = {RandomVec(rng, 2, -1, 1), RandomVec(rng, 2, -1, 1), Vector::Zero(2)};
  const std::vector<double> taus = {0.7, 1.1, 0.9};
  const CubicSplinePath path = BuildSpline(2.0, x0, v0, taus, wps, vels);
  EXPECT_NEAR(path.end_time(), 4.7, 1e-12);
  double t = 2.0;
  for (size_t k = 0; k < wps.size(); ++k) {
    t += taus[k];
    const SplineSample before = path.Evaluate(t - 1e-9), after = path.Evaluate(t + 1e-9);
    EXPECT_LT((before.position - wps[k]).norm(), 1e-7);
    EXPECT_LT((before.velocity - after.velocity).norm(), 1e-6);
  }
  const SplineSample hold = path.Evaluate(10.0);
  EXPECT_LT((hold.position - wps.back()).norm(), 1e-12);
  EXPECT_LT(hold.velocity.norm(), 1e-12);
  EXPECT_THROW(path.Evaluate(1.0), DomainError);
}

}  // namespace
}  // namespace secmpc
