#pragma once

#include <vector>

#include "secmpc/common.h"

namespace secmpc {

// z(t) = a t^3 + b t^2 + c t + d on [0, tau].
struct CubicPiece {
  Vector a, b, c, d;
  double tau = 0.0;

  Vector Position(double t) const { return ((a * t + b) * t + c) * t + d; }
  Vector Velocity(double t) const { return (3.0 * a * t + 2.0 * b) * t + c; }
  Vector Acceleration(double t) const { return 6.0 * a * t + 2.0 * b; }
};

// The minimum-acceleration cubic meeting position/velocity at both ends.
CubicPiece FitCubic(const Vector& x0, const Vector& v0, const Vector& x1, const Vector& v1, double tau);

// psi = int_0^tau |z''|^2 dt of the fitted cubic, written as a sum of squares
// psi = |D~|^2 + |V~|^2 with D~ = sqrt(12) tau^-3/2 D, V~ = tau^-1/2 V,
// D = (x1 - x0) - tau/2 (v0 + v1), V = v1 - v0.
struct PieceCost {
  double psi = 0.0;
  Vector d_tilde;
  Vector v_tilde;
  // Residual Jacobians; the D~ and V~ blocks w.r.t. each vector argument are
  // scalar multiples of the identity, so only the scalars are stored.
  double dd_dx0 = 0, dd_dv0 = 0, dd_dx1 = 0, dd_dv1 = 0;
  Vector dd_dtau;
  double dv_dv0 = 0, dv_dv1 = 0;
  Vector dv_dtau;
};

PieceCost EvaluatePieceCost(const Vector& x0, const Vector& v0, const Vector& x1, const Vector& v1, double tau,
                            double tau_min = 1e-3);

struct SplineSample {
  Vector position;
  Vector velocity;
  Vector acceleration;
};

// Piecewise cubic reference; C1 at interior knots by construction.
class CubicSplinePath {
 public:
  CubicSplinePath() = default;
  CubicSplinePath(double start_time, std::vector<CubicPiece> pieces);

  bool empty() const { return pieces_.empty(); }
  int dim() const { return empty() ? 0 : static_cast<int>(pieces_.front().d.size()); }
  double start_time() const { return start_time_; }
  double end_time() const { return knot_times_.empty() ? start_time_ : knot_times_.back(); }
  const std::vector<CubicPiece>& pieces() const { return pieces_; }
  // Absolute time at the end of each piece.
  const std::vector<double>& knot_times() const { return knot_times_; }

  // Past the final knot the path holds the final position at rest.
  SplineSample Evaluate(double t) const;

 private:
  double start_time_ = 0.0;
  std::vector<CubicPiece> pieces_;
  std::vector<double> knot_times_;
};

// Spline through `waypoints` with durations `taus` and knot velocities
// `velocities` (one per waypoint; the last is normally zero), starting at
// (x0, v0) at `start_time`.
CubicSplinePath BuildSpline(double start_time, const Vector& x0, const Vector& v0, const std::vector<double>& taus,
                            const std::vector<Vector>& waypoints, const std::vector<Vector>& velocities);

}  // namespace secmpc
