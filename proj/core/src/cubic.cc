#include "secmpc/cubic.h"

#include <cmath>
#include <sstream>

namespace secmpc {

CubicPiece FitCubic(const Vector& x0, const Vector& v0, const Vector& x1, const Vector& v1, double tau) {
  if (!(tau > 0.0)) {
    std::ostringstream msg;
    msg << "cubic piece duration must be positive, got " << tau;
    throw DomainError(msg.str());
  }
  if (v0.size() != x0.size() || x1.size() != x0.size() || v1.size() != x0.size()) {
    throw SpecError("cubic piece boundary vectors differ in dimension");
  }
  CubicPiece p;
  p.tau = tau;
  p.d = x0;
  p.c = v0;
  const Vector dx = x1 - x0;
  p.b = (3.0 * dx - tau * (v1 + 2.0 * v0)) / (tau * tau);
  p.a = (-2.0 * dx + tau * (v1 + v0)) / (tau * tau * tau);
  return p;
}

PieceCost EvaluatePieceCost(const Vector& x0, const Vector& v0, const Vector& x1, const Vector& v1, double tau,
                            double tau_min) {
  if (!(tau >= tau_min) || !(tau > 0.0)) {
    std::ostringstream msg;
    msg << "piece duration " << tau << " below floor " << tau_min;
    throw DomainError(msg.str());
  }
  static const double kSqrt12 = std::sqrt(12.0);
  const double s = std::sqrt(tau);
  const double t32 = tau * s;  // tau^{3/2}
  const Vector D = (x1 - x0) - 0.5 * tau * (v0 + v1);
  const Vector V = v1 - v0;

  PieceCost pc;
  pc.d_tilde = kSqrt12 / t32 * D;
  pc.v_tilde = V / s;
  pc.psi = pc.d_tilde.squaredNorm() + pc.v_tilde.squaredNorm();

  pc.dd_dx0 = -kSqrt12 / t32;
  pc.dd_dx1 = kSqrt12 / t32;
  pc.dd_dv0 = -0.5 * kSqrt12 / s;  // -sqrt(3) tau^{-1/2}
  pc.dd_dv1 = pc.dd_dv0;
  pc.dd_dtau = kSqrt12 * (-1.5 / (t32 * tau) * D - 0.5 / t32 * (v0 + v1));
  pc.dv_dv0 = -1.0 / s;
  pc.dv_dv1 = 1.0 / s;
  pc.dv_dtau = -0.5 / t32 * V;
  return pc;
}

CubicSplinePath::CubicSplinePath(double start_time, std::vector<CubicPiece> pieces)
    : start_time_(start_time), pieces_(std::move(pieces)) {
  double t = start_time_;
  knot_times_.reserve(pieces_.size());
  for (const auto& p : pieces_) {
    if (!(p.tau > 0.0)) throw DomainError("spline piece with non-positive duration");
    t += p.tau;
    knot_times_.push_back(t);
  }
}

SplineSample CubicSplinePath::Evaluate(double t) const {
  if (pieces_.empty()) throw DomainError("evaluating an empty spline");
  if (t < start_time_ - 1e-9) {
    std::ostringstream msg;
    msg << "spline query at " << t << " before its start " << start_time_;
    throw DomainError(msg.str());
  }
  if (t >= knot_times_.back()) {
    const CubicPiece& last = pieces_.back();
    const int n = static_cast<int>(last.d.size());
    return {last.Position(last.tau), Vector::Zero(n), Vector::Zero(n)};
  }
  double t0 = start_time_;
  for (size_t i = 0; i < pieces_.size(); ++i) {
    if (t < knot_times_[i]) {
      const double s = std::max(0.0, t - t0);
      const CubicPiece& p = pieces_[i];
      return {p.Position(s), p.Velocity(s), p.Acceleration(s)};
    }
    t0 = knot_times_[i];
  }
  const CubicPiece& last = pieces_.back();
  return {last.Position(last.tau), Vector::Zero(last.d.size()), Vector::Zero(last.d.size())};
}

CubicSplinePath BuildSpline(double start_time, const Vector& x0, const Vector& v0, const std::vector<double>& taus,
                            const std::vector<Vector>& waypoints, const std::vector<Vector>& velocities) {
  if (taus.size() != waypoints.size() || velocities.size() != waypoints.size()) {
    throw SpecError("spline: taus, waypoints and velocities must have equal length");
  }
  std::vector<CubicPiece> pieces;
  pieces.reserve(taus.size());
  Vector xp = x0;
  Vector vp = v0;
  for (size_t k = 0; k < taus.size(); ++k) {
    pieces.push_back(FitCubic(xp, vp, waypoints[k], velocities[k], taus[k]));
    xp = waypoints[k];
    vp = velocities[k];
  }
  return CubicSplinePath(start_time, std::move(pieces));
}

}  // namespace secmpc
