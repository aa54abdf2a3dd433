#pragma once

#include <vector>

#include "secmpc/cubic.h"
#include "secmpc/gauss_newton.h"

namespace secmpc {

// Durations tau_{1:K} and interior knot velocities v_{1:K-1}; the final
// knot velocity is zero.
struct TimingSolution {
  std::vector<double> taus;
  std::vector<Vector> velocities;  // K - 1 entries
  double objective = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::kConverged;

  int num_pieces() const { return static_cast<int>(taus.size()); }
  double total_time() const;
  // All K knot velocities, the last being zero.
  std::vector<Vector> KnotVelocities(int dim) const;
  bool ok() const { return status == SolveStatus::kConverged || status == SolveStatus::kStalled; }
};

struct TimingOptions {
  double tau_min = 1e-3;
  double nominal_speed = 1.0;  // default init: tau = gap / speed
  double min_init_tau = 0.1;
  GaussNewtonOptions gauss_newton;
};

// sum_k tau_k + alpha sum_k psi_k for the spline from (x0, v0).
double TimingObjective(const Vector& x0, const Vector& v0, const std::vector<Vector>& waypoints, double alpha,
                       const std::vector<double>& taus, const std::vector<Vector>& velocities);

// Least-squares form over z = [tau_1, v_1, tau_2, v_2, ..., tau_K]:
// residuals sqrt(tau_k), sqrt(alpha) D~_k, sqrt(alpha) V~_k per piece.
LeastSquaresProblem BuildTimingProblem(const Vector& x0, const Vector& v0, const std::vector<Vector>& waypoints,
                                       double alpha, double tau_min = 1e-3);
Vector PackTiming(const std::vector<double>& taus, const std::vector<Vector>& velocities);
void UnpackTiming(const Vector& z, int num_pieces, int dim, std::vector<double>* taus, std::vector<Vector>* velocities);

TimingSolution DefaultTimingInit(const Vector& x0, const std::vector<Vector>& waypoints,
                                 const TimingOptions& options = {});

// Optimal timing of the spline through `waypoints` ending at rest. `init`
// may be null (default initialization) or a warm start with K pieces.
TimingSolution SolveTiming(const Vector& x0, const Vector& v0, const std::vector<Vector>& waypoints, double alpha,
                           const TimingSolution* init = nullptr, const TimingOptions& options = {});

}  // namespace secmpc
