#pragma once

#include <functional>

#include "secmpc/common.h"
#include "secmpc/linalg.h"

namespace secmpc {

enum class SolveStatus { kConverged, kMaxIterations, kStalled, kNonFinite };

const char* ToString(SolveStatus status);

// min_z |r(z)|^2 subject to z >= lower_bounds.
struct LeastSquaresProblem {
  int dim = 0;
  // Fills the residual and, when `jacobian` is non-null, its Jacobian.
  std::function<void(const Vector& z, Vector* residual, Matrix* jacobian)> evaluate;
  Vector lower_bounds;  // empty: unbounded
  Sparsity sparsity;
};

// Levenberg-damped Gauss-Newton: (J^T J + lambda I) dz = -J^T r.
struct GaussNewtonOptions {
  double initial_damping = 1e-2;
  double damping_increase = 2.0;  // on rejected trial
  double damping_decrease = 3.0;  // on accepted trial
  double min_damping = 1e-12;
  double max_damping = 1e10;
  double step_tolerance = 1e-7;  // infinity norm of an accepted step
  double gradient_tolerance = 1e-12;
  int max_iterations = 100;
  // Rescale each step by the minimizer of a parabola fitted along it.
  bool line_search = true;
};

struct GaussNewtonResult {
  Vector z;
  Vector residual;
  double cost = 0.0;           // |r|^2
  double gradient_norm = 0.0;  // inf-norm of the projected gradient of |r|^2
  int iterations = 0;          // accepted steps
  int evaluations = 0;
  SolveStatus status = SolveStatus::kMaxIterations;

  bool ok() const { return status == SolveStatus::kConverged || status == SolveStatus::kStalled; }
};

GaussNewtonResult MinimizeGaussNewton(const LeastSquaresProblem& problem, const Vector& init,
                                      const GaussNewtonOptions& options = {});

// Gradient of |r|^2 with components pushing into active lower bounds removed.
Vector ProjectedGradient(const Vector& z, const Vector& gradient, const Vector& lower_bounds);

}  // namespace secmpc
