#include "secmpc/gauss_newton.h"

#include <algorithm>
#include <cmath>

namespace secmpc {

const char* ToString(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kMaxIterations:
      return "max_iterations";
    case SolveStatus::kStalled:
      return "stalled";
    case SolveStatus::kNonFinite:
      return "non_finite";
  }
  return "?";
}

Vector ProjectedGradient(const Vector& z, const Vector& gradient, const Vector& lower_bounds) {
  Vector g = gradient;
  if (lower_bounds.size() == z.size()) {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (z(i) <= lower_bounds(i) + 1e-12 && g(i) > 0.0) g(i) = 0.0;
    }
  }
  return g;
}

GaussNewtonResult MinimizeGaussNewton(const LeastSquaresProblem& problem, const Vector& init,
                                      const GaussNewtonOptions& options) {
  const bool bounded = problem.lower_bounds.size() == problem.dim;
  auto clamp = [&](Vector z) {
    if (bounded) z = z.cwiseMax(problem.lower_bounds);
    return z;
  };

  GaussNewtonResult result;
  result.z = clamp(init);
  Matrix jac;
  problem.evaluate(result.z, &result.residual, &jac);
  ++result.evaluations;
  if (!result.residual.allFinite() || !jac.allFinite()) {
    result.status = SolveStatus::kNonFinite;
    return result;
  }
  result.cost = result.residual.squaredNorm();

  double damping = options.initial_damping;
  Vector trial_r;
  Matrix trial_j;
  const Matrix eye = Matrix::Identity(problem.dim, problem.dim);

  while (true) {
    const Vector grad = jac.transpose() * result.residual;
    result.gradient_norm = 2.0 * ProjectedGradient(result.z, grad, problem.lower_bounds).lpNorm<Eigen::Infinity>();
    if (result.gradient_norm <= options.gradient_tolerance) {
      result.status = SolveStatus::kConverged;
      break;
    }
    if (result.iterations >= options.max_iterations) {
      result.status = SolveStatus::kMaxIterations;
      break;
    }
    const Matrix normal = jac.transpose() * jac;
    bool accepted = false;
    bool converged = false;
    while (damping <= options.max_damping) {
      Vector step;
      if (!SolveSymmetric(normal + damping * eye, -grad, problem.sparsity, &step)) {
        damping *= options.damping_increase;
        continue;
      }
      Vector trial = clamp(result.z + step);
      const Vector taken = trial - result.z;
      double step_norm = taken.lpNorm<Eigen::Infinity>();
      if (taken.lpNorm<Eigen::Infinity>() <= options.step_tolerance && damping <= options.initial_damping) {
        converged = true;
        break;
      }
      problem.evaluate(trial, &trial_r, &trial_j);
      ++result.evaluations;
      double trial_cost = trial_r.allFinite() && trial_j.allFinite() ? trial_r.squaredNorm() : INFINITY;
      if (options.line_search && std::isfinite(trial_cost)) {
        // Minimizer of the parabola through f(0), f'(0) and f(1) along the
        // taken step; Gauss-Newton steps overshoot when residuals are large.
        const double slope = 2.0 * grad.dot(taken);
        const double curv = trial_cost - result.cost - slope;
        if (slope < 0.0 && curv > 0.0) {
          const double s = std::clamp(-slope / (2.0 * curv), 0.1, 4.0);
          if (std::abs(s - 1.0) > 0.05) {
            Vector alt = clamp(result.z + s * taken);
            Vector alt_r;
            Matrix alt_j;
            problem.evaluate(alt, &alt_r, &alt_j);
            ++result.evaluations;
            const double alt_cost = alt_r.allFinite() && alt_j.allFinite() ? alt_r.squaredNorm() : INFINITY;
            if (alt_cost < trial_cost) {
              trial = std::move(alt);
              trial_r = std::move(alt_r);
              trial_j = std::move(alt_j);
              trial_cost = alt_cost;
            }
          }
        }
      }
      if (trial_cost < result.cost) {
        step_norm = (trial - result.z).lpNorm<Eigen::Infinity>();
        result.z = std::move(trial);
        result.residual = trial_r;
        jac = trial_j;
        result.cost = trial_cost;
        ++result.iterations;
        damping = std::max(options.min_damping, damping / options.damping_decrease);
        accepted = true;
        converged = step_norm <= options.step_tolerance;
        break;
      }
      damping *= options.damping_increase;
    }
    if (converged) {
      result.status = SolveStatus::kConverged;
      break;
    }
    if (!accepted) {
      // No descent at any damping: we are at a (numerical) minimizer.
      result.status = SolveStatus::kStalled;
      break;
    }
  }
  const Vector grad = jac.transpose() * result.residual;
  result.gradient_norm = 2.0 * ProjectedGradient(result.z, grad, problem.lower_bounds).lpNorm<Eigen::Infinity>();
  return result;
}

}  // namespace secmpc
