#pragma once

#include <vector>

#include "secmpc/gauss_newton.h"
#include "secmpc/model.h"

namespace secmpc {

// min |r(z)|^2  s.t.  g_i(z) = 0 (equalities), g_i(z) <= 0 (inequalities).
struct NlpProblem {
  int dim = 0;
  DifferentiableMap cost;         // residuals r(z)
  DifferentiableMap constraints;  // g(z); may be empty when labels is empty
  std::vector<ConstraintType> labels;
  Sparsity sparsity;
};

struct AugLagOptions {
  double feas_tol = 1e-4;
  double grad_tol = 1e-5;
  int max_outer = 20;
  int max_inner = 50;
  double initial_penalty = 1.0;
  double penalty_growth = 5.0;
  // Newton steps on the KKT system of the active set after the outer loop.
  bool polish = true;
  int max_polish = 5;
};

struct SolverResult {
  Vector z;
  double objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;        // outer
  int inner_iterations = 0;  // accepted Gauss-Newton steps, summed
  bool converged = false;
  Vector multipliers;  // one per constraint output; inequalities >= 0
  double penalty = 1.0;
};

// Phr augmented Lagrangian: each outer iteration minimizes
//   |r|^2 + sum_eq mu (g + lambda / 2mu)^2 + sum_ineq mu max(0, g + lambda / 2mu)^2
// by damped Gauss-Newton, then lambda <- lambda + 2 mu g (clamped at zero for
// inequalities) and mu <- growth * mu. `warm_multipliers` seeds lambda.
SolverResult SolveAugmentedLagrangian(const NlpProblem& problem, const Vector& init,
                                      const AugLagOptions& options = {},
                                      const Vector* warm_multipliers = nullptr);

// Evaluates objective and violation at z.
void EvaluateNlp(const NlpProblem& problem, const Vector& z, double* objective, double* max_violation);

// Block-structured warm start: the new decision vector is assembled from
// `blocks`, each either copied from a range of the previous solution or
// taken from `fill` (the module's default initializer).
struct BlockMapping {
  struct Block {
    int size = 0;
    int source = -1;  // offset in the previous vector, -1 = from fill
  };
  std::vector<Block> blocks;
};

Vector WarmStartShift(const Vector& previous, const BlockMapping& mapping, const Vector& fill);

}  // namespace secmpc
