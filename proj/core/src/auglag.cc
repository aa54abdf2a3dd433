#include "secmpc/auglag.h"

#include <algorithm>
#include <cmath>

namespace secmpc {
namespace {

struct Evaluated {
  Vector r, g;
  Matrix jr, jg;
  bool finite = true;
};

Evaluated EvaluateAll(const NlpProblem& p, const Vector& z, bool jacobians) {
  Evaluated e;
  p.cost(z, &e.r, jacobians ? &e.jr : nullptr);
  if (!p.labels.empty()) {
    p.constraints(z, &e.g, jacobians ? &e.jg : nullptr);
  } else {
    e.g.resize(0);
    e.jg.resize(0, z.size());
  }
  e.finite = e.r.allFinite() && e.g.allFinite() && (!jacobians || (e.jr.allFinite() && e.jg.allFinite()));
  return e;
}

bool IsEquality(const std::vector<ConstraintType>& labels, int i) {
  return labels[i] == ConstraintType::kEquality;
}

// One Newton step on the KKT system of the guessed active set, with an L1
// merit backtracking. Returns false when no progress was made.
bool PolishStep(const NlpProblem& p, Vector* z, Vector* lambda) {
  const Evaluated e = EvaluateAll(p, *z, true);
  if (!e.finite) return false;
  const int n = p.dim;
  const int m = static_cast<int>(p.labels.size());
  std::vector<int> active;
  for (int i = 0; i < m; ++i) {
    if (IsEquality(p.labels, i) || e.g(i) > -1e-6 || (*lambda)(i) > 1e-10) active.push_back(i);
  }
  const Matrix h = 2.0 * e.jr.transpose() * e.jr + 1e-10 * Matrix::Identity(n, n);
  const Vector grad = 2.0 * e.jr.transpose() * e.r;
  Vector dz, nu;
  for (int attempt = 0; attempt < 4; ++attempt) {
    const int a = static_cast<int>(active.size());
    Matrix kkt = Matrix::Zero(n + a, n + a);
    Vector rhs(n + a);
    kkt.topLeftCorner(n, n) = h;
    rhs.head(n) = -grad;
    for (int j = 0; j < a; ++j) {
      kkt.block(n + j, 0, 1, n) = e.jg.row(active[j]);
      kkt.block(0, n + j, n, 1) = e.jg.row(active[j]).transpose();
      rhs(n + j) = -e.g(active[j]);
    }
    const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    dz = sol.head(n);
    nu = sol.tail(a);
    std::vector<int> keep;
    for (int j = 0; j < a; ++j) {
      if (IsEquality(p.labels, active[j]) || nu(j) >= -1e-10) keep.push_back(active[j]);
    }
    if (keep.size() == active.size()) break;
    active = std::move(keep);
  }
  if (!dz.allFinite() || !nu.allFinite()) return false;

  const double rho = 2.0 * (nu.size() > 0 ? nu.cwiseAbs().maxCoeff() : 0.0) + 1.0;
  auto merit = [&](const Evaluated& ev) {
    double pen = 0.0;
    for (int i = 0; i < m; ++i) pen += IsEquality(p.labels, i) ? std::abs(ev.g(i)) : std::max(0.0, ev.g(i));
    return ev.r.squaredNorm() + rho * pen;
  };
  const double m0 = merit(e);
  double step = 1.0;
  for (int ls = 0; ls < 8; ++ls, step *= 0.5) {
    const Vector trial = *z + step * dz;
    const Evaluated et = EvaluateAll(p, trial, false);
    if (et.finite && merit(et) <= m0 + 1e-14 * std::max(1.0, std::abs(m0))) {
      *z = trial;
      lambda->setZero();
      for (size_t j = 0; j < active.size(); ++j) {
        (*lambda)(active[j]) = IsEquality(p.labels, active[j]) ? nu(j) : std::max(0.0, nu(j));
      }
      return dz.lpNorm<Eigen::Infinity>() * step > 1e-13;
    }
  }
  return false;
}

}  // namespace

void EvaluateNlp(const NlpProblem& problem, const Vector& z, double* objective, double* max_violation) {
  const Evaluated e = EvaluateAll(problem, z, false);
  *objective = e.r.squaredNorm();
  *max_violation = problem.labels.empty() ? 0.0 : ViolationNorm(e.g, problem.labels);
}

SolverResult SolveAugmentedLagrangian(const NlpProblem& problem, const Vector& init, const AugLagOptions& options,
                                      const Vector* warm_multipliers) {
  if (init.size() != problem.dim) throw SpecError("auglag: init has wrong dimension");
  const int m = static_cast<int>(problem.labels.size());
  SolverResult result;
  result.z = init;
  result.multipliers = Vector::Zero(m);
  if (warm_multipliers && warm_multipliers->size() == m) result.multipliers = *warm_multipliers;
  double mu = options.initial_penalty;

  const Evaluated first = EvaluateAll(problem, init, true);
  if (!first.finite) {
    result.objective = NAN;
    result.max_violation = NAN;
    return result;
  }

  GaussNewtonOptions gn_options;
  gn_options.max_iterations = options.max_inner;
  gn_options.gradient_tolerance = 0.1 * options.grad_tol;
  gn_options.step_tolerance = 1e-10;

  bool stationary = false;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    const Vector lambda = result.multipliers;
    LeastSquaresProblem ls;
    ls.dim = problem.dim;
    ls.sparsity = problem.sparsity;
    ls.evaluate = [&problem, &lambda, mu, m](const Vector& z, Vector* r, Matrix* jac) {
      const Evaluated e = EvaluateAll(problem, z, jac != nullptr);
      const int nr = static_cast<int>(e.r.size());
      r->resize(nr + m);
      r->head(nr) = e.r;
      if (jac) {
        jac->setZero(nr + m, z.size());
        jac->topRows(nr) = e.jr;
      }
      const double s = std::sqrt(mu);
      for (int i = 0; i < m; ++i) {
        const double shifted = e.g(i) + lambda(i) / (2.0 * mu);
        const bool on = IsEquality(problem.labels, i) || shifted > 0.0;
        (*r)(nr + i) = on ? s * shifted : 0.0;
        if (jac && on) jac->row(nr + i) = s * e.jg.row(i);
      }
    };
    const GaussNewtonResult gn = MinimizeGaussNewton(ls, result.z, gn_options);
    result.inner_iterations += gn.iterations;
    result.iterations = outer + 1;
    if (gn.status == SolveStatus::kNonFinite) break;
    result.z = gn.z;

    const Evaluated e = EvaluateAll(problem, result.z, false);
    const double viol = m > 0 ? ViolationNorm(e.g, problem.labels) : 0.0;
    for (int i = 0; i < m; ++i) {
      double next = result.multipliers(i) + 2.0 * mu * e.g(i);
      if (!IsEquality(problem.labels, i)) next = std::max(0.0, next);
      result.multipliers(i) = next;
    }
    stationary = gn.gradient_norm <= options.grad_tol;
    if (viol <= options.feas_tol && stationary) break;
    if (viol > options.feas_tol) mu *= options.penalty_growth;
  }
  result.penalty = mu;

  double objective = 0.0, violation = 0.0;
  EvaluateNlp(problem, result.z, &objective, &violation);
  if (options.polish && m > 0) {
    Vector z = result.z;
    Vector lambda = result.multipliers;
    for (int i = 0; i < options.max_polish; ++i) {
      if (!PolishStep(problem, &z, &lambda)) break;
    }
    double obj_p = 0.0, viol_p = 0.0;
    EvaluateNlp(problem, z, &obj_p, &viol_p);
    if (std::isfinite(obj_p) && viol_p <= std::max(violation, 1e-10)) {
      result.z = z;
      result.multipliers = lambda;
      objective = obj_p;
      violation = viol_p;
      const Evaluated e = EvaluateAll(problem, z, true);
      const Vector kkt = 2.0 * e.jr.transpose() * e.r + e.jg.transpose() * lambda;
      stationary = stationary || kkt.lpNorm<Eigen::Infinity>() <= options.grad_tol;
    }
  }
  result.objective = objective;
  result.max_violation = violation;
  result.converged = std::isfinite(objective) && violation <= options.feas_tol && stationary;
  return result;
}

Vector WarmStartShift(const Vector& previous, const BlockMapping& mapping, const Vector& fill) {
  int total = 0;
  for (const auto& b : mapping.blocks) total += b.size;
  if (fill.size() != total) throw SpecError("warm start: fill vector has wrong dimension");
  Vector out = fill;
  int at = 0;
  for (const auto& b : mapping.blocks) {
    if (b.source >= 0) {
      if (b.source + b.size > previous.size()) throw SpecError("warm start: block outside previous solution");
      out.segment(at, b.size) = previous.segment(b.source, b.size);
    }
    at += b.size;
  }
  return out;
}

}  // namespace secmpc
