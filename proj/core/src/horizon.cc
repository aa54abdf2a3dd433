#include "secmpc/horizon.h"

#include <cmath>

namespace secmpc {

Vector HorizonPath::Sample(double t) const {
  if (knots.empty()) throw DomainError("sampling an empty horizon path");
  const double s = (t - start_time) / dt;
  if (s <= 0.0) return knots.front();
  const int last = static_cast<int>(knots.size()) - 1;
  if (s >= last) return knots.back();
  const int i = static_cast<int>(std::floor(s));
  const double w = s - i;
  return (1.0 - w) * knots[i] + w * knots[i + 1];
}

HorizonProblem BuildHorizonProblem(const SequenceSpec& spec, const Scene& scene, const SystemState& state,
                                   const CubicSplinePath& reference, double now, const PhaseSchedule& schedule,
                                   double alpha, const HorizonOptions& options) {
  if (!(options.dt > 0.0) || !(options.horizon > 0.0)) throw SpecError("horizon: dt and H must be positive");
  const double ratio = options.horizon / options.dt;
  const int N = static_cast<int>(std::lround(ratio));
  if (N < 1 || std::abs(ratio - N) > 1e-9) throw SpecError("horizon: H / dt must be a positive integer");
  if (state.dim() != spec.dim()) throw SpecError("horizon: state dimension does not match the layout");
  if (reference.empty()) throw DomainError("horizon: empty reference");
  const int n = spec.dim();
  const int nq = spec.layout.actuated_dim();
  const double dt = options.dt;

  HorizonProblem hp;
  hp.steps = N;
  hp.block_size = nq;
  hp.nlp.dim = N * nq;
  hp.nlp.sparsity = Sparsity::Banded(3 * nq - 1);
  hp.phases.resize(N + 1, -1);
  std::vector<int> rows(N + 1, 0);
  for (int i = 1; i <= N; ++i) {
    hp.phases[i] = schedule ? schedule(i * dt) : -1;
    if (hp.phases[i] >= 0) {
      const FeatureStack& run = spec.phases.at(hp.phases[i]).running;
      rows[i] = run.dim();
      for (auto t : run.labels()) hp.nlp.labels.push_back(t);
    }
  }

  std::vector<Vector> target(N + 1);
  for (int i = 1; i <= N; ++i) target[i] = reference.Evaluate(now + i * dt).position;
  const Vector x0 = state.x.head(nq);
  const Vector xm1 = x0 - dt * state.xdot.head(nq);
  const double wa = std::sqrt(alpha * dt) / (dt * dt);
  const double wt = std::sqrt(dt);

  hp.nlp.cost = [N, nq, x0, xm1, wa, wt, target](const Vector& z, Vector* r, Matrix* jac) {
    r->resize(2 * N * nq);
    if (jac) jac->setZero(2 * N * nq, z.size());
    auto knot = [&](int i) -> Vector {
      if (i == -1) return xm1;
      if (i == 0) return x0;
      return z.segment((i - 1) * nq, nq);
    };
    for (int i = 0; i < N; ++i) {
      r->segment(i * nq, nq) = wa * (knot(i + 1) - 2.0 * knot(i) + knot(i - 1));
      if (!jac) continue;
      const int coef[3] = {1, -2, 1};
      for (int j = 0; j < 3; ++j) {
        const int idx = i + 1 - j;  // knot index
        if (idx < 1) continue;
        jac->block(i * nq, (idx - 1) * nq, nq, nq) = coef[j] * wa * Matrix::Identity(nq, nq);
      }
    }
    for (int i = 1; i <= N; ++i) {
      const int row = (N + i - 1) * nq;
      r->segment(row, nq) = wt * (z.segment((i - 1) * nq, nq) - target[i]);
      if (jac) jac->block(row, (i - 1) * nq, nq, nq) = wt * Matrix::Identity(nq, nq);
    }
  };

  if (!hp.nlp.labels.empty()) {
    const SequenceSpec* sp = &spec;
    const Scene* sc = &scene;
    const Vector base = state.x;
    const std::vector<int> phases = hp.phases;
    const int total = static_cast<int>(hp.nlp.labels.size());
    hp.nlp.constraints = [sp, sc, base, phases, rows, N, n, nq, dt, x0, total](const Vector& z, Vector* g,
                                                                                Matrix* jac) {
      g->resize(total);
      if (jac) jac->setZero(total, z.size());
      int row = 0;
      for (int i = 1; i <= N; ++i) {
        if (phases[i] < 0) continue;
        Vector x = base;
        const Vector prev = i == 1 ? x0 : Vector(z.segment((i - 2) * nq, nq));
        x.head(nq) = z.segment((i - 1) * nq, nq);
        Vector xdot = Vector::Zero(n);
        xdot.head(nq) = (x.head(nq) - prev) / dt;
        const FeatureValue f = sp->phases[phases[i]].running.Evaluate(SystemState(x, xdot), *sc);
        const int d = rows[i];
        g->segment(row, d) = f.value;
        if (jac) {
          const Matrix jx = f.jacobian.leftCols(nq);
          const Matrix jv = f.jacobian.middleCols(n, nq);
          jac->block(row, (i - 1) * nq, d, nq) = jx + jv / dt;
          if (i > 1) jac->block(row, (i - 2) * nq, d, nq) = -jv / dt;
        }
        row += d;
      }
    };
  }
  return hp;
}

HorizonPath SolveHorizon(const SequenceSpec& spec, const Scene& scene, const SystemState& state,
                         const CubicSplinePath& reference, double now, const PhaseSchedule& schedule, double alpha,
                         const HorizonPath* warm, const HorizonOptions& options) {
  const HorizonProblem hp = BuildHorizonProblem(spec, scene, state, reference, now, schedule, alpha, options);
  const int N = hp.steps;
  const int nq = hp.block_size;
  Vector init(hp.nlp.dim);
  for (int i = 1; i <= N; ++i) {
    const double t = now + i * options.dt;
    init.segment((i - 1) * nq, nq) =
        warm && !warm->empty() && warm->knots.front().size() == nq ? warm->Sample(t) : reference.Evaluate(t).position;
  }
  const SolverResult res = SolveAugmentedLagrangian(hp.nlp, init, options.auglag);

  HorizonPath path;
  path.start_time = now;
  path.dt = options.dt;
  path.phases = hp.phases;
  path.knots.push_back(state.x.head(nq));
  for (int i = 1; i <= N; ++i) path.knots.push_back(res.z.segment((i - 1) * nq, nq));
  path.objective = res.objective;
  path.max_violation = res.max_violation;
  path.outer_iterations = res.iterations;
  path.inner_iterations = res.inner_iterations;
  path.converged = res.converged;
  return path;
}

}  // namespace secmpc
