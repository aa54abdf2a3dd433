#include "secmpc/waypoints.h"

#include <cmath>

namespace secmpc {

Vector WaypointProblem::Assemble(const Vector& z, int phase) const {
  if (phase < first_phase) return x_start;
  Vector x = x_start;
  const int at = (phase - first_phase) * block_size;
  for (int i = 0; i < block_size; ++i) x(per_waypoint[i]) = z(at + i);
  const int s0 = nlp.dim - shared_size;
  for (int j = 0; j < shared_size; ++j) x(shared[j]) = z(s0 + j);
  return x;
}

namespace {

// Adds d(value)/dx (rows x n) of configuration `phase` into the decision
// Jacobian.
void ScatterConfigJacobian(const WaypointProblem& wp, const Matrix& dx, int phase, int row, Matrix* jac) {
  if (phase < wp.first_phase) return;
  const int at = (phase - wp.first_phase) * wp.block_size;
  for (int i = 0; i < wp.block_size; ++i) jac->block(row, at + i, dx.rows(), 1) += dx.col(wp.per_waypoint[i]);
  const int s0 = wp.nlp.dim - wp.shared_size;
  for (int j = 0; j < wp.shared_size; ++j) jac->block(row, s0 + j, dx.rows(), 1) += dx.col(wp.shared[j]);
}

}  // namespace

// The returned problem keeps pointers to `spec` and `scene`.
WaypointProblem BuildWaypointProblem(const SequenceSpec& spec, const Scene& scene, const SystemState& state,
                                     int phase, const WaypointOptions& options) {
  const int K = spec.num_phases();
  if (phase < 0 || phase >= K) throw SpecError("waypoint problem: phase out of range");
  if (state.dim() != spec.dim()) throw SpecError("waypoint problem: state dimension does not match the layout");
  const DofLayout& layout = spec.layout;
  const int n = layout.dim();
  const int na = layout.actuated_dim();

  WaypointProblem wp;
  wp.first_phase = phase;
  wp.per_waypoint = layout.per_waypoint_indices();
  wp.shared = layout.shared_indices();
  wp.block_size = static_cast<int>(wp.per_waypoint.size());
  wp.shared_size = static_cast<int>(wp.shared.size());
  wp.x_start = state.x;
  const int count = K - phase;
  wp.nlp.dim = count * wp.block_size + wp.shared_size;
  wp.nlp.sparsity = Sparsity::Banded(2 * wp.block_size - 1, wp.shared_size);

  for (int k = phase; k < K; ++k) {
    const PhaseSpec& ph = spec.phases[k];
    wp.constraint_rows.push_back(ph.waypoint.dim() + ph.coupling.dim());
    for (auto t : ph.waypoint.labels()) wp.nlp.labels.push_back(t);
    for (auto t : ph.coupling.labels()) wp.nlp.labels.push_back(t);
  }

  std::vector<int> object_idx;
  for (int i : wp.per_waypoint) {
    if (i >= na) object_idx.push_back(i);
  }
  const bool pose_reg = spec.pose_reg_weight > 0.0 && spec.q_home.size() == na;
  const double sw_pose = std::sqrt(spec.pose_reg_weight);
  const double sw_obj = std::sqrt(options.object_chain_weight);
  const double sw_shared = std::sqrt(options.shared_weight);
  const int per_k = na + (pose_reg ? na : 0) + static_cast<int>(object_idx.size());
  const int cost_rows = count * per_k + wp.shared_size;

  // Captures a copy of the index bookkeeping; spec and scene by pointer.
  const WaypointProblem shape = wp;
  const SequenceSpec* sp = &spec;
  const Scene* sc = &scene;
  const Vector q_home = spec.q_home;

  wp.nlp.cost = [shape, q_home, pose_reg, sw_pose, sw_obj, sw_shared, per_k, cost_rows, object_idx, na, n,
                 count](const Vector& z, Vector* r, Matrix* jac) {
    r->setZero(cost_rows);
    if (jac) jac->setZero(cost_rows, z.size());
    Vector prev = shape.Assemble(z, shape.first_phase - 1);
    for (int c = 0; c < count; ++c) {
      const int k = shape.first_phase + c;
      const Vector x = shape.Assemble(z, k);
      int row = c * per_k;
      Matrix dcur = Matrix::Zero(per_k, n);
      Matrix dprev = Matrix::Zero(per_k, n);
      r->segment(row, na) = x.head(na) - prev.head(na);
      dcur.topLeftCorner(na, na).setIdentity();
      dprev.topLeftCorner(na, na) = -Matrix::Identity(na, na);
      int local = na;
      if (pose_reg) {
        r->segment(row + local, na) = sw_pose * (x.head(na) - q_home);
        dcur.block(local, 0, na, na) = sw_pose * Matrix::Identity(na, na);
        local += na;
      }
      for (int i : object_idx) {
        (*r)(row + local) = sw_obj * (x(i) - prev(i));
        dcur(local, i) = sw_obj;
        dprev(local, i) = -sw_obj;
        ++local;
      }
      if (jac) {
        ScatterConfigJacobian(shape, dcur, k, row, jac);
        ScatterConfigJacobian(shape, dprev, k - 1, row, jac);
      }
      prev = x;
    }
    const int s0 = shape.nlp.dim - shape.shared_size;
    for (int j = 0; j < shape.shared_size; ++j) {
      (*r)(count * per_k + j) = sw_shared * (z(s0 + j) - shape.x_start(shape.shared[j]));
      if (jac) (*jac)(count * per_k + j, s0 + j) = sw_shared;
    }
  };

  const int total_rows = static_cast<int>(wp.nlp.labels.size());
  wp.nlp.constraints = [shape, sp, sc, n, count, total_rows](const Vector& z, Vector* g, Matrix* jac) {
    g->setZero(total_rows);
    if (jac) jac->setZero(total_rows, z.size());
    Vector prev = shape.Assemble(z, shape.first_phase - 1);
    int row = 0;
    for (int c = 0; c < count; ++c) {
      const int k = shape.first_phase + c;
      const PhaseSpec& ph = sp->phases[k];
      const Vector x = shape.Assemble(z, k);
      if (!ph.waypoint.empty()) {
        const FeatureValue f = ph.waypoint.Evaluate(SystemState::AtRest(x), *sc);
        const int d = static_cast<int>(f.value.size());
        g->segment(row, d) = f.value;
        if (jac) ScatterConfigJacobian(shape, f.jacobian.leftCols(n), k, row, jac);
        row += d;
      }
      if (!ph.coupling.empty()) {
        const FeatureValue f = ph.coupling.Evaluate(SystemState(x, x - prev), *sc);
        const int d = static_cast<int>(f.value.size());
        g->segment(row, d) = f.value;
        if (jac) {
          const Matrix jx = f.jacobian.leftCols(n);
          const Matrix jv = f.jacobian.rightCols(n);
          ScatterConfigJacobian(shape, jx + jv, k, row, jac);
          ScatterConfigJacobian(shape, -jv, k - 1, row, jac);
        }
        row += d;
      }
      prev = x;
    }
  };
  return wp;
}

Vector WaypointWarmStart(const WaypointProblem& problem, const SequenceSpec& spec, const WaypointSolution* warm,
                         Vector* multipliers) {
  const int K = spec.num_phases();
  const int bs = problem.block_size;
  Vector z(problem.nlp.dim);
  multipliers->setZero(static_cast<Eigen::Index>(problem.nlp.labels.size()));
  int mrow = 0;
  for (int k = problem.first_phase; k < K; ++k) {
    const int at = (k - problem.first_phase) * bs;
    Vector source = problem.x_start;
    if (warm && k >= warm->first_phase && k - warm->first_phase < static_cast<int>(warm->waypoints.size())) {
      source = warm->waypoint(k);
      // Multipliers of a phase that is still present carry over.
      int prev_row = 0;
      for (int j = warm->first_phase; j < k; ++j) {
        prev_row += spec.phases[j].waypoint.dim() + spec.phases[j].coupling.dim();
      }
      const int rows = problem.constraint_rows[k - problem.first_phase];
      if (warm->multipliers.size() >= prev_row + rows) {
        multipliers->segment(mrow, rows) = warm->multipliers.segment(prev_row, rows);
      }
    } else if (warm && static_cast<int>(warm->last_known.size()) == K && warm->last_known[k].size() > 0) {
      source = warm->last_known[k];
    }
    for (int i = 0; i < bs; ++i) z(at + i) = source(problem.per_waypoint[i]);
    mrow += problem.constraint_rows[k - problem.first_phase];
  }
  const int s0 = problem.nlp.dim - problem.shared_size;
  for (int j = 0; j < problem.shared_size; ++j) z(s0 + j) = problem.x_start(problem.shared[j]);
  return z;
}

WaypointSolution SolveWaypoints(const SequenceSpec& spec, const Scene& scene, const SystemState& state, int phase,
                                const WaypointSolution* warm, const WaypointOptions& options) {
  const WaypointProblem wp = BuildWaypointProblem(spec, scene, state, phase, options);
  Vector lambda;
  const Vector init = WaypointWarmStart(wp, spec, warm, &lambda);
  const SolverResult res = SolveAugmentedLagrangian(wp.nlp, init, options.auglag, &lambda);

  const int K = spec.num_phases();
  WaypointSolution out;
  out.first_phase = phase;
  out.z = res.z;
  out.multipliers = res.multipliers;
  out.outer_iterations = res.iterations;
  out.inner_iterations = res.inner_iterations;
  out.objective = res.objective;
  out.max_violation = res.max_violation;
  out.converged = res.converged;
  out.last_known = warm && static_cast<int>(warm->last_known.size()) == K ? warm->last_known
                                                                           : std::vector<Vector>(K);
  Vector prev = wp.x_start;
  for (int k = phase; k < K; ++k) {
    Vector x = wp.Assemble(res.z, k);
    const PhaseSpec& ph = spec.phases[k];
    double v = 0.0;
    if (!ph.waypoint.empty()) v = ph.waypoint.Violation(SystemState::AtRest(x), scene);
    if (!ph.coupling.empty()) v = std::max(v, ph.coupling.Violation(SystemState(x, x - prev), scene));
    out.violations.push_back(v);
    out.last_known[k] = x;
    out.waypoints.push_back(x);
    prev = std::move(x);
  }
  out.shared = Vector(wp.shared_size);
  for (int j = 0; j < wp.shared_size; ++j) out.shared(j) = res.z(wp.nlp.dim - wp.shared_size + j);
  return out;
}

}  // namespace secmpc
