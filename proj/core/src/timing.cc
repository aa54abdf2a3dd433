#include "secmpc/timing.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace secmpc {

double TimingSolution::total_time() const {
  double t = 0.0;
  for (double tau : taus) t += tau;
  return t;
}

std::vector<Vector> TimingSolution::KnotVelocities(int dim) const {
  std::vector<Vector> v = velocities;
  v.push_back(Vector::Zero(dim));
  return v;
}

namespace {

void CheckInputs(const Vector& x0, const Vector& v0, const std::vector<Vector>& waypoints, double alpha) {
  if (waypoints.empty()) throw SpecError("timing problem needs at least one waypoint");
  if (!(alpha > 0.0)) throw SpecError("timing problem needs alpha > 0");
  if (v0.size() != x0.size()) throw SpecError("timing start position and velocity differ in dimension");
  for (const auto& w : waypoints) {
    if (w.size() != x0.size()) throw SpecError("timing waypoint dimension mismatch");
  }
}

}  // namespace

double TimingObjective(const Vector& x0, const Vector& v0, const std::vector<Vector>& waypoints, double alpha,
                       const std::vector<double>& taus, const std::vector<Vector>& velocities) {
  const int n = static_cast<int>(x0.size());
  double total = 0.0;
  Vector xp = x0, vp = v0;
  for (size_t k = 0; k < waypoints.size(); ++k) {
    const Vector v1 = k + 1 < waypoints.size() ? velocities[k] : Vector::Zero(n);
    total += taus[k] + alpha * EvaluatePieceCost(xp, vp, waypoints[k], v1, taus[k],
                                               std::numeric_limits<double>::min()).psi;
    xp = waypoints[k];
    vp = v1;
  }
  return total;
}

Vector PackTiming(const std::vector<double>& taus, const std::vector<Vector>& velocities) {
  const int k = static_cast<int>(taus.size());
  const int n = velocities.empty() ? 0 : static_cast<int>(velocities.front().size());
  if (static_cast<int>(velocities.size()) != k - 1) throw SpecError("timing pack: need K-1 velocities");
  Vector z(k + (k - 1) * n);
  for (int i = 0; i < k; ++i) {
    z(i * (n + 1)) = taus[i];
    if (i + 1 < k) z.segment(i * (n + 1) + 1, n) = velocities[i];
  }
  return z;
}

void UnpackTiming(const Vector& z, int num_pieces, int dim, std::vector<double>* taus,
                  std::vector<Vector>* velocities) {
  taus->resize(num_pieces);
  velocities->resize(num_pieces - 1);
  for (int i = 0; i < num_pieces; ++i) {
    (*taus)[i] = z(i * (dim + 1));
    if (i + 1 < num_pieces) (*velocities)[i] = z.segment(i * (dim + 1) + 1, dim);
  }
}

LeastSquaresProblem BuildTimingProblem(const Vector& x0, const Vector& v0, const std::vector<Vector>& waypoints,
                                       double alpha, double tau_min) {
  CheckInputs(x0, v0, waypoints, alpha);
  const int K = static_cast<int>(waypoints.size());
  const int n = static_cast<int>(x0.size());
  LeastSquaresProblem p;
  p.dim = K + (K - 1) * n;
  p.lower_bounds = Vector::Constant(p.dim, -INFINITY);
  for (int k = 0; k < K; ++k) p.lower_bounds(k * (n + 1)) = tau_min;
  p.sparsity = Sparsity::Banded(2 * n);
  const double sa = std::sqrt(alpha);
  p.evaluate = [x0, v0, waypoints, sa, K, n, tau_min](const Vector& z, Vector* r, Matrix* jac) {
    const int rows = K * (1 + 2 * n);
    r->resize(rows);
    if (jac) jac->setZero(rows, z.size());
    const Vector zero = Vector::Zero(n);
    for (int k = 0; k < K; ++k) {
      const int ti = k * (n + 1);
      const int vi_prev = k > 0 ? (k - 1) * (n + 1) + 1 : -1;
      const int vi = k + 1 < K ? ti + 1 : -1;
      const double tau = std::max(z(ti), tau_min);
      const Vector& xa = k > 0 ? waypoints[k - 1] : x0;
      const Vector va = k > 0 ? Vector(z.segment(vi_prev, n)) : v0;
      const Vector vb = vi >= 0 ? Vector(z.segment(vi, n)) : zero;
      const PieceCost pc = EvaluatePieceCost(xa, va, waypoints[k], vb, tau, tau_min);
      const int row = k * (1 + 2 * n);
      (*r)(row) = std::sqrt(tau);
      r->segment(row + 1, n) = sa * pc.d_tilde;
      r->segment(row + 1 + n, n) = sa * pc.v_tilde;
      if (!jac) continue;
      Matrix& J = *jac;
      J(row, ti) = 0.5 / std::sqrt(tau);
      J.block(row + 1, ti, n, 1) = sa * pc.dd_dtau;
      J.block(row + 1 + n, ti, n, 1) = sa * pc.dv_dtau;
      for (int j = 0; j < n; ++j) {
        if (vi_prev >= 0) {
          J(row + 1 + j, vi_prev + j) = sa * pc.dd_dv0;
          J(row + 1 + n + j, vi_prev + j) = sa * pc.dv_dv0;
        }
        if (vi >= 0) {
          J(row + 1 + j, vi + j) = sa * pc.dd_dv1;
          J(row + 1 + n + j, vi + j) = sa * pc.dv_dv1;
        }
      }
    }
  };
  return p;
}

TimingSolution DefaultTimingInit(const Vector& x0, const std::vector<Vector>& waypoints,
                                 const TimingOptions& options) {
  const int K = static_cast<int>(waypoints.size());
  TimingSolution s;
  s.taus.resize(K);
  Vector prev = x0;
  for (int k = 0; k < K; ++k) {
    s.taus[k] = std::max(options.min_init_tau, (waypoints[k] - prev).norm() / options.nominal_speed);
    prev = waypoints[k];
  }
  for (int k = 0; k + 1 < K; ++k) {
    const Vector& before = k > 0 ? waypoints[k - 1] : x0;
    s.velocities.push_back((waypoints[k + 1] - before) / (s.taus[k] + s.taus[k + 1]));
  }
  return s;
}

TimingSolution SolveTiming(const Vector& x0, const Vector& v0, const std::vector<Vector>& waypoints, double alpha,
                           const TimingSolution* init, const TimingOptions& options) {
  const LeastSquaresProblem problem = BuildTimingProblem(x0, v0, waypoints, alpha, options.tau_min);
  const int K = static_cast<int>(waypoints.size());
  const int n = static_cast<int>(x0.size());
  TimingSolution start;
  if (init && init->num_pieces() == K && static_cast<int>(init->velocities.size()) == K - 1) {
    start = *init;
  } else {
    start = DefaultTimingInit(x0, waypoints, options);
  }
  for (auto& v : start.velocities) {
    if (v.size() != n) throw SpecError("timing warm start velocity dimension mismatch");
  }
  const GaussNewtonResult gn = MinimizeGaussNewton(problem, PackTiming(start.taus, start.velocities),
                                                   options.gauss_newton);
  TimingSolution out;
  UnpackTiming(gn.z, K, n, &out.taus, &out.velocities);
  out.objective = gn.cost;
  out.gradient_norm = gn.gradient_norm;
  out.iterations = gn.iterations;
  out.status = gn.status;
  return out;
}

}  // namespace secmpc
