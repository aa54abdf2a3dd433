#pragma once

#include <functional>
#include <vector>

#include "secmpc/auglag.h"
#include "secmpc/cubic.h"
#include "secmpc/model.h"

namespace secmpc {

struct HorizonOptions {
  double horizon = 1.0;  // H, seconds
  double dt = 0.1;
  AugLagOptions auglag;
};

// Short path of the actuated dofs at knots t_i = start_time + i dt,
// i = 0..N; knot 0 is the filtered configuration.
struct HorizonPath {
  double start_time = 0.0;
  double dt = 0.1;
  std::vector<Vector> knots;
  std::vector<int> phases;  // running-constraint phase per knot, -1 for knot 0
  double objective = 0.0;
  double max_violation = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;

  bool empty() const { return knots.empty(); }
  // Linear interpolation between knots; holds the end values outside.
  Vector Sample(double t) const;
};

// Phase whose running constraint applies at time t after the cycle anchor;
// -1 for none.
using PhaseSchedule = std::function<int(double)>;

struct HorizonProblem {
  NlpProblem nlp;
  int steps = 0;      // N
  int block_size = 0; // actuated dofs
  std::vector<int> phases;
};

// Decision vector: knots 1..N of the actuated dofs. Non-actuated dofs stay at
// their measured values. Keeps pointers to `spec` and `scene`.
HorizonProblem BuildHorizonProblem(const SequenceSpec& spec, const Scene& scene, const SystemState& state,
                                   const CubicSplinePath& reference, double now, const PhaseSchedule& schedule,
                                   double alpha, const HorizonOptions& options = {});

HorizonPath SolveHorizon(const SequenceSpec& spec, const Scene& scene, const SystemState& state,
                         const CubicSplinePath& reference, double now, const PhaseSchedule& schedule, double alpha,
                         const HorizonPath* warm = nullptr, const HorizonOptions& options = {});

}  // namespace secmpc
