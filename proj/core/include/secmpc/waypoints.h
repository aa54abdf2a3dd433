#pragma once

#include <vector>

#include "secmpc/auglag.h"
#include "secmpc/model.h"

namespace secmpc {

struct WaypointOptions {
  AugLagOptions auglag;
  // Small chain weights keeping object and shared dofs well posed when the
  // constraints leave them free.
  double object_chain_weight = 1e-4;
  double shared_weight = 1e-4;
};

struct WaypointSolution {
  int first_phase = 0;             // kappa (0-based)
  std::vector<Vector> waypoints;   // full configurations for phases kappa..K-1
  std::vector<double> violations;  // per phase: waypoint and coupling features
  Vector shared;                   // value of the shared dofs
  Vector z;                        // decision vector
  Vector multipliers;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double objective = 0.0;
  double max_violation = 0.0;
  bool converged = false;
  // Last solved waypoint of every phase (K entries, empty until known), used
  // to re-seed phases after backtracking.
  std::vector<Vector> last_known;

  const Vector& waypoint(int phase) const { return waypoints.at(phase - first_phase); }
};

// The waypoint problem over x_{kappa:K} as a constrained NLP. Decision vector:
// per-waypoint dofs of each phase in order, then the shared dofs.
struct WaypointProblem {
  NlpProblem nlp;
  int first_phase = 0;
  int block_size = 0;   // per-waypoint dofs
  int shared_size = 0;
  std::vector<int> constraint_rows;  // per phase
  std::vector<int> per_waypoint;     // configuration indices of a block
  std::vector<int> shared;           // configuration indices of the shared dofs
  Vector x_start;

  // Full configuration of `phase` (or x_start for phase first_phase - 1).
  Vector Assemble(const Vector& z, int phase) const;
};

WaypointProblem BuildWaypointProblem(const SequenceSpec& spec, const Scene& scene, const SystemState& state,
                                     int phase, const WaypointOptions& options = {});

// Initial decision vector: previous solution blocks where the phase is still
// present, otherwise the last known waypoint of that phase, otherwise the
// current configuration.
Vector WaypointWarmStart(const WaypointProblem& problem, const SequenceSpec& spec, const WaypointSolution* warm,
                         Vector* multipliers);

WaypointSolution SolveWaypoints(const SequenceSpec& spec, const Scene& scene, const SystemState& state, int phase,
                                const WaypointSolution* warm = nullptr, const WaypointOptions& options = {});

}  // namespace secmpc
