#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "secmpc/sim.h"
#include "secmpc/timing.h"

namespace secmpc {

// Names accepted by RunAnalysis.
const std::vector<std::string>& AnalysisNames();

// Best of several deterministic timing initializations, by objective.
TimingSolution SolveTimingMultiStart(const Vector& x0, const Vector& v0, const std::vector<Vector>& waypoints,
                                     double alpha, const TimingOptions& options = {});

struct Fig5aPoint {
  double offset = 0.0;
  Vector start;
  double total_time = 0.0;
  double objective = 0.0;
  std::vector<SplineSample> path;  // sampled at 0.05 s
};

struct Fig5aResult {
  std::vector<Fig5aPoint> points;
  // Largest relative total-time change between adjacent offsets,
  // |T2 - T1| / min(T1, T2), and the index of its left point.
  double max_jump = 0.0;
  int jump_index = -1;
  bool discontinuous = false;  // max_jump > 0.5
};

struct Fig5aOptions {
  double lo = -0.6;
  double hi = 0.0;
  double step = 0.01;
  double x_offset = 0.05;  // lateral start offset; the sweep moves the start along y
  double alpha = 1.0;
};

Fig5aResult RunFig5a(const Fig5aOptions& options = {});

struct RegulatorCase {
  double error = 0.0;
  Trace secmpc, unclipped, clipped;
  double secmpc_peak = 0.0;
  double unclipped_peak = 0.0;
  double clipped_peak = 0.0;
  double secmpc_finish = INFINITY;  // clock at which time-to-go reaches 0
  double unclipped_decay = 0.0;     // time to 1% decay
  double clipped_decay = 0.0;
  double unclipped_final_error = 0.0;  // |x - target| at the end of the run
  double clipped_final_error = 0.0;
};

struct RegulatorCompareOptions {
  std::vector<double> errors = {1.0, 2.5, 5.0, 10.0};
  double omega = 2.0;
  double a_max = 4.0;
  double duration = 20.0;
};

struct RegulatorCompareResult {
  std::vector<RegulatorCase> cases;
};

RegulatorCompareResult RunRegulatorCompare(const RegulatorCompareOptions& options = {});

struct WaypointSeed {
  std::uint64_t seed = 0;
  std::vector<Vector> waypoints;
  double secmpc_time = 0.0;
  double sequential_time = 0.0;
  bool secmpc_completed = false;
  bool sequential_completed = false;
};

struct FiveWaypointsResult {
  std::vector<WaypointSeed> seeds;
  double secmpc_mean = 0.0, secmpc_std = 0.0;
  double sequential_mean = 0.0, sequential_std = 0.0;
  double win_rate = 0.0;   // fraction of seeds where secmpc is strictly faster
  double reduction = 0.0;  // 1 - secmpc_mean / sequential_mean
};

// Waypoints for one seed, uniform in [-1, 1]^3.
std::vector<Vector> RandomWaypoints(std::uint64_t seed, int count = 5, int dim = 3);
FiveWaypointsResult RunFiveWaypoints(int seeds);

struct PushRun {
  std::uint64_t seed = 0;
  bool completed = false;
  double total_time = 0.0;
  int backtracks = 0;
  int perturbations = 0;
  double median_cycle_ms = 0.0;
};

struct Push2dOptions {
  int seeds = 50;
  std::optional<double> heading_noise;  // scenario default when unset
  bool apply_events = true;
};

struct Push2dResult {
  std::vector<PushRun> runs;
  double completion_rate = 0.0;
  double median_cycle_ms = 0.0;  // median over all cycles of all runs
  int min_backtracks = 0;        // over runs with at least one perturbation
  bool all_perturbed_backtracked = false;
};

Push2dResult RunPush2d(const Push2dOptions& options);

// Delimiter-separated summaries.
void WriteSummary(const Fig5aResult& r, std::ostream& out);
void WriteSummary(const RegulatorCompareResult& r, std::ostream& out);
void WriteSummary(const FiveWaypointsResult& r, std::ostream& out);
void WriteSummary(const Push2dResult& r, std::ostream& out);

// Runs one analysis by name, printing the summary to `out` and writing the
// summary plus raw data into `out_dir` when it is non-empty. `seeds` <= 0
// selects the analysis default. Throws SpecError for an unknown name.
void RunAnalysis(const std::string& name, int seeds, const std::string& out_dir, std::ostream& out);

}  // namespace secmpc
