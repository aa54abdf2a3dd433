#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "secmpc/common.h"

namespace secmpc {

inline constexpr const char* kTraceSchema = "secmpc-trace/1";

struct FramePose {
  Vector position;
  double heading = 0.0;
};

// One controller cycle.
struct TraceRecord {
  int cycle = 0;
  double clock = 0.0;
  Vector q, qdot;  // actuated agent state as measured
  std::map<std::string, FramePose> frames;
  int phase = 0;
  std::vector<double> taus;
  std::optional<double> time_to_go;  // absent for the regulator
  Vector accel;                      // commanded acceleration of the last plant step
  int waypoint_iterations = 0;
  int timing_iterations = 0;
  int horizon_iterations = 0;
  double waypoint_ms = 0.0;
  double timing_ms = 0.0;
  double horizon_ms = 0.0;
  double cycle_ms = 0.0;
  double waypoint_violation = 0.0;
  double running_violation = 0.0;
  bool frozen = false;
  bool degraded = false;
  std::vector<std::string> events;  // "progression 0->1", "backtrack 2->1", "perturbation move_frame green"
};

struct TraceSummary {
  bool completed = false;
  double total_time = 0.0;      // completion time, or the simulated duration
  double predicted_time = 0.0;  // first cycle's planned time to go
  int cycles = 0;
  int progressions = 0;
  int backtracks = 0;
  int perturbations = 0;
  int degraded_cycles = 0;
  bool healthy = true;  // fewer than half of the cycles degraded
  double median_cycle_ms = 0.0;
  double max_accel = 0.0;
};

struct Trace {
  std::string scenario;
  std::string controller;
  unsigned long long seed = 0;
  double noise = 0.0;
  std::vector<TraceRecord> records;
  TraceSummary summary;
};

nlohmann::json ToJson(const TraceRecord& r);
TraceRecord RecordFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const TraceSummary& s);
TraceSummary SummaryFromJson(const nlohmann::json& j);

// Line-delimited JSON: a header line, one line per record, a footer line.
void WriteTrace(const Trace& trace, std::ostream& out);
void WriteTraceFile(const Trace& trace, const std::string& path);
// Throws SpecError on malformed lines or a schema mismatch.
Trace ReadTrace(std::istream& in);
Trace ReadTraceFile(const std::string& path);

// Columnar export. Known channels: time_to_go, accel, phase, tau1, speed,
// cycle_ms, running_violation.
const std::vector<std::string>& PlotChannels();
// Whitespace-separated columns "clock <channel>". Throws SpecError on an
// unknown channel, naming the available ones.
void ExportChannel(const Trace& trace, const std::string& channel, std::ostream& out);

}  // namespace secmpc
