#include "secmpc/trace.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace secmpc {
namespace {

using nlohmann::json;

json Vec(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector VecFrom(const json& j) {
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

json ToJson(const TraceRecord& r) {
  json j;
  j["type"] = "cycle";
  j["cycle"] = r.cycle;
  j["clock"] = r.clock;
  j["q"] = Vec(r.q);
  j["qdot"] = Vec(r.qdot);
  json frames = json::object();
  for (const auto& [name, pose] : r.frames) frames[name] = {{"position", Vec(pose.position)}, {"heading", pose.heading}};
  j["frames"] = std::move(frames);
  j["phase"] = r.phase;
  j["taus"] = r.taus;
  j["time_to_go"] = r.time_to_go ? json(*r.time_to_go) : json(nullptr);
  j["accel"] = Vec(r.accel);
  j["iterations"] = {{"waypoint", r.waypoint_iterations}, {"timing", r.timing_iterations},
                     {"horizon", r.horizon_iterations}};
  j["ms"] = {{"waypoint", r.waypoint_ms}, {"timing", r.timing_ms}, {"horizon", r.horizon_ms}, {"cycle", r.cycle_ms}};
  j["violation"] = {{"waypoint", r.waypoint_violation}, {"running", r.running_violation}};
  j["frozen"] = r.frozen;
  j["degraded"] = r.degraded;
  j["events"] = r.events;
  return j;
}

TraceRecord RecordFromJson(const json& j) {
  TraceRecord r;
  r.cycle = j.at("cycle").get<int>();
  r.clock = j.at("clock").get<double>();
  r.q = VecFrom(j.at("q"));
  r.qdot = VecFrom(j.at("qdot"));
  for (const auto& [name, pose] : j.at("frames").items()) {
    r.frames[name] = {VecFrom(pose.at("position")), pose.at("heading").get<double>()};
  }
  r.phase = j.at("phase").get<int>();
  r.taus = j.at("taus").get<std::vector<double>>();
  if (!j.at("time_to_go").is_null()) r.time_to_go = j.at("time_to_go").get<double>();
  r.accel = VecFrom(j.at("accel"));
  const json& it = j.at("iterations");
  r.waypoint_iterations = it.at("waypoint").get<int>();
  r.timing_iterations = it.at("timing").get<int>();
  r.horizon_iterations = it.at("horizon").get<int>();
  const json& ms = j.at("ms");
  r.waypoint_ms = ms.at("waypoint").get<double>();
  r.timing_ms = ms.at("timing").get<double>();
  r.horizon_ms = ms.at("horizon").get<double>();
  r.cycle_ms = ms.at("cycle").get<double>();
  r.waypoint_violation = j.at("violation").at("waypoint").get<double>();
  r.running_violation = j.at("violation").at("running").get<double>();
  r.frozen = j.at("frozen").get<bool>();
  r.degraded = j.at("degraded").get<bool>();
  r.events = j.at("events").get<std::vector<std::string>>();
  return r;
}

json ToJson(const TraceSummary& s) {
  return {{"completed", s.completed},
          {"total_time", s.total_time},
          {"predicted_time", s.predicted_time},
          {"cycles", s.cycles},
          {"progressions", s.progressions},
          {"backtracks", s.backtracks},
          {"perturbations", s.perturbations},
          {"degraded_cycles", s.degraded_cycles},
          {"healthy", s.healthy},
          {"median_cycle_ms", s.median_cycle_ms},
          {"max_accel", s.max_accel}};
}

TraceSummary SummaryFromJson(const json& j) {
  TraceSummary s;
  s.completed = j.at("completed").get<bool>();
  s.total_time = j.at("total_time").get<double>();
  s.predicted_time = j.at("predicted_time").get<double>();
  s.cycles = j.at("cycles").get<int>();
  s.progressions = j.at("progressions").get<int>();
  s.backtracks = j.at("backtracks").get<int>();
  s.perturbations = j.at("perturbations").get<int>();
  s.degraded_cycles = j.at("degraded_cycles").get<int>();
  s.healthy = j.at("healthy").get<bool>();
  s.median_cycle_ms = j.at("median_cycle_ms").get<double>();
  s.max_accel = j.at("max_accel").get<double>();
  return s;
}

void WriteTrace(const Trace& trace, std::ostream& out) {
  const json header = {{"type", "header"},         {"schema", kTraceSchema},   {"scenario", trace.scenario},
                       {"controller", trace.controller}, {"seed", trace.seed}, {"noise", trace.noise}};
  out << header.dump() << '\n';
  for (const auto& r : trace.records) out << ToJson(r).dump() << '\n';
  json footer = ToJson(trace.summary);
  footer["type"] = "footer";
  out << footer.dump() << '\n';
}

void WriteTraceFile(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write trace file '" + path + "'");
  WriteTrace(trace, out);
}

Trace ReadTrace(std::istream& in) {
  Trace t;
  std::string line;
  int lineno = 0;
  bool have_header = false, have_footer = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SpecError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    try {
      if (type == "header") {
        const std::string schema = j.value("schema", "");
        if (schema != kTraceSchema) {
          throw SpecError("trace schema '" + schema + "' does not match '" + kTraceSchema + "'");
        }
        t.scenario = j.at("scenario").get<std::string>();
        t.controller = j.at("controller").get<std::string>();
        t.seed = j.at("seed").get<unsigned long long>();
        t.noise = j.at("noise").get<double>();
        have_header = true;
      } else if (type == "cycle") {
        if (!have_header) throw SpecError("trace record before header");
        t.records.push_back(RecordFromJson(j));
      } else if (type == "footer") {
        t.summary = SummaryFromJson(j);
        have_footer = true;
      } else {
        throw SpecError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw SpecError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw SpecError("trace has no header line");
  if (!have_footer) throw SpecError("trace has no footer line (truncated?)");
  return t;
}

Trace ReadTraceFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open trace file '" + path + "'");
  return ReadTrace(in);
}

const std::vector<std::string>& PlotChannels() {
  static const std::vector<std::string> kChannels = {"time_to_go", "accel",    "phase",
                                                     "tau1",       "speed",    "cycle_ms",
                                                     "running_violation"};
  return kChannels;
}

void ExportChannel(const Trace& trace, const std::string& channel, std::ostream& out) {
  bool known = false;
  for (const auto& c : PlotChannels()) known = known || c == channel;
  if (!known) {
    std::string list;
    for (const auto& c : PlotChannels()) list += (list.empty() ? "" : ", ") + c;
    throw SpecError("unknown channel '" + channel + "' (available: " + list + ")");
  }
  out << "# clock " << channel << '\n';
  out.precision(10);
  for (const auto& r : trace.records) {
    out << r.clock << ' ';
    if (channel == "time_to_go") {
      if (r.time_to_go) {
        out << *r.time_to_go;
      } else {
        out << "nan";
      }
    } else if (channel == "accel") {
      out << (r.accel.size() ? r.accel.norm() : 0.0);
    } else if (channel == "phase") {
      out << r.phase;
    } else if (channel == "tau1") {
      if (r.taus.empty()) {
        out << "nan";
      } else {
        out << r.taus.front();
      }
    } else if (channel == "speed") {
      out << r.qdot.norm();
    } else if (channel == "cycle_ms") {
      out << r.cycle_ms;
    } else {
      out << r.running_violation;
    }
    out << '\n';
  }
}

}  // namespace secmpc
