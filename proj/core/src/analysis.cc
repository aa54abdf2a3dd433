#include "secmpc/analysis.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "secmpc/cubic.h"

namespace secmpc {
namespace {

namespace fs = std::filesystem;

std::ofstream OpenOut(const std::string& dir, const std::string& file) {
  fs::create_directories(dir);
  const std::string path = (fs::path(dir) / file).string();
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write '" + path + "'");
  out.precision(10);
  return out;
}

double Mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation.
double Std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double PeakAccel(const Trace& t) {
  double peak = 0.0;
  for (const auto& r : t.records) {
    if (r.accel.size()) peak = std::max(peak, r.accel.norm());
  }
  return peak;
}

std::string Vec(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v(i));
  return s;
}

}  // namespace

const std::vector<std::string>& AnalysisNames() {
  static const std::vector<std::string> kNames = {"fig5a", "regulator_compare", "five_waypoints", "push2d"};
  return kNames;
}

TimingSolution SolveTimingMultiStart(const Vector& x0, const Vector& v0, const std::vector<Vector>& waypoints,
                                     double alpha, const TimingOptions& options) {
  const int dim = static_cast<int>(x0.size());
  const TimingSolution base = DefaultTimingInit(x0, waypoints, options);
  std::vector<std::vector<Vector>> velocity_sets = {base.velocities};
  std::vector<Vector> candidates = {Vector::Zero(dim)};
  for (int i = 0; i < dim; ++i) {
    for (double s : {-2.0, -1.0, 1.0, 2.0}) {
      Vector v = Vector::Zero(dim);
      v(i) = s;
      candidates.push_back(v);
    }
  }
  for (const auto& c : candidates) velocity_sets.emplace_back(base.velocities.size(), c);

  TimingSolution best = SolveTiming(x0, v0, waypoints, alpha, nullptr, options);
  for (double t1 : {0.1, 0.3, 1.0, 3.0}) {
    for (const auto& vs : velocity_sets) {
      TimingSolution init = base;
      init.taus[0] = t1;
      init.velocities = vs;
      TimingSolution s = SolveTiming(x0, v0, waypoints, alpha, &init, options);
      if (s.status == SolveStatus::kNonFinite) continue;
      if (best.status == SolveStatus::kNonFinite || s.objective < best.objective - 1e-12) best = std::move(s);
    }
  }
  return best;
}

Fig5aResult RunFig5a(const Fig5aOptions& options) {
  if (!(options.step > 0.0) || !(options.hi >= options.lo)) throw SpecError("fig5a: bad sweep range");
  const Scenario sc = LoadScenario("fig5a");
  std::vector<Vector> waypoints;
  for (const char* name : {"first", "second"}) waypoints.push_back(sc.spec.scene.at(name).position);
  const Vector v0 = sc.sim.initial_velocity;
  Fig5aResult r;
  const int n = static_cast<int>(std::floor((options.hi - options.lo) / options.step + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) {
    Fig5aPoint p;
    p.offset = options.lo + i * options.step;
    p.start = Vector(2);
    p.start << options.x_offset, p.offset;
    const TimingSolution s = SolveTimingMultiStart(p.start, v0, waypoints, options.alpha);
    p.total_time = s.total_time();
    p.objective = s.objective;
    const CubicSplinePath path = BuildSpline(0.0, p.start, v0, s.taus, waypoints, s.KnotVelocities(2));
    for (double t = 0.0; t <= p.total_time + 1e-9; t += 0.05) p.path.push_back(path.Evaluate(t));
    r.points.push_back(std::move(p));
  }
  for (size_t i = 1; i < r.points.size(); ++i) {
    const double a = r.points[i - 1].total_time, b = r.points[i].total_time;
    const double jump = std::abs(b - a) / std::max(std::min(a, b), 1e-12);
    if (jump > r.max_jump) {
      r.max_jump = jump;
      r.jump_index = static_cast<int>(i - 1);
    }
  }
  r.discontinuous = r.max_jump > 0.5;
  return r;
}

RegulatorCompareResult RunRegulatorCompare(const RegulatorCompareOptions& options) {
  RegulatorCompareResult result;
  const Scenario base = LoadScenario("regulator1d");
  for (double error : options.errors) {
    if (!(error > 0.0)) throw SpecError("regulator_compare: initial errors must be positive");
    Scenario sc = base;
    sc.spec.scene.at("goal").position = Vector::Constant(1, error);
    RegulatorCase c;
    c.error = error;
    SimOptions opt;
    opt.duration = options.duration;
    opt.regulator.omega = options.omega;
    c.secmpc = Simulate(sc, opt);
    opt.controller = ControllerKind::kRegulator;
    c.unclipped = Simulate(sc, opt);
    opt.regulator.a_max = options.a_max;
    c.clipped = Simulate(sc, opt);
    c.secmpc_peak = PeakAccel(c.secmpc);
    c.unclipped_peak = PeakAccel(c.unclipped);
    c.clipped_peak = PeakAccel(c.clipped);
    for (const auto& rec : c.secmpc.records) {
      if (rec.time_to_go && *rec.time_to_go == 0.0) {
        c.secmpc_finish = rec.clock;
        break;
      }
    }
    RegulatorParams unclipped{options.omega, INFINITY};
    RegulatorParams clipped{options.omega, options.a_max};
    c.unclipped_decay = RegulatorTimeToDecay(0.0, 0.0, error, unclipped);
    c.clipped_decay = RegulatorTimeToDecay(0.0, 0.0, error, clipped);
    c.unclipped_final_error = std::abs(c.unclipped.records.back().q(0) - error);
    c.clipped_final_error = std::abs(c.clipped.records.back().q(0) - error);
    result.cases.push_back(std::move(c));
  }
  return result;
}

std::vector<Vector> RandomWaypoints(std::uint64_t seed, int count, int dim) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vector> out;
  for (int k = 0; k < count; ++k) {
    Vector w(dim);
    for (int i = 0; i < dim; ++i) w(i) = u(rng);
    out.push_back(w);
  }
  return out;
}

FiveWaypointsResult RunFiveWaypoints(int seeds) {
  if (seeds < 1) throw SpecError("five_waypoints: need at least one seed");
  const Scenario base = LoadScenario("five_waypoints");
  FiveWaypointsResult r;
  std::vector<double> ts, tq;
  int wins = 0;
  for (int s = 1; s <= seeds; ++s) {
    WaypointSeed ws;
    ws.seed = static_cast<std::uint64_t>(s);
    ws.waypoints = RandomWaypoints(ws.seed);
    Scenario sc = base;
    for (int k = 0; k < 5; ++k) sc.spec.scene.at("wp" + std::to_string(k + 1)).position = ws.waypoints[k];
    SimOptions opt;
    opt.seed = ws.seed;
    const Trace a = Simulate(sc, opt);
    opt.controller = ControllerKind::kSequential;
    const Trace b = Simulate(sc, opt);
    ws.secmpc_time = a.summary.total_time;
    ws.sequential_time = b.summary.total_time;
    ws.secmpc_completed = a.summary.completed;
    ws.sequential_completed = b.summary.completed;
    ts.push_back(ws.secmpc_time);
    tq.push_back(ws.sequential_time);
    wins += ws.secmpc_time < ws.sequential_time ? 1 : 0;
    r.seeds.push_back(std::move(ws));
  }
  r.secmpc_mean = Mean(ts);
  r.secmpc_std = Std(ts);
  r.sequential_mean = Mean(tq);
  r.sequential_std = Std(tq);
  r.win_rate = static_cast<double>(wins) / seeds;
  r.reduction = 1.0 - r.secmpc_mean / r.sequential_mean;
  return r;
}

Push2dResult RunPush2d(const Push2dOptions& options) {
  if (options.seeds < 1) throw SpecError("push2d: need at least one seed");
  const Scenario sc = LoadScenario("push2d");
  Push2dResult r;
  std::vector<double> all_ms;
  int completed = 0;
  r.min_backtracks = -1;
  r.all_perturbed_backtracked = true;
  for (int s = 1; s <= options.seeds; ++s) {
    SimOptions opt;
    opt.seed = static_cast<std::uint64_t>(s);
    opt.heading_noise = options.heading_noise;
    opt.apply_events = options.apply_events;
    const Trace t = Simulate(sc, opt);
    PushRun run;
    run.seed = opt.seed;
    run.completed = t.summary.completed;
    run.total_time = t.summary.total_time;
    run.backtracks = t.summary.backtracks;
    run.perturbations = t.summary.perturbations;
    run.median_cycle_ms = t.summary.median_cycle_ms;
    for (const auto& rec : t.records) all_ms.push_back(rec.cycle_ms);
    completed += run.completed ? 1 : 0;
    if (run.perturbations > 0) {
      r.min_backtracks = r.min_backtracks < 0 ? run.backtracks : std::min(r.min_backtracks, run.backtracks);
      r.all_perturbed_backtracked = r.all_perturbed_backtracked && run.backtracks >= 1;
    }
    r.runs.push_back(run);
  }
  if (r.min_backtracks < 0) r.min_backtracks = 0;
  r.completion_rate = static_cast<double>(completed) / options.seeds;
  r.median_cycle_ms = Median(std::move(all_ms));
  return r;
}

void WriteSummary(const Fig5aResult& r, std::ostream& out) {
  out << "analysis\tfig5a\n";
  out << "points\t" << r.points.size() << '\n';
  out << "max_jump\t" << r.max_jump << '\n';
  if (r.jump_index >= 0) {
    const auto& a = r.points[r.jump_index];
    const auto& b = r.points[r.jump_index + 1];
    out << "jump_between\t" << a.offset << '\t' << b.offset << '\n';
    out << "jump_times\t" << a.total_time << '\t' << b.total_time << '\n';
  }
  out << "discontinuous\t" << (r.discontinuous ? "yes" : "no") << '\n';
}

void WriteSummary(const RegulatorCompareResult& r, std::ostream& out) {
  out << "analysis\tregulator_compare\n";
  out << "error\tsecmpc_peak\tunclipped_peak\tclipped_peak\tsecmpc_finish\tunclipped_decay\tclipped_decay\t"
         "unclipped_final_error\tclipped_final_error\n";
  for (const auto& c : r.cases) {
    out << c.error << '\t' << c.secmpc_peak << '\t' << c.unclipped_peak << '\t' << c.clipped_peak << '\t'
        << c.secmpc_finish << '\t' << c.unclipped_decay << '\t' << c.clipped_decay << '\t'
        << c.unclipped_final_error << '\t' << c.clipped_final_error << '\n';
  }
}

void WriteSummary(const FiveWaypointsResult& r, std::ostream& out) {
  out << "analysis\tfive_waypoints\n";
  out << "seeds\t" << r.seeds.size() << '\n';
  out << "secmpc_total_time\t" << r.secmpc_mean << " +- " << r.secmpc_std << '\n';
  out << "sequential_1stage_total_time\t" << r.sequential_mean << " +- " << r.sequential_std << '\n';
  out << "win_rate\t" << r.win_rate << '\n';
  out << "reduction\t" << r.reduction << '\n';
}

void WriteSummary(const Push2dResult& r, std::ostream& out) {
  out << "analysis\tpush2d\n";
  out << "seeds\t" << r.runs.size() << '\n';
  out << "completion_rate\t" << r.completion_rate << '\n';
  out << "min_backtracks_perturbed\t" << r.min_backtracks << '\n';
  std::vector<double> times;
  for (const auto& run : r.runs) {
    if (run.completed) times.push_back(run.total_time);
  }
  out << "total_time_completed\t" << Mean(times) << " +- " << Std(times) << '\n';
  out << "median_cycle_ms\t" << r.median_cycle_ms << '\n';
}

void RunAnalysis(const std::string& name, int seeds, const std::string& out_dir, std::ostream& out) {
  const auto& names = AnalysisNames();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw SpecError("unknown analysis '" + name + "' (valid: " + list + ")");
  }
  const bool files = !out_dir.empty();
  auto summarize = [&](const auto& result) {
    WriteSummary(result, out);
    if (files) {
      std::ofstream f = OpenOut(out_dir, name + "_summary.tsv");
      WriteSummary(result, f);
    }
  };
  if (name == "fig5a") {
    const Fig5aResult r = RunFig5a();
    summarize(r);
    if (files) {
      std::ofstream f = OpenOut(out_dir, "fig5a_sweep.tsv");
      f << "offset\ttotal_time\tobjective\n";
      for (const auto& p : r.points) f << p.offset << '\t' << p.total_time << '\t' << p.objective << '\n';
      std::ofstream g = OpenOut(out_dir, "fig5a_paths.tsv");
      g << "offset\tt\tx\ty\n";
      for (const auto& p : r.points) {
        for (size_t i = 0; i < p.path.size(); ++i) {
          g << p.offset << '\t' << 0.05 * static_cast<double>(i) << '\t' << p.path[i].position(0) << '\t'
            << p.path[i].position(1) << '\n';
        }
      }
    }
  } else if (name == "regulator_compare") {
    const RegulatorCompareResult r = RunRegulatorCompare();
    summarize(r);
    if (files) {
      for (const auto& c : r.cases) {
        const std::string tag = "_e" + std::to_string(static_cast<int>(std::lround(c.error * 10)));
        WriteTraceFile(c.secmpc, (fs::path(out_dir) / ("regulator_compare_secmpc" + tag + ".jsonl")).string());
        WriteTraceFile(c.unclipped, (fs::path(out_dir) / ("regulator_compare_unclipped" + tag + ".jsonl")).string());
        WriteTraceFile(c.clipped, (fs::path(out_dir) / ("regulator_compare_clipped" + tag + ".jsonl")).string());
      }
    }
  } else if (name == "five_waypoints") {
    const FiveWaypointsResult r = RunFiveWaypoints(seeds > 0 ? seeds : 20);
    summarize(r);
    if (files) {
      std::ofstream f = OpenOut(out_dir, "five_waypoints_seeds.tsv");
      f << "seed\tsecmpc\tsequential_1stage\tsecmpc_completed\tsequential_completed\twaypoints\n";
      for (const auto& s : r.seeds) {
        f << s.seed << '\t' << s.secmpc_time << '\t' << s.sequential_time << '\t' << s.secmpc_completed << '\t'
          << s.sequential_completed << '\t';
        for (size_t k = 0; k < s.waypoints.size(); ++k) f << (k ? " | " : "") << Vec(s.waypoints[k]);
        f << '\n';
      }
    }
  } else {
    Push2dOptions opt;
    opt.seeds = seeds > 0 ? seeds : 50;
    const Push2dResult r = RunPush2d(opt);
    summarize(r);
    if (files) {
      std::ofstream f = OpenOut(out_dir, "push2d_runs.tsv");
      f << "seed\tcompleted\ttotal_time\tbacktracks\tperturbations\tmedian_cycle_ms\n";
      for (const auto& run : r.runs) {
        f << run.seed << '\t' << run.completed << '\t' << run.total_time << '\t' << run.backtracks << '\t'
          << run.perturbations << '\t' << run.median_cycle_ms << '\n';
      }
    }
  }
}

}  // namespace secmpc
