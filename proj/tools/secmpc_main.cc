#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "secmpc/analysis.h"
#include "secmpc/checks.h"
#include "secmpc/scenario.h"
#include "secmpc/sim.h"
#include "secmpc/trace.h"

#ifdef SECMPC_HAVE_BRIDGE
#include "secmpc/bridge/live_session.h"
#include "secmpc/bridge/server.h"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitScenario = 2;
constexpr int kExitUnhealthy = 3;

void SetupLogging() {
  auto logger = spdlog::stderr_color_mt("secmpc");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("SECMPC_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("SECMPC_LOG_LEVEL '{}' not one of error, info, debug; using info", level);
  }
}

std::string Join(const std::vector<std::string>& items) {
  std::string s;
  for (const auto& i : items) s += (s.empty() ? "" : ", ") + i;
  return s;
}

struct RunArgs {
  std::string scenario = "five_waypoints";
  std::string controller = "secmpc";
  std::uint64_t seed = 1;
  double duration = -1.0;
  double noise = 0.0;
  std::string out;
};

int Run(const RunArgs& a) {
  const secmpc::Scenario sc = secmpc::LoadScenario(a.scenario);
  secmpc::SimOptions opt;
  opt.controller = secmpc::ParseController(a.controller);
  opt.seed = a.seed;
  opt.duration = a.duration;
  opt.noise = a.noise;
  spdlog::info("running {} with {} (seed {}, noise {})", sc.spec.name, a.controller, a.seed, a.noise);
  secmpc::Trace trace = secmpc::Simulate(sc, opt);
  trace.scenario = sc.spec.name;
  for (const auto& r : trace.records) {
    for (const auto& e : r.events) spdlog::debug("t={:.2f} {}", r.clock, e);
  }
  if (!a.out.empty()) {
    secmpc::WriteTraceFile(trace, a.out);
    spdlog::info("wrote {} records to {}", trace.records.size(), a.out);
  }
  std::cout << secmpc::ToJson(trace.summary).dump() << '\n';
  if (!trace.summary.healthy) {
    spdlog::error("unhealthy trace: {} of {} cycles degraded", trace.summary.degraded_cycles, trace.summary.cycles);
    return kExitUnhealthy;
  }
  return kExitOk;
}

int Check() {
  bool ok = true;
  for (const auto& c : secmpc::RunSelfChecks()) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.suite << "  worst " << c.metric << " (tol " << c.tolerance
              << ")  " << c.detail << '\n';
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitFailed;
}

int Export(const std::string& trace_path, const std::vector<std::string>& channels, const std::string& out_dir) {
  const secmpc::Trace trace = secmpc::ReadTraceFile(trace_path);
  for (const auto& ch : channels) {
    if (out_dir.empty()) {
      secmpc::ExportChannel(trace, ch, std::cout);
    } else {
      const std::string path = out_dir + "/" + ch + ".txt";
      std::ofstream f(path);
      if (!f) throw secmpc::SpecError("cannot write '" + path + "'");
      secmpc::ExportChannel(trace, ch, f);
      spdlog::info("wrote {}", path);
    }
  }
  return kExitOk;
}

int Serve(const std::string& scenario, unsigned short port, std::uint64_t seed) {
#ifdef SECMPC_HAVE_BRIDGE
  secmpc::bridge::LiveOptions opt;
  opt.sim.seed = seed;
  opt.sim.duration = 1e9;
  secmpc::bridge::LiveSession session(secmpc::LoadScenario(scenario), opt);
  secmpc::bridge::Server server(session, port);
  spdlog::info("serving {} on ws://0.0.0.0:{} (protocol {})", scenario, server.port(),
               secmpc::bridge::kProtocolVersion);
  std::atomic<bool> stop{false};
  std::thread sim([&] { secmpc::bridge::RunRealtime(session, opt.sim.plant_dt, stop); });
  server.Run();
  stop = true;
  sim.join();
  spdlog::info("stopped");
  return kExitOk;
#else
  (void)scenario;
  (void)port;
  (void)seed;
  spdlog::error("this build has no live bridge");
  return kExitFailed;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  SetupLogging();
  CLI::App app{"Timing-optimal sequence-of-constraints MPC"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario and write its trace");
  run_cmd->add_option("--scenario", run.scenario, "Shipped scenario name or JSON file");
  run_cmd->add_option("--controller", run.controller, "secmpc, sequential_1stage or regulator");
  run_cmd->add_option("--seed", run.seed, "Random seed");
  run_cmd->add_option("--duration", run.duration, "Simulated seconds (default: the scenario's)");
  run_cmd->add_option("--noise", run.noise, "Std of the plant acceleration noise")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--out", run.out, "Trace file (line-delimited JSON)");

  std::string analysis;
  int seeds = 0;
  std::string analysis_out;
  auto* analyze_cmd = app.add_subcommand("analyze", "Run one of the batch analyses");
  analyze_cmd->add_option("--name", analysis, "fig5a, regulator_compare, five_waypoints or push2d")->required();
  analyze_cmd->add_option("--seeds", seeds, "Number of seeds (default per analysis)");
  analyze_cmd->add_option("--out", analysis_out, "Output directory for tables and raw data");

  auto* check_cmd = app.add_subcommand("check", "Run the built-in Jacobian and oracle suites");

  std::string serve_scenario = "push2d";
  unsigned short port = 8765;
  std::uint64_t serve_seed = 1;
  auto* serve_cmd = app.add_subcommand("serve", "Run a live simulation over web sockets");
  serve_cmd->add_option("--port", port, "TCP port (0 picks one)");
  serve_cmd->add_option("--scenario", serve_scenario, "Shipped scenario name or JSON file");
  serve_cmd->add_option("--seed", serve_seed, "Random seed");

  std::string trace_path, export_out;
  std::vector<std::string> channels;
  auto* export_cmd = app.add_subcommand("export", "Write plot columns from a trace");
  export_cmd->add_option("--trace", trace_path, "Trace file")->required();
  export_cmd->add_option("--channel", channels, "Channel(s): " + Join(secmpc::PlotChannels()))->required();
  export_cmd->add_option("--out", export_out, "Directory for <channel>.txt files (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run_cmd) return Run(run);
    if (*analyze_cmd) {
      secmpc::RunAnalysis(analysis, seeds, analysis_out, std::cout);
      return kExitOk;
    }
    if (*check_cmd) return Check();
    if (*serve_cmd) return Serve(serve_scenario, port, serve_seed);
    if (*export_cmd) return Export(trace_path, channels, export_out);
  } catch (const secmpc::SpecError& e) {
    spdlog::error("{}", e.what());
    return kExitScenario;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailed;
  }
  return kExitFailed;
}
