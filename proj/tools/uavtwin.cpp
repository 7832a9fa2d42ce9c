#include <csignal>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uavtwin/control_service.hpp"
#include "uavtwin/engine.hpp"
#include "uavtwin/scenario.hpp"

using namespace uavtwin;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitUsage = 2;

/// `paper_replica` names the built-in scenario; anything else is a file path.
Scenario load(const std::string& ref) {
  if (ref == "paper_replica") return paper_replica();
  return load_scenario_file(ref);
}

bool report_violations(const Scenario& sc, const std::string& ref) {
  const auto v = validate(sc);
  for (const auto& msg : v) std::cerr << ref << ": " << msg << '\n';
  return v.empty();
}

std::vector<TimedCommand> load_trace(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw Error("cannot read command trace '" + path + "'");
  return read_command_trace(in);
}

int cmd_validate(const std::string& ref) {
  const auto sc = load(ref);
  return report_violations(sc, ref) ? kExitOk : kExitInvalid;
}

int cmd_run(const std::string& ref, const std::string& trace_path, const std::string& out_path,
            std::optional<double> duration) {
  const auto sc = load(ref);
  if (!report_violations(sc, ref)) return kExitInvalid;
  const auto trace = load_trace(trace_path);
  const double dur = duration ? *duration : sc.duration_s.value_or(0.0);
  if (!(dur > 0.0)) {
    std::cerr << "run: no duration (scenario has none and --duration not given)\n";
    return kExitUsage;
  }
  std::ofstream file;
  if (out_path != "-") {
    file.open(out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot write '" + out_path + "'");
  }
  TelemetryWriter w(out_path == "-" ? std::cout : file);
  const auto ticks = run_scripted(sc, trace, dur, [&w](const TelemetrySample& s) { w.write(s); });
  std::cerr << "run: " << ticks << " ticks, " << w.bytes_written() << " bytes\n";
  return kExitOk;
}

int cmd_sweep(const std::string& ref, const std::vector<double>& distances, const std::vector<double>& heights,
              const std::string& out_path) {
  const auto sc = load(ref);
  if (!report_violations(sc, ref)) return kExitInvalid;
  const auto grid = sweep(sc, distances, heights);
  if (out_path == "-") {
    write_sweep(grid, std::cout);
    return kExitOk;
  }
  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot write '" + out_path + "'");
  write_sweep(grid, file);
  return kExitOk;
}

int cmd_serve(const std::string& ref, const std::string& bind, unsigned short port, const std::string& pace) {
  const auto sc = load(ref);
  if (!report_violations(sc, ref)) return kExitInvalid;

  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  ControlService svc(sc, {bind, port, pace == "max" ? Pacing::Max : Pacing::Real});
  svc.start();
  std::cerr << "serving on " << bind << ':' << svc.port() << " (pace " << pace << ")\n";
  int sig = 0;
  sigwait(&sigs, &sig);
  svc.stop();
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV-to-cell link digital twin"};
  app.require_subcommand(1);

  std::string scenario;
  auto* validate_cmd = app.add_subcommand("validate", "check a scenario and list every violation");
  validate_cmd->add_option("scenario", scenario, "scenario file or 'paper_replica'")->required();

  std::string commands, out = "-";
  std::optional<double> duration;
  auto* run_cmd = app.add_subcommand("run", "scripted flight, telemetry CSV out");
  run_cmd->add_option("scenario", scenario, "scenario file or 'paper_replica'")->required();
  run_cmd->add_option("--commands", commands, "command trace CSV (t_s,node_id,vx,vy,vz)");
  run_cmd->add_option("--out", out, "telemetry CSV path, '-' for stdout");
  run_cmd->add_option("--duration", duration, "seconds; overrides the scenario")->check(CLI::PositiveNumber);

  std::vector<double> distances{50, 100, 200, 400, 600, 800, 1000, 1200};
  std::vector<double> heights{10, 30, 50, 100};
  auto* sweep_cmd = app.add_subcommand("sweep", "DL/UL throughput over a distance x height grid");
  sweep_cmd->add_option("scenario", scenario, "scenario file or 'paper_replica'")->required();
  sweep_cmd->add_option("--distances", distances, "horizontal distances, m")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--heights", heights, "heights, m")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--out", out, "sweep CSV path, '-' for stdout");

  std::string bind = "127.0.0.1", pace = "real";
  unsigned short port = kDefaultPort;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP control + WebSocket telemetry");
  serve_cmd->add_option("scenario", scenario, "scenario file or 'paper_replica'")->required();
  serve_cmd->add_option("--port", port, "listen port")->capture_default_str();
  serve_cmd->add_option("--bind", bind, "listen address")->capture_default_str();
  serve_cmd->add_option("--pace", pace, "real | max")->check(CLI::IsMember({"real", "max"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(scenario);
    if (*run_cmd) return cmd_run(scenario, commands, out, duration);
    if (*sweep_cmd) return cmd_sweep(scenario, distances, heights, out);
    if (*serve_cmd) return cmd_serve(scenario, bind, port, pace);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitUsage;
}
