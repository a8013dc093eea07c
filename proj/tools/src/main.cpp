#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "otelbridge/tools/bridge.hpp"
#include "otelbridge/tools/replay.hpp"
#include "otelbridge/tools/scenario.hpp"
#include "otelbridge/tools/tcp_client.hpp"

namespace {

std::atomic<int> g_signal{0};

void on_signal(int signum) { g_signal.store(signum); }

int run_serve(const otelbridge::tools::BridgeConfig& config) {
  otelbridge::tools::TransformerDaemon daemon(config);
  try {
    daemon.start();
  } catch (const std::exception& error) {
    std::cerr << "otel-bridge: startup failed: " << error.what() << "\n";
    return 2;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (g_signal.load() == 0 && !daemon.finished()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  daemon.request_stop();
  return daemon.wait();
}

int run_replay(const std::string& map_path, const std::vector<std::string>& dat_paths,
               const std::string& host, std::uint16_t port, double speedup) {
  try {
    const auto log = otelbridge::tools::read_replay_log(map_path, dat_paths);
    const auto report = otelbridge::tools::replay_log(log, host, port, speedup);
    std::cout << "replayed " << report.sent << " records (" << report.bytes << " bytes) to "
              << host << ":" << port << "\n";
    return 0;
  } catch (const otelbridge::tools::ReplayParseError& error) {
    std::cerr << "otel-bridge: " << error.what() << "\n";
    return 3;
  } catch (const otelbridge::tools::ConnectionError& error) {
    std::cerr << "otel-bridge: " << error.what() << "\n";
    return 4;
  }
}

int run_emit(const otelbridge::tools::ScenarioConfig& scenario, const std::string& host,
             std::uint16_t port, const std::string& write_map, const std::string& write_dat,
             bool no_send) {
  if (!scenario.valid()) {
    std::cerr << "otel-bridge: invalid scenario (counts and depth must be positive)\n";
    return 2;
  }
  if (!write_map.empty()) {
    const auto generated = otelbridge::tools::generate_scenario(scenario);
    std::vector<otelbridge::records::MonitoringRecord> entries(generated.begin(),
                                                               generated.end());
    otelbridge::tools::write_replay_log(entries, write_map, write_dat);
    std::cout << "wrote " << entries.size() << " records to " << write_map << " / " << write_dat
              << "\n";
  }
  if (no_send) return 0;
  try {
    const auto report = otelbridge::tools::emit_synthetic(scenario, host, port);
    std::cout << "emitted " << report.traces << " traces, " << report.records << " records ("
              << report.bytes << " bytes) to " << host << ":" << port << "\n";
    return 0;
  } catch (const otelbridge::tools::ConnectionError& error) {
    std::cerr << "otel-bridge: " << error.what() << "\n";
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"otel-bridge: a Kieker-to-OpenTelemetry trace bridge"};
  app.require_subcommand(1);

  // serve ---------------------------------------------------------------
  otelbridge::tools::BridgeConfig config;
  auto* serve = app.add_subcommand("serve", "Run the transformer daemon");
  serve->add_option("--bind", config.bind_address, "Address to bind")
      ->envname("OTELBRIDGE_BIND")
      ->capture_default_str();
  serve->add_option("--listen-port", config.listen_port, "Record ingest TCP port")
      ->envname("OTELBRIDGE_LISTEN_PORT")
      ->capture_default_str();
  serve->add_option("--stats-port", config.stats_port, "HTTP stats port")
      ->envname("OTELBRIDGE_STATS_PORT")
      ->capture_default_str();
  serve->add_option("--exporter", config.exporter, "Span backend: otlp, zipkin or stdout")
      ->envname("OTELBRIDGE_EXPORTER")
      ->check(CLI::IsMember({"otlp", "zipkin", "stdout"}))
      ->multi_option_policy(CLI::MultiOptionPolicy::Throw)
      ->capture_default_str();
  serve->add_option("--otlp-endpoint", config.otlp_endpoint, "OTLP/HTTP traces endpoint")
      ->envname("OTELBRIDGE_OTLP_ENDPOINT")
      ->capture_default_str();
  serve->add_option("--zipkin-endpoint", config.zipkin_endpoint, "Zipkin v2 spans endpoint")
      ->envname("OTELBRIDGE_ZIPKIN_ENDPOINT")
      ->capture_default_str();
  serve
      ->add_option("--trace-timeout-ms", config.trace_timeout_ms,
                   "Evict traces idle for this long")
      ->envname("OTELBRIDGE_TRACE_TIMEOUT_MS")
      ->capture_default_str();
  serve
      ->add_option("--max-buffered-traces", config.max_buffered_traces,
                   "Capacity of the trace reconstruction buffer")
      ->envname("OTELBRIDGE_MAX_BUFFERED_TRACES")
      ->capture_default_str();
  serve->add_option("--shards", config.shards, "Parallel reconstruction shards")
      ->envname("OTELBRIDGE_SHARDS")
      ->capture_default_str();
  serve->add_option("--log-level", config.log_level, "trace|debug|info|warn|error|off")
      ->envname("OTELBRIDGE_LOG_LEVEL")
      ->capture_default_str();

  // replay --------------------------------------------------------------
  std::string map_path;
  std::vector<std::string> dat_paths;
  std::string replay_host = "localhost";
  std::uint16_t replay_port = 9876;
  double speedup = 1.0;
  auto* replay = app.add_subcommand("replay", "Re-send a recorded log over TCP");
  replay->add_option("--map", map_path, "Type-map file ($id=TypeName lines)")->required();
  replay->add_option("--dat", dat_paths, "Record files ($id;ts;fields... lines)")->required();
  replay->add_option("--host", replay_host, "Target host")->capture_default_str();
  replay->add_option("--port", replay_port, "Target port")->capture_default_str();
  replay
      ->add_option("--speedup", speedup,
                   "Divide inter-record delays by this factor (inf sends back-to-back)")
      ->envname("OTELBRIDGE_SPEEDUP")
      ->capture_default_str();

  // emit ----------------------------------------------------------------
  otelbridge::tools::ScenarioConfig scenario;
  std::string emit_host = "localhost";
  std::uint16_t emit_port = 9876;
  std::string write_map;
  std::string write_dat;
  bool no_send = false;
  auto* emit = app.add_subcommand("emit", "Generate and send a synthetic workload");
  emit->add_option("--host", emit_host, "Target host")->capture_default_str();
  emit->add_option("--port", emit_port, "Target port")->capture_default_str();
  emit->add_option("--traces", scenario.traces, "Number of call trees")->capture_default_str();
  emit->add_option("--depth", scenario.max_depth, "Maximum call depth")->capture_default_str();
  emit->add_option("--max-children", scenario.max_children, "Maximum children per call")
      ->capture_default_str();
  emit->add_option("--services", scenario.services, "Distinct services (up to 5)")
      ->capture_default_str();
  emit->add_option("--seed", scenario.seed, "RNG seed; fixed seed, fixed byte stream")
      ->envname("OTELBRIDGE_SEED")
      ->capture_default_str();
  emit->add_option("--first-trace-id", scenario.first_trace_id, "Trace id of the first tree")
      ->capture_default_str();
  emit->add_option("--write-map", write_map, "Also write a replayable map file here");
  emit->add_option("--write-dat", write_dat, "Also write a replayable dat file here")
      ->needs(emit->get_option("--write-map"));
  emit->add_flag("--no-send", no_send, "Only write files, skip the TCP send");

  CLI11_PARSE(app, argc, argv);

  if (serve->parsed()) return run_serve(config);
  if (replay->parsed()) return run_replay(map_path, dat_paths, replay_host, replay_port, speedup);
  if (!write_map.empty() && write_dat.empty()) {
    std::cerr << "otel-bridge: --write-map requires --write-dat\n";
    return 2;
  }
  return run_emit(scenario, emit_host, emit_port, write_map, write_dat, no_send);
}
