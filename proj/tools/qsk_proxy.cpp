#include <fstream>
#include <iostream>

#include "cli_util.hpp"
#include "qsk/proxy/daemon.hpp"
#include "qsk/runtime/posix_env.hpp"

using namespace qsk;

int main(int argc, char** argv) {
  CLI::App app{"SOCKS UDP relay with proxy-side resolution and retry handling"};
  std::string control = "0.0.0.0:1080";
  std::string relay;
  std::string upstream;
  std::string notify = "early";
  double idle_timeout_s = 30;
  std::size_t max_relays = 4096;
  std::string metrics_file;
  bool verbose = false;
  app.add_option("--listen-control", control, "SOCKS control listener addr:port");
  app.add_option("--listen-relay", relay, "addr:port; associations take consecutive ports from here");
  app.add_option("--upstream-dns", upstream, "resolver addr:port")->required();
  app.add_option("--notify", notify, "when the client learns the server address")
      ->check(CLI::IsMember({"early", "on-first-response"}));
  app.add_option("--idle-timeout-s", idle_timeout_s, "drain relays idle this long")->check(CLI::PositiveNumber);
  app.add_option("--max-relays", max_relays, "relay table capacity")->check(CLI::PositiveNumber);
  app.add_option("--metrics-file", metrics_file, "rewritten with the counters every second");
  app.add_flag("-v,--verbose", verbose, "log relay events");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto control_addr = tools::endpoint_arg(control, "--listen-control");
    runtime::PosixEnv env(control_addr.ip);
    proxy::DaemonConfig dc;
    dc.control_port = control_addr.port;
    if (!relay.empty()) {
      const auto relay_addr = tools::endpoint_arg(relay, "--listen-relay");
      if (relay_addr.ip != control_addr.ip)
        throw std::invalid_argument("--listen-relay must use the --listen-control address");
      dc.relay_base_port = relay_addr.port;
    }
    dc.upstream_dns = tools::endpoint_arg(upstream, "--upstream-dns");
    dc.core.notify = notify == "early" ? proxy::NotifyMode::Early : proxy::NotifyMode::OnFirstResponse;
    dc.core.idle_timeout_ms = idle_timeout_s * 1000;
    dc.core.max_relays = max_relays;
    if (verbose) dc.log = [](const std::string& line) { std::cerr << line << '\n'; };
    proxy::ProxyDaemon daemon(env, dc);
    std::cerr << "control on " << control_addr.ip.to_string() << ':' << env.last_listen_port() << '\n';

    auto write_metrics = [&] {
      if (metrics_file.empty()) return;
      std::ofstream(metrics_file) << daemon.core().metrics().snapshot().to_json() << '\n';
    };
    tools::install_signals();
    double next_write = env.now_ms();
    while (!tools::g_stop) {
      env.run_once(200);
      if (tools::g_dump) {
        tools::g_dump = 0;
        std::cout << daemon.core().metrics().snapshot().to_json() << std::endl;
        write_metrics();
      }
      if (env.now_ms() >= next_write) {
        write_metrics();
        next_write = env.now_ms() + 1000;
      }
    }
    write_metrics();
    std::cout << daemon.core().metrics().snapshot().to_json() << std::endl;
  } catch (const std::exception& e) {
    std::cerr << "qsk-proxy: " << e.what() << '\n';
    return 1;
  }
}
