#include <iostream>

#include "cli_util.hpp"
#include "qsk/endpoint/scenario.hpp"

using namespace qsk;

int main(int argc, char** argv) {
  CLI::App app{"one connection through the simulated reference network"};
  endpoint::ScenarioOptions o;
  std::string mode_name = "default";
  std::string notify = "early";
  std::string topology;
  std::string trace;
  app.add_option("--mode", mode_name, "default|cold|warm")->check(CLI::IsMember({"default", "cold", "warm"}));
  app.add_flag("--retry", o.server_retry, "server sends RETRY");
  app.add_flag("--migrate", o.migrate, "move to the direct path");
  app.add_flag("--probe-early", o.probe_early, "probe before forward-secure keys");
  app.add_option("--notify", notify, "proxy notification")->check(CLI::IsMember({"early", "on-first-response"}));
  app.add_option("--seed", o.seed, "simulation seed");
  app.add_option("--app-messages", o.app_messages, "echo round trips after connecting");
  app.add_option("--topology", topology, "topology file, reference network by default")->check(CLI::ExistingFile);
  app.add_option("--trace", trace, "write the datagram trace as JSON lines");
  CLI11_PARSE(app, argc, argv);

  try {
    o.mode = *endpoint::parse_mode(mode_name);
    o.notify = notify == "early" ? proxy::NotifyMode::Early : proxy::NotifyMode::OnFirstResponse;
    if (!topology.empty()) o.topology = netsim::TopologySpec::load(topology);
    const auto r = endpoint::run_scenario(o);
    if (!trace.empty()) tools::Output(trace).stream() << r.trace.to_jsonl();
    std::cout << r.record.to_json() << '\n';
    return r.record.ok ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "qsk-sim: " << e.what() << '\n';
    return 1;
  }
}
