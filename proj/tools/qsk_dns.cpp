#include <iostream>
#include <memory>

#include "cli_util.hpp"
#include "qsk/dns/authority.hpp"
#include "qsk/dns/resolver.hpp"
#include "qsk/runtime/posix_env.hpp"

using namespace qsk;

int main(int argc, char** argv) {
  CLI::App app{"authoritative responder or caching forwarder"};
  std::string listen = "127.0.0.1:5353";
  std::string zone;
  std::string forward;
  bool no_cache = false;
  bool log = false;
  app.add_option("--listen", listen, "addr:port");
  auto* zone_opt = app.add_option("--zone", zone, "zone file to serve")->check(CLI::ExistingFile);
  auto* fwd_opt = app.add_option("--forward", forward, "act as a resolver asking this authority addr:port");
  zone_opt->excludes(fwd_opt);
  app.add_flag("--no-cache", no_cache, "forwarder answers every query upstream");
  app.add_flag("--log", log, "authority writes one JSON line per query to stderr");
  CLI11_PARSE(app, argc, argv);
  if (zone.empty() == forward.empty()) {
    std::cerr << "qsk-dns: give exactly one of --zone or --forward\n";
    return 1;
  }

  try {
    const auto addr = tools::endpoint_arg(listen, "--listen");
    runtime::PosixEnv env(addr.ip);
    std::unique_ptr<dns::AuthoritativeResponder> authority;
    std::unique_ptr<dns::ForwardingResolver> resolver;
    if (!zone.empty()) {
      auto z = dns::Zone::load(zone);
      std::cerr << "serving " << z.size() << " records";
      authority = std::make_unique<dns::AuthoritativeResponder>(env, addr.port, std::move(z), log ? &std::cerr : nullptr);
      std::cerr << " on " << authority->address().to_string() << '\n';
    } else {
      resolver = std::make_unique<dns::ForwardingResolver>(env, addr.port, tools::endpoint_arg(forward, "--forward"),
                                                           !no_cache);
      std::cerr << "forwarding on " << resolver->address().to_string() << '\n';
    }
    tools::install_signals();
    while (!tools::g_stop) env.run_once(200);
  } catch (const std::exception& e) {
    std::cerr << "qsk-dns: " << e.what() << '\n';
    return 1;
  }
}
