#include <iostream>

#include "cli_util.hpp"
#include "qsk/endpoint/server.hpp"
#include "qsk/runtime/posix_env.hpp"

using namespace qsk;

int main(int argc, char** argv) {
  CLI::App app{"miniquic echo server"};
  std::string listen = "127.0.0.1:4433";
  std::string retry = "off";
  bool verbose = false;
  app.add_option("--listen", listen, "addr:port");
  app.add_option("--retry", retry, "answer fresh INITIALs with RETRY")->check(CLI::IsMember({"on", "off"}));
  app.add_flag("-v,--verbose", verbose, "log connection events");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto addr = tools::endpoint_arg(listen, "--listen");
    runtime::PosixEnv env(addr.ip);
    endpoint::DemoServer server(env, addr.port,
                                {quic::ServerSecret::generate(), {retry == "on"}, quic::system_random(), true});
    if (verbose) {
      server.on_event([](const quic::ServerEvent& e) {
        const char* what = e.type == quic::ServerEvent::Type::HandshakeComplete ? "handshake" : "migrated";
        std::cerr << what << ' ' << e.old_peer.to_string() << " -> " << e.new_peer.to_string() << '\n';
      });
    }
    std::cerr << "listening on " << server.address().to_string() << " retry " << retry << '\n';
    tools::install_signals();
    while (!tools::g_stop) env.run_once(200);
    const auto& s = server.endpoint().stats();
    std::cout << "{\"handshakes_completed\":" << s.handshakes_completed << ",\"retries_sent\":" << s.retries_sent
              << ",\"dropped_malformed\":" << s.dropped_malformed << ",\"dropped_unknown\":" << s.dropped_unknown
              << ",\"dropped_budget\":" << s.dropped_budget << "}\n";
  } catch (const std::exception& e) {
    std::cerr << "qsk-server: " << e.what() << '\n';
    return 1;
  }
}
