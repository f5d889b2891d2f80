#include <iostream>

#include "cli_util.hpp"
#include "qsk/endpoint/timing.hpp"
#include "qsk/runtime/posix_env.hpp"

using namespace qsk;

int main(int argc, char** argv) {
  CLI::App app{"timed miniquic connections, direct or through the proxy"};
  std::string target;
  std::string proxy_addr;
  std::string resolver = "127.0.0.1:53";
  std::string bind = "0.0.0.0";
  std::string mode_name = "default";
  int reps = 1;
  bool migrate = false;
  bool probe_early = false;
  double timeout_s = 10;
  std::string out;
  app.add_option("--target", target, "name:port")->required();
  app.add_option("--proxy", proxy_addr, "proxy control addr:port");
  app.add_option("--resolver", resolver, "resolver addr:port for default mode");
  app.add_option("--bind", bind, "local address for client sockets");
  app.add_option("--mode", mode_name, "default|cold|warm")->check(CLI::IsMember({"default", "cold", "warm"}));
  app.add_option("--reps", reps, "repetitions")->check(CLI::PositiveNumber);
  app.add_flag("--migrate", migrate, "move to the direct path after the handshake");
  app.add_flag("--probe-early", probe_early, "probe the direct path as soon as the server address is known");
  app.add_option("--handshake-timeout-s", timeout_s, "per attempt")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "JSON lines, stdout by default");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto bind_ip = IpAddress::parse(bind);
    if (!bind_ip) throw CLI::ValidationError("--bind", "bad address");
    endpoint::ConnectConfig cc;
    std::tie(cc.target_name, cc.target_port) = tools::name_port_arg(target, "--target");
    cc.mode = *endpoint::parse_mode(mode_name);
    if (!proxy_addr.empty()) cc.proxy = tools::endpoint_arg(proxy_addr, "--proxy");
    cc.resolver = tools::endpoint_arg(resolver, "--resolver");
    cc.migrate = migrate;
    cc.probe_early = probe_early;
    cc.quic.handshake_timeout_ms = timeout_s * 1000;
    cc.validate();

    tools::Output sink(out);
    runtime::PosixEnv env(*bind_ip);
    endpoint::Driver drive = [&](const std::function<bool()>& pred, double timeout_ms) {
      return env.run_until(pred, timeout_ms);
    };
    auto result = endpoint::run_timing_suite(env, drive, cc, reps, [&](const endpoint::TimingRecord& r) {
      sink.stream() << r.to_json() << '\n';
    });
    sink.stream() << result.summary.to_json() << std::endl;
    return result.summary.failures == result.summary.runs ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "qsk-client: " << e.what() << '\n';
    return 1;
  }
}
