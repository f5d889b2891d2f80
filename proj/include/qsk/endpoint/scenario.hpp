#pragma once

// End-to-end runs on the simulated network: client, proxy, recursive
// resolver, authority and origin server wired up on fixed host names
// (client, proxy, dns, server).

#include <optional>
#include <string>

#include "qsk/endpoint/client.hpp"
#include "qsk/netsim/network.hpp"
#include "qsk/proxy/core.hpp"
#include "qsk/quic/server.hpp"

namespace qsk::endpoint {

inline constexpr std::uint16_t kServerPort = 4433;
inline constexpr std::uint16_t kControlPort = 1080;
inline constexpr std::uint16_t kResolverPort = 53;
inline constexpr std::uint16_t kAuthorityPort = 5353;

// client-proxy 15/15, proxy-server 15/15, client-server 30/30,
// client-dns 15/15, proxy-dns 0/0: RTT_DNS 30, RTT_Server 30, RTT_direct 60.
netsim::TopologySpec reference_topology();

// Trace tag: packet type and frames, wrapped as socks(...) when encapsulated,
// "dns" for DNS messages, "udp" otherwise.
std::string classify_datagram(ByteView payload);

struct ScenarioOptions {
  Mode mode = Mode::Default;
  bool server_retry = false;
  bool migrate = false;
  bool probe_early = false;
  proxy::NotifyMode notify = proxy::NotifyMode::Early;
  std::uint64_t seed = 1;
  std::string target = "www.example.test";
  std::optional<netsim::TopologySpec> topology;  // reference_topology() when empty
  int app_messages = 0;     // sent once the session finishes, 10 ms apart
  double settle_ms = 1000;  // simulated time allowed after the last message
  double deadline_ms = 20'000;
};

// One datagram handled by the origin server.
struct ServerStep {
  double time_ms;
  std::string tag;
  bool had_token;
  std::size_t state_before;
  std::size_t state_after;
};

struct ScenarioResult {
  TimingRecord record;
  bool finished = false;
  double session_start_ms = 0;
  netsim::Trace trace;
  SocketAddress client_direct;
  std::optional<SocketAddress> client_proxied;
  SocketAddress server;
  IpAddress proxy_ip;
  quic::ServerStats server_stats;
  std::vector<ServerStep> server_steps;
  proxy::MetricsSnapshot proxy_metrics;
  std::size_t resolver_queries_at_authority = 0;
  bool keys_match = false;  // client and server forward-secure keys equal
  std::optional<quic::Key> client_key;
  std::vector<double> rtt_samples;  // client estimator after the run
  std::size_t echoes_received = 0;
  quic::ConnectionId original_dcid;
  Bytes first_client_hello;  // CLIENTHELLO frame value of the first INITIAL
};

ScenarioResult run_scenario(const ScenarioOptions& options);

}  // namespace qsk::endpoint
