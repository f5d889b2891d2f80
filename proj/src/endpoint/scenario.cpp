#include "qsk/endpoint/scenario.hpp"

#include <memory>

#include "qsk/dns/authority.hpp"
#include "qsk/dns/resolver.hpp"
#include "qsk/proxy/daemon.hpp"
#include "qsk/socks/codec.hpp"

namespace qsk::endpoint {

netsim::TopologySpec reference_topology() {
  return netsim::TopologySpec::parse(R"(
host client 10.0.0.2
host proxy  10.0.0.3
host dns    10.0.0.4
host server 10.0.0.5
link client proxy  15 15
link proxy  server 15 15
link client server 30 30
link client dns    15 15
link proxy  dns    0  0
)");
}

namespace {

std::string describe_packet(ByteView bytes) {
  try {
    auto p = quic::decode_packet(bytes);
    std::string s(quic::to_string(p.type));
    if (p.type == quic::PacketType::Initial && !p.token.empty()) s += "+token";
    s += '[';
    for (std::size_t i = 0; i < p.frames.size(); ++i) {
      if (i) s += ',';
      s += quic::to_string(p.frames[i].type);
    }
    return s + ']';
  } catch (const DecodeError&) {
    return {};
  }
}

}  // namespace

std::string classify_datagram(ByteView payload) {
  if (auto q = describe_packet(payload); !q.empty()) return q;
  try {
    auto d = socks::decode_udp_header(payload);
    if (d.payload.empty()) return "socks(notify)";
    auto inner = describe_packet(d.payload);
    return "socks(" + (inner.empty() ? std::string("udp") : inner) + ")";
  } catch (const DecodeError&) {
  }
  try {
    dns::decode(payload);
    return "dns";
  } catch (const DecodeError&) {
  } catch (const EncodeError&) {
  }
  return "udp";
}

ScenarioResult run_scenario(const ScenarioOptions& o) {
  const auto spec = o.topology ? *o.topology : reference_topology();
  netsim::Network net(spec);
  net.set_classifier(classify_datagram);
  auto& client_host = net.host("client");
  auto& proxy_host = net.host("proxy");
  auto& dns_host = net.host("dns");
  auto& server_host = net.host("server");

  ScenarioResult result;
  result.proxy_ip = proxy_host.host_ip();

  dns::Zone zone;
  zone.add({o.target, dns::RecordType::A, 60, server_host.host_ip()});
  dns::AuthoritativeResponder authority(dns_host, kAuthorityPort, zone);
  dns::ForwardingResolver resolver(dns_host, kResolverPort, {dns_host.host_ip(), kAuthorityPort}, true,
                                   o.seed * 7 + 3);

  quic::ServerConfig server_config{quic::ServerSecret::generate(quic::seeded_random(o.seed * 7 + 1)),
                                   quic::ServerPolicy{o.server_retry}, quic::seeded_random(o.seed * 7 + 2), true};
  quic::ServerEndpoint server(std::move(server_config));
  SocketId server_socket = 0;
  server_socket = server_host.open_udp(kServerPort, [&](const SocketAddress& from, ByteView d) {
    ServerStep step{net.now_ms(), classify_datagram(d), false, server.state_store_size(), 0};
    try {
      step.had_token = !quic::peek_header(d).token.empty();
    } catch (const DecodeError&) {
    }
    auto out = server.on_datagram(from, d, net.now_ms());
    step.state_after = server.state_store_size();
    result.server_steps.push_back(step);
    for (auto& t : out) server_host.send_udp(server_socket, t.to, t.datagram);
  });
  result.server = {server_host.host_ip(), kServerPort};

  std::unique_ptr<proxy::ProxyDaemon> daemon;
  if (o.mode != Mode::Default) {
    proxy::DaemonConfig dc;
    dc.control_port = kControlPort;
    dc.upstream_dns = {dns_host.host_ip(), kResolverPort};
    dc.core.notify = o.notify;
    dc.dns.seed = o.seed * 7 + 4;
    dc.dns.use_cache = false;
    daemon = std::make_unique<proxy::ProxyDaemon>(proxy_host, dc);
  }

  ConnectConfig cc;
  cc.target_name = o.target;
  cc.target_port = kServerPort;
  cc.mode = o.mode;
  cc.migrate = o.migrate;
  cc.probe_early = o.probe_early;
  cc.resolver = {dns_host.host_ip(), kResolverPort};
  cc.dns.seed = o.seed * 7 + 5;
  cc.random = quic::seeded_random(o.seed * 7 + 6);
  if (o.mode != Mode::Default) cc.proxy = SocketAddress{proxy_host.host_ip(), kControlPort};

  std::unique_ptr<ProxyAssociation> warm;
  if (o.mode == Mode::Warm) {
    warm = std::make_unique<ProxyAssociation>(client_host, *cc.proxy);
    bool settled = false;
    warm->open([&settled](bool) { settled = true; });
    net.run_until([&] { return settled; }, o.deadline_ms);
  }

  auto session = std::make_unique<ClientSession>(client_host, cc, warm.get());
  result.session_start_ms = net.now_ms();
  session->start();
  net.run_until([&] { return session->finished(); }, result.session_start_ms + o.deadline_ms);
  result.finished = session->finished();
  result.record = session->record();

  if (result.finished && result.record.ok) {
    for (int i = 0; i < o.app_messages; ++i) {
      const double at = net.now_ms() + 10.0 * i;
      net.schedule_at(at, [&session, i] {
        auto msg = to_bytes("echo-" + std::to_string(i));
        session->send_app_data(msg);
      });
    }
  }
  const double settle_until = net.now_ms() + 10.0 * o.app_messages + o.settle_ms;
  net.run_until(
      [&] {
        result.echoes_received += session->take_app_data().size();
        return false;
      },
      settle_until);
  result.echoes_received += session->take_app_data().size();

  if (auto d = session->direct_socket_address()) result.client_direct = *d;
  result.client_proxied = session->proxied_socket_address();
  if (const auto* conn = session->connection()) {
    const auto& hs = conn->handshake();
    result.original_dcid = hs.original_dcid;
    result.client_key = hs.forward_secure_key;
    for (double s : conn->rtt().samples()) result.rtt_samples.push_back(s);
    if (const auto* sc = server.find(hs.original_dcid)) {
      result.keys_match = hs.forward_secure_key && sc->handshake->forward_secure_key &&
                          *hs.forward_secure_key == *sc->handshake->forward_secure_key;
    }
  }
  result.server_stats = server.stats();
  if (daemon) result.proxy_metrics = daemon->core().metrics().snapshot();
  result.resolver_queries_at_authority = authority.queries().size();

  for (const auto& e : net.trace().events()) {
    if (e.kind != netsim::TraceKind::Send || e.stream) continue;
    Bytes inner = e.payload;
    try {
      auto d = socks::decode_udp_header(e.payload);
      inner.assign(d.payload.begin(), d.payload.end());
    } catch (const DecodeError&) {
    }
    try {
      auto p = quic::decode_packet(inner);
      if (p.type != quic::PacketType::Initial) continue;
      if (auto* ch = p.find(quic::FrameType::ClientHello)) {
        result.first_client_hello = ch->value;
        break;
      }
    } catch (const DecodeError&) {
    }
  }

  session.reset();
  daemon.reset();
  warm.reset();
  server_host.close_udp(server_socket);
  result.trace = net.trace();
  return result;
}

}  // namespace qsk::endpoint
