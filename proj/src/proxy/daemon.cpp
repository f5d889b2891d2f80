#include "qsk/proxy/daemon.hpp"

namespace qsk::proxy {

ProxyDaemon::ProxyDaemon(Environment& env, DaemonConfig config)
    : env_(env), config_(std::move(config)), core_(config_.core), stub_(env_, config_.upstream_dns, config_.dns) {
  env_.listen_stream(config_.control_port,
                     [this](StreamId id, const SocketAddress& peer) { return accept(id, peer); });
  arm_reaper();
}

ProxyDaemon::~ProxyDaemon() {
  env_.cancel(reaper_);
  while (!sessions_.empty()) {
    const auto id = sessions_.begin()->first;
    env_.stream_close(id);
    teardown(id);
  }
}

void ProxyDaemon::arm_reaper() {
  reaper_ = env_.schedule(config_.reap_interval_ms, [this] {
    core_.idle_reaper(env_.now_ms());
    arm_reaper();
  });
}

StreamHandlers ProxyDaemon::accept(StreamId id, const SocketAddress& peer) {
  auto session = std::make_unique<Session>(Session{
      id, socks::ServerNegotiator([this, id, peer] { return allocate(id, peer); }), {}, {}, {}});
  sessions_[id] = std::move(session);
  return StreamHandlers{
      [this, id](ByteView data) {
        auto it = sessions_.find(id);
        if (it == sessions_.end()) return;
        auto step = it->second->negotiator.feed(data);
        if (!step.to_send.empty()) env_.stream_send(id, step.to_send);
        if (step.finished && it->second->negotiator.error()) {
          if (config_.log) config_.log("association refused: " + std::string(to_string(*it->second->negotiator.error())));
          env_.stream_close(id);
          teardown(id);
        }
      },
      [this, id] { teardown(id); }};
}

std::optional<SocketAddress> ProxyDaemon::allocate(StreamId id, const SocketAddress& peer) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  auto& s = *it->second;
  const AssocId assoc = core_.open_association(peer.ip);
  try {
    std::uint16_t port = 0;
    if (config_.relay_base_port != 0) {
      const auto p = config_.relay_base_port + next_relay_offset_++;
      if (p > 65535) throw std::runtime_error("relay ports exhausted");
      port = static_cast<std::uint16_t>(p);
    }
    s.relay = env_.open_udp(port, [this, assoc](const SocketAddress& from, ByteView d) {
      execute(core_.on_client_datagram(assoc, from, d, env_.now_ms()));
    });
    s.outbound = env_.open_udp(0, [this, assoc](const SocketAddress& from, ByteView d) {
      execute(core_.on_server_datagram(assoc, from, d, env_.now_ms()));
    });
  } catch (const std::exception& e) {
    if (config_.log) config_.log(std::string("relay allocation failed: ") + e.what());
    if (s.relay) env_.close_udp(*s.relay);
    s.relay.reset();
    core_.close_association(assoc);
    return std::nullopt;
  }
  s.assoc = assoc;
  by_assoc_[assoc] = id;
  return env_.local_address(*s.relay);
}

void ProxyDaemon::teardown(StreamId id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return;
  auto& s = *it->second;
  if (s.relay) env_.close_udp(*s.relay);
  if (s.outbound) env_.close_udp(*s.outbound);
  if (s.assoc) {
    core_.close_association(*s.assoc);
    by_assoc_.erase(*s.assoc);
  }
  sessions_.erase(it);
}

void ProxyDaemon::execute(std::vector<Action> actions) {
  for (auto& action : actions) {
    if (auto* a = std::get_if<SendToServer>(&action)) {
      auto sid = by_assoc_.find(a->assoc);
      if (sid == by_assoc_.end()) continue;
      auto& s = *sessions_.at(sid->second);
      if (a->to.ip == env_.host_ip() && config_.log) config_.log("forwarding to own address " + a->to.to_string());
      env_.send_udp(*s.outbound, a->to, a->datagram);
    } else if (auto* a = std::get_if<SendToClient>(&action)) {
      auto sid = by_assoc_.find(a->assoc);
      if (sid == by_assoc_.end()) continue;
      env_.send_udp(*sessions_.at(sid->second)->relay, a->to, a->datagram);
    } else if (auto* a = std::get_if<StartResolve>(&action)) {
      const auto family = env_.host_ip().is_v4() ? dns::RecordType::A : dns::RecordType::AAAA;
      const RelayKey key = a->key;
      stub_.resolve(a->name, family, [this, key](const dns::ResolveResult& r) {
        Resolution res;
        switch (r.status) {
          case dns::ResolveStatus::Ok: res.outcome = ResolveOutcome::Ok; break;
          case dns::ResolveStatus::NxDomain: res.outcome = ResolveOutcome::NxDomain; break;
          case dns::ResolveStatus::Timeout: res.outcome = ResolveOutcome::Timeout; break;
          default: res.outcome = ResolveOutcome::Failed; break;
        }
        if (!r.addresses.empty()) res.address = r.addresses.front();
        execute(core_.on_resolution(key, res, env_.now_ms()));
      });
    } else if (auto* a = std::get_if<ReportFailure>(&action)) {
      auto sid = by_assoc_.find(a->assoc);
      if (sid == by_assoc_.end()) continue;
      env_.stream_send(sid->second, to_bytes(a->record));
      if (config_.log) config_.log(a->record.substr(0, a->record.size() - 1));
    }
  }
}

}  // namespace qsk::proxy
