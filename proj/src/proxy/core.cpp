#include "qsk/proxy/core.hpp"

#include <nlohmann/json.hpp>

#include "qsk/socks/codec.hpp"

namespace qsk::proxy {

std::string_view to_string(RelayState s) {
  switch (s) {
    case RelayState::Resolving: return "resolving";
    case RelayState::Forwarded: return "forwarded";
    case RelayState::RetryReplayed: return "retry-replayed";
    case RelayState::Relaying: return "relaying";
    case RelayState::Drained: return "drained";
  }
  return "?";
}

std::string MetricsSnapshot::to_json() const {
  return nlohmann::json{{"relays_created", relays_created},
                        {"dns_timeouts", dns_timeouts},
                        {"retries_replayed", retries_replayed},
                        {"dropped_auth", dropped_auth},
                        {"dropped_malformed", dropped_malformed},
                        {"dropped_table_full", dropped_table_full},
                        {"dropped_unmatched", dropped_unmatched},
                        {"relays_reaped", relays_reaped}}
      .dump();
}

MetricsSnapshot Metrics::snapshot() const {
  return {relays_created.load(),     dns_timeouts.load(),       retries_replayed.load(), dropped_auth.load(),
          dropped_malformed.load(),  dropped_table_full.load(), dropped_unmatched.load(), relays_reaped.load()};
}

ProxyCore::ProxyCore(ProxyConfig config) : config_(config) {}

AssocId ProxyCore::open_association(const IpAddress& client_ip) {
  std::unique_lock lock(mu_);
  const AssocId id = next_assoc_++;
  assocs_[id] = Association{client_ip, {}};
  return id;
}

std::size_t ProxyCore::close_association(AssocId id) {
  std::unique_lock lock(mu_);
  auto it = assocs_.find(id);
  if (it == assocs_.end()) return 0;
  const auto n = it->second.relays.size();
  relay_total_ -= n;
  assocs_.erase(it);
  return n;
}

std::shared_ptr<ProxyCore::Relay> ProxyCore::find(const RelayKey& key) const {
  std::shared_lock lock(mu_);
  auto a = assocs_.find(key.assoc);
  if (a == assocs_.end()) return nullptr;
  auto r = a->second.relays.find(key.dcid);
  return r == a->second.relays.end() ? nullptr : r->second;
}

std::vector<Action> ProxyCore::on_client_datagram(AssocId assoc, const SocketAddress& from, ByteView datagram,
                                                  double now_ms) {
  std::vector<Action> out;
  {
    std::shared_lock lock(mu_);
    auto a = assocs_.find(assoc);
    if (a == assocs_.end() || a->second.client_ip != from.ip) {
      ++metrics_.dropped_auth;
      return out;
    }
  }

  socks::DecodedDatagram d;
  try {
    d = socks::decode_udp_header(datagram);
  } catch (const DecodeError&) {
    ++metrics_.dropped_malformed;
    return out;
  }
  const Bytes payload(d.payload.begin(), d.payload.end());

  if (d.header.dst.kind() != socks::AddressType::Domain) {
    const auto dst = d.header.dst.socket_address();
    std::vector<std::shared_ptr<Relay>> touched;
    {
      std::shared_lock lock(mu_);
      auto a = assocs_.find(assoc);
      if (a != assocs_.end())
        for (auto& [cid, r] : a->second.relays) touched.push_back(r);
    }
    for (auto& r : touched) {
      std::lock_guard g(r->mu);
      if (r->resolved == dst) {
        r->last_activity_ms = now_ms;
        r->client = from;
      }
    }
    out.push_back(SendToServer{assoc, dst, payload});
    return out;
  }

  quic::PacketHeader h;
  try {
    h = quic::peek_header(payload);
  } catch (const DecodeError&) {
    ++metrics_.dropped_malformed;
    return out;
  }
  const std::string name(d.header.dst.domain());
  const auto port = d.header.dst.port();

  if (h.type != quic::PacketType::Initial) {
    // Domain-addressed traffic past the first flight goes wherever that name
    // already resolved to for this association.
    std::vector<std::shared_ptr<Relay>> candidates;
    {
      std::shared_lock lock(mu_);
      auto a = assocs_.find(assoc);
      if (a != assocs_.end())
        for (auto& [cid, r] : a->second.relays) candidates.push_back(r);
    }
    for (auto& r : candidates) {
      std::lock_guard g(r->mu);
      if (r->server_name == name && r->server_port == port && r->resolved && r->state != RelayState::Drained) {
        r->last_activity_ms = now_ms;
        r->client = from;
        out.push_back(SendToServer{assoc, *r->resolved, payload});
        return out;
      }
    }
    ++metrics_.dropped_unmatched;
    return out;
  }

  const RelayKey key{assoc, h.dcid};
  if (auto r = find(key)) {
    std::lock_guard g(r->mu);
    r->client = from;
    switch (r->state) {
      case RelayState::Resolving:
        r->cached_initial = payload;
        r->last_activity_ms = now_ms;
        break;
      case RelayState::Forwarded:
      case RelayState::RetryReplayed:
      case RelayState::Relaying:
        r->cached_initial = payload;
        r->last_activity_ms = now_ms;
        out.push_back(SendToServer{assoc, *r->resolved,
                                   r->token.empty() ? payload : quic::with_token(payload, r->token)});
        break;
      case RelayState::Drained:
        ++metrics_.dropped_unmatched;
        break;
    }
    return out;
  }

  {
    std::unique_lock lock(mu_);
    auto a = assocs_.find(assoc);
    if (a == assocs_.end()) {
      ++metrics_.dropped_auth;
      return out;
    }
    if (a->second.relays.count(h.dcid)) {
      // Lost a race with a concurrent insert of the same key; treat as a retransmit.
      lock.unlock();
      return on_client_datagram(assoc, from, datagram, now_ms);
    }
    if (relay_total_ >= config_.max_relays) {
      ++metrics_.dropped_table_full;
      return out;
    }
    auto r = std::make_shared<Relay>();
    r->server_name = name;
    r->server_port = port;
    r->client_scid = h.scid;
    r->cached_initial = payload;
    r->client = from;
    r->last_activity_ms = now_ms;
    a->second.relays.emplace(h.dcid, std::move(r));
    ++relay_total_;
  }
  ++metrics_.relays_created;
  out.push_back(StartResolve{key, name});
  return out;
}

std::vector<Action> ProxyCore::on_resolution(const RelayKey& key, const Resolution& result, double now_ms) {
  std::vector<Action> out;
  auto r = find(key);
  if (!r) return out;
  std::lock_guard g(r->mu);
  if (r->state != RelayState::Resolving) return out;
  r->last_activity_ms = now_ms;
  if (result.outcome == ResolveOutcome::Ok && result.address) {
    const SocketAddress server{*result.address, r->server_port};
    r->resolved = server;
    r->state = RelayState::Forwarded;
    out.push_back(SendToServer{key.assoc, server, r->cached_initial});
    if (config_.notify == NotifyMode::Early) {
      out.push_back(SendToClient{key.assoc, r->client, socks::encapsulate(socks::SocksAddress::from_socket(server), {})});
    }
    return out;
  }
  r->state = RelayState::Drained;
  std::string reason = "resolution-failed";
  if (result.outcome == ResolveOutcome::Timeout) {
    ++metrics_.dns_timeouts;
    reason = "resolution-timeout";
  } else if (result.outcome == ResolveOutcome::NxDomain) {
    reason = "nxdomain";
  }
  out.push_back(ReportFailure{key.assoc, "QSK-ERR " + key.dcid.to_hex() + " " + reason + "\n"});
  return out;
}

std::vector<Action> ProxyCore::on_server_datagram(AssocId assoc, const SocketAddress& from, ByteView datagram,
                                                  double now_ms) {
  std::vector<Action> out;
  quic::PacketHeader h;
  try {
    h = quic::peek_header(datagram);
  } catch (const DecodeError&) {
    ++metrics_.dropped_malformed;
    return out;
  }

  std::shared_ptr<Relay> relay;
  {
    std::shared_lock lock(mu_);
    auto a = assocs_.find(assoc);
    if (a != assocs_.end()) {
      for (auto& [cid, r] : a->second.relays) {
        std::lock_guard g(r->mu);
        if (r->resolved == from && r->client_scid == h.dcid && r->state != RelayState::Drained) {
          relay = r;
          break;
        }
      }
    }
  }
  if (!relay) {
    ++metrics_.dropped_unmatched;
    return out;
  }

  std::lock_guard g(relay->mu);
  relay->last_activity_ms = now_ms;
  if (h.type == quic::PacketType::Retry) {
    if (relay->state != RelayState::Forwarded) {
      ++metrics_.dropped_malformed;
      return out;
    }
    relay->token = h.token;
    relay->state = RelayState::RetryReplayed;
    ++metrics_.retries_replayed;
    out.push_back(SendToServer{assoc, from, quic::with_token(relay->cached_initial, relay->token)});
    return out;
  }
  relay->state = RelayState::Relaying;
  out.push_back(SendToClient{assoc, relay->client, socks::encapsulate(socks::SocksAddress::from_socket(from), datagram)});
  return out;
}

std::vector<RelayKey> ProxyCore::idle_reaper(double now_ms) {
  std::vector<RelayKey> expired;
  std::unique_lock lock(mu_);
  for (auto& [id, a] : assocs_) {
    for (auto it = a.relays.begin(); it != a.relays.end();) {
      bool idle;
      {
        std::lock_guard g(it->second->mu);
        idle = now_ms - it->second->last_activity_ms > config_.idle_timeout_ms;
        if (idle) it->second->state = RelayState::Drained;
      }
      if (idle) {
        expired.push_back({id, it->first});
        it = a.relays.erase(it);
        --relay_total_;
        ++metrics_.relays_reaped;
      } else {
        ++it;
      }
    }
  }
  return expired;
}

std::optional<RelayView> ProxyCore::relay(const RelayKey& key) const {
  auto r = find(key);
  if (!r) return std::nullopt;
  std::lock_guard g(r->mu);
  return RelayView{r->state, r->server_name, r->server_port, r->resolved, r->cached_initial, r->client,
                   r->last_activity_ms};
}

std::size_t ProxyCore::relay_count() const {
  std::shared_lock lock(mu_);
  return relay_total_;
}

std::size_t ProxyCore::association_count() const {
  std::shared_lock lock(mu_);
  return assocs_.size();
}

}  // namespace qsk::proxy
