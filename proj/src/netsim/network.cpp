#include "qsk/netsim/network.hpp"

#include <cerrno>
#include <nlohmann/json.hpp>
#include <system_error>

namespace qsk::netsim {

std::string_view to_string(TraceKind k) {
  switch (k) {
    case TraceKind::Send: return "send";
    case TraceKind::Deliver: return "deliver";
    case TraceKind::Drop: return "drop";
  }
  return "?";
}

std::string Trace::to_jsonl() const {
  std::string out;
  for (const auto& e : events_) {
    nlohmann::json j{{"t_ms", e.time_ms},         {"event", to_string(e.kind)}, {"src", e.src.to_string()},
                     {"dst", e.dst.to_string()},  {"len", e.length},           {"tag", e.tag},
                     {"transport", e.stream ? "stream" : "datagram"}};
    if (!e.note.empty()) j["reason"] = e.note;
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- Network

Network::Network(const TopologySpec& spec) {
  spec.validate();
  for (const auto& h : spec.hosts) hosts_.push_back(std::make_unique<Host>(*this, h.name, h.ip));
  std::uint64_t link_id = 0;
  for (const auto& l : spec.links) {
    const auto a = host(l.a).host_ip();
    const auto b = host(l.b).host_ip();
    auto make = [&](double d, std::uint64_t dir) {
      std::seed_seq seq{spec.seed, link_id, dir};
      Direction out{d, l.loss_rate, std::mt19937_64(seq)};
      return out;
    };
    links_.emplace(std::pair{a, b}, make(l.delay_ab_ms, 0));
    links_.emplace(std::pair{b, a}, make(l.delay_ba_ms, 1));
    ++link_id;
  }
}

Host& Network::host(std::string_view name) {
  for (auto& h : hosts_)
    if (h->name() == name) return *h;
  throw ConfigError("no host named " + std::string(name));
}

Host* Network::host_by_ip(const IpAddress& ip) {
  for (auto& h : hosts_)
    if (h->host_ip() == ip) return h.get();
  return nullptr;
}

std::optional<double> Network::delay(const IpAddress& from, const IpAddress& to) const {
  if (from == to) return 0.0;
  auto it = links_.find({from, to});
  if (it == links_.end()) return std::nullopt;
  return it->second.delay_ms;
}

TimerId Network::schedule_at(double at_ms, std::function<void()> fn) {
  const TimerId id = next_timer_++;
  queue_.push(Event{std::max(at_ms, now_), seq_++, id, std::move(fn)});
  return id;
}

void Network::cancel(TimerId id) { cancelled_.insert(id); }

void Network::purge_cancelled() {
  while (!queue_.empty() && cancelled_.count(queue_.top().id)) {
    cancelled_.erase(queue_.top().id);
    queue_.pop();
  }
}

RunResult Network::run_until(const std::function<bool()>& pred, double deadline_ms) {
  for (;;) {
    purge_cancelled();
    if (queue_.empty() || queue_.top().at > deadline_ms) break;
    auto ev = queue_.top();
    queue_.pop();
    now_ = ev.at;
    ev.fn();
    if (pred && pred()) break;
  }
  purge_cancelled();
  RunResult r;
  r.quiescent = queue_.empty();
  r.pending = queue_.size();
  r.end_ms = now_;
  return r;
}

RunResult Network::run_until_quiescent(double deadline_ms) { return run_until({}, deadline_ms); }

void Network::record(TraceKind kind, const SocketAddress& from, const SocketAddress& to, const Bytes& payload,
                     std::string tag, std::string note, bool stream, std::size_t length) {
  TraceEvent e;
  e.time_ms = now_;
  e.kind = kind;
  e.src = from;
  e.dst = to;
  e.length = stream ? length : payload.size();
  e.tag = std::move(tag);
  e.note = std::move(note);
  e.stream = stream;
  if (!stream) e.payload = payload;
  trace_.append(std::move(e));
}

void Network::send_datagram(const SocketAddress& from, const SocketAddress& to, Bytes payload) {
  std::string tag = classifier_ ? classifier_(payload) : std::string("udp");
  record(TraceKind::Send, from, to, payload, tag);
  auto d = delay(from.ip, to.ip);
  if (!d) {
    record(TraceKind::Drop, from, to, payload, tag, "unreachable");
    return;
  }
  if (from.ip != to.ip) {
    auto& dir = links_.at({from.ip, to.ip});
    if (dir.loss_rate > 0 && std::uniform_real_distribution<double>(0.0, 1.0)(dir.rng) < dir.loss_rate) {
      record(TraceKind::Drop, from, to, payload, tag, "loss");
      return;
    }
  }
  schedule_at(now_ + *d, [this, from, to, tag = std::move(tag), payload = std::move(payload)] {
    Host* h = host_by_ip(to.ip);
    auto port = h ? h->udp_ports_.find(to.port) : decltype(h->udp_ports_.end()){};
    if (h == nullptr || port == h->udp_ports_.end()) {
      record(TraceKind::Drop, from, to, payload, tag, "port-unreachable");
      return;
    }
    record(TraceKind::Deliver, from, to, payload, tag);
    auto handler = h->sockets_.at(port->second).handler;
    handler(from, payload);
  });
}

bool Network::send_segment(const SocketAddress& from, const SocketAddress& to, std::size_t length, std::string tag,
                           std::function<void()> on_arrival) {
  record(TraceKind::Send, from, to, {}, tag, {}, true, length);
  auto d = delay(from.ip, to.ip);
  if (!d) {
    record(TraceKind::Drop, from, to, {}, tag, "unreachable", true, length);
    return false;
  }
  schedule_at(now_ + *d, [this, from, to, length, tag = std::move(tag), fn = std::move(on_arrival)] {
    record(TraceKind::Deliver, from, to, {}, tag, {}, true, length);
    fn();
  });
  return true;
}

// ---------------------------------------------------------------- Host

double Host::now_ms() const { return net_.now_ms(); }

std::uint16_t Host::allocate_port(std::uint16_t requested, bool stream) {
  auto in_use = [&](std::uint16_t p) {
    if (p == 0) return true;
    if (!stream) return udp_ports_.count(p) > 0;
    if (listeners_.count(p)) return true;
    for (const auto& [id, s] : streams_)
      if (s.local.port == p) return true;
    return false;
  };
  if (requested != 0) {
    if (in_use(requested)) throw std::system_error(EADDRINUSE, std::generic_category(), name_);
    return requested;
  }
  for (int tries = 0; tries < 16384; ++tries) {
    std::uint16_t p = next_ephemeral_;
    next_ephemeral_ = next_ephemeral_ == 65535 ? 49152 : next_ephemeral_ + 1;
    if (!in_use(p)) return p;
  }
  throw std::system_error(EADDRINUSE, std::generic_category(), name_ + ": ephemeral ports exhausted");
}

SocketId Host::open_udp(std::uint16_t port, DatagramHandler on_datagram) {
  const auto p = allocate_port(port, false);
  const SocketId id = next_socket_++;
  sockets_[id] = Socket{p, std::move(on_datagram)};
  udp_ports_[p] = id;
  return id;
}

void Host::close_udp(SocketId id) {
  auto it = sockets_.find(id);
  if (it == sockets_.end()) return;
  udp_ports_.erase(it->second.port);
  sockets_.erase(it);
}

SocketAddress Host::local_address(SocketId id) const { return {ip_, sockets_.at(id).port}; }

void Host::send_udp(SocketId id, const SocketAddress& to, ByteView payload) {
  auto it = sockets_.find(id);
  if (it == sockets_.end()) return;
  net_.send_datagram({ip_, it->second.port}, to, Bytes(payload.begin(), payload.end()));
}

TimerId Host::schedule(double delay_ms, std::function<void()> fn) {
  return net_.schedule_at(net_.now_ms() + std::max(0.0, delay_ms), std::move(fn));
}

void Host::cancel(TimerId id) { net_.cancel(id); }

void Host::listen_stream(std::uint16_t port, AcceptHandler on_accept) {
  listeners_[allocate_port(port, true)] = std::move(on_accept);
}

StreamId Host::connect_stream(const SocketAddress& to, std::function<void(bool)> on_connected,
                              StreamHandlers handlers) {
  const StreamId cid = next_stream_++;
  const SocketAddress local{ip_, allocate_port(0, true)};
  streams_[cid] = Stream{local, to, std::move(handlers), std::nullopt, true};

  auto fail = [this, cid, on_connected] {
    if (streams_.erase(cid)) on_connected(false);
  };
  const bool routed = net_.send_segment(local, to, 0, "tcp-syn", [this, cid, local, to, on_connected, fail] {
    Host* peer = net_.host_by_ip(to.ip);
    auto listener = peer ? peer->listeners_.find(to.port) : decltype(peer->listeners_.end()){};
    if (peer == nullptr || listener == peer->listeners_.end()) {
      net_.send_segment(to, local, 0, "tcp-rst", fail);
      return;
    }
    const StreamId sid = peer->next_stream_++;
    peer->streams_[sid] = Stream{to, local, {}, cid, true};
    auto accepted = listener->second(sid, local);
    if (auto it = peer->streams_.find(sid); it != peer->streams_.end()) it->second.handlers = std::move(accepted);
    net_.send_segment(to, local, 0, "tcp-synack", [this, cid, sid, peer, on_connected, to, local] {
      auto it = streams_.find(cid);
      if (it == streams_.end()) {
        // Closed locally while connecting: tear down the accepted side.
        net_.send_segment(local, to, 0, "tcp-fin", [peer, sid] {
          auto ps = peer->streams_.find(sid);
          if (ps == peer->streams_.end()) return;
          auto on_close = ps->second.handlers.on_close;
          peer->streams_.erase(ps);
          if (on_close) on_close();
        });
        return;
      }
      it->second.remote = sid;
      on_connected(true);
    });
  });
  if (!routed) net_.schedule_at(net_.now_ms(), fail);
  return cid;
}

void Host::stream_send(StreamId id, ByteView data) {
  auto it = streams_.find(id);
  if (it == streams_.end() || !it->second.remote) return;
  Host* peer = net_.host_by_ip(it->second.peer.ip);
  const StreamId remote = *it->second.remote;
  Bytes copy(data.begin(), data.end());
  net_.send_segment(it->second.local, it->second.peer, copy.size(), "tcp-data", [peer, remote, copy] {
    auto ps = peer->streams_.find(remote);
    if (ps == peer->streams_.end() || !ps->second.handlers.on_data) return;
    auto on_data = ps->second.handlers.on_data;
    on_data(copy);
  });
}

void Host::stream_close(StreamId id) {
  auto it = streams_.find(id);
  if (it == streams_.end()) return;
  const Stream s = it->second;
  streams_.erase(it);
  if (!s.remote) return;
  Host* peer = net_.host_by_ip(s.peer.ip);
  const StreamId remote = *s.remote;
  net_.send_segment(s.local, s.peer, 0, "tcp-fin", [peer, remote] {
    auto ps = peer->streams_.find(remote);
    if (ps == peer->streams_.end()) return;
    auto on_close = ps->second.handlers.on_close;
    peer->streams_.erase(ps);
    if (on_close) on_close();
  });
}

SocketAddress Host::stream_peer(StreamId id) const { return streams_.at(id).peer; }

}  // namespace qsk::netsim
