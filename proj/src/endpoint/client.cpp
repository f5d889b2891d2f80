#include "qsk/endpoint/client.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "qsk/socks/codec.hpp"

namespace qsk::endpoint {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Default: return "default";
    case Mode::Cold: return "cold";
    case Mode::Warm: return "warm";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "default") return Mode::Default;
  if (s == "cold") return Mode::Cold;
  if (s == "warm") return Mode::Warm;
  return std::nullopt;
}

void ConnectConfig::validate() const {
  if (mode != Mode::Default && !proxy) throw std::invalid_argument("cold and warm modes need a proxy");
  if (target_name.empty()) throw std::invalid_argument("empty target name");
}

std::string TimingRecord::to_json() const {
  nlohmann::json j{{"mode", to_string(mode)},
                   {"ok", ok},
                   {"t_connect_ms", t_connect_ms},
                   {"retry_occurred", retry_occurred},
                   {"migrated", migrated},
                   {"t_migrate_ms", t_migrate_ms ? nlohmann::json(*t_migrate_ms) : nlohmann::json(nullptr)}};
  if (!error.empty()) j["error"] = error;
  return j.dump();
}

// ---------------------------------------------------------------- association

ProxyAssociation::ProxyAssociation(Environment& env, SocketAddress control) : env_(env), control_(control) {}

ProxyAssociation::~ProxyAssociation() {
  *alive_ = false;
  close();
}

std::string ProxyAssociation::error() const {
  if (auto e = negotiator_.error()) return std::string(socks::to_string(*e));
  return failed_ ? "control connection failed" : "";
}

void ProxyAssociation::open(std::function<void(bool)> done) {
  done_ = std::move(done);
  std::weak_ptr<bool> alive = alive_;
  auto finish = [this, alive](bool ok) {
    if (alive.expired()) return;
    if (!ok) failed_ = true;
    if (auto cb = std::exchange(done_, nullptr)) cb(ok);
  };
  StreamHandlers handlers{
      [this, alive, finish](ByteView data) {
        if (alive.expired()) return;
        if (handle_.valid()) {
          pending_text_.append(data.begin(), data.end());
          for (auto nl = pending_text_.find('\n'); nl != std::string::npos; nl = pending_text_.find('\n')) {
            auto line = pending_text_.substr(0, nl);
            pending_text_.erase(0, nl + 1);
            if (on_record_) on_record_(line);
          }
          return;
        }
        if (failed_) return;
        auto step = negotiator_.feed(data);
        if (!step.to_send.empty() && stream_) env_.stream_send(*stream_, step.to_send);
        if (!step.finished) return;
        if (negotiator_.done()) {
          auto relay = negotiator_.bound_address();
          if (relay.ip.is_unspecified()) relay.ip = control_.ip;
          handle_ = socks::UdpAssociation(relay, *stream_);
          finish(true);
        } else {
          close();
          finish(false);
        }
      },
      [this, alive, finish] {
        if (alive.expired()) return;
        stream_.reset();
        const bool was_ready = handle_.valid();
        handle_.invalidate();
        negotiator_.on_stream_closed();
        if (!was_ready) finish(false);
      }};
  stream_ = env_.connect_stream(
      control_,
      [this, alive, finish](bool ok) {
        if (alive.expired()) return;
        if (!ok) {
          stream_.reset();
          finish(false);
          return;
        }
        if (stream_) env_.stream_send(*stream_, negotiator_.start());
      },
      std::move(handlers));
}

void ProxyAssociation::close() {
  handle_.invalidate();
  if (stream_) env_.stream_close(*std::exchange(stream_, std::nullopt));
}

// ---------------------------------------------------------------- session

ClientSession::ClientSession(Environment& env, ConnectConfig config, ProxyAssociation* warm)
    : env_(env), config_(std::move(config)), association_(config_.mode == Mode::Warm ? warm : nullptr) {
  config_.validate();
  record_.mode = config_.mode;
}

ClientSession::~ClientSession() {
  *alive_ = false;
  if (timer_armed_) env_.cancel(timer_);
  if (migration_requested_) env_.cancel(migration_timer_);
  if (association_ && association_ != owned_association_.get()) association_->on_record(nullptr);
  stub_.reset();
  if (proxied_socket_) env_.close_udp(*proxied_socket_);
  if (direct_socket_) env_.close_udp(*direct_socket_);
}

std::optional<SocketAddress> ClientSession::direct_socket_address() const {
  if (!direct_socket_) return std::nullopt;
  return env_.local_address(*direct_socket_);
}

std::optional<SocketAddress> ClientSession::proxied_socket_address() const {
  if (!proxied_socket_) return std::nullopt;
  return env_.local_address(*proxied_socket_);
}

void ClientSession::start() {
  if (started_) return;
  started_ = true;
  t0_ = env_.now_ms();
  std::weak_ptr<bool> alive = alive_;

  direct_socket_ = env_.open_udp(0, [this, alive](const SocketAddress& from, ByteView d) {
    if (!alive.expired()) on_direct(from, d);
  });
  if (config_.mode != Mode::Default) {
    proxied_socket_ = env_.open_udp(0, [this, alive](const SocketAddress& from, ByteView d) {
      if (!alive.expired()) on_proxied(from, d);
    });
  }
  conn_ = std::make_unique<quic::ClientConnection>(config_.target_name,
                                                   config_.mode == Mode::Default ? kDirectPath : kProxiedPath,
                                                   config_.random, config_.quic);

  auto watch_records = [this, alive] {
    association_->on_record([this, alive](const std::string& line) {
      if (alive.expired() || !conn_) return;
      const auto prefix = "QSK-ERR " + conn_->handshake().original_dcid.to_hex() + " ";
      if (line.rfind(prefix, 0) == 0) fail("proxy: " + line.substr(prefix.size()));
    });
  };

  switch (config_.mode) {
    case Mode::Default: {
      stub_ = std::make_unique<dns::StubResolver>(env_, config_.resolver, config_.dns);
      const auto type = env_.host_ip().is_v4() ? dns::RecordType::A : dns::RecordType::AAAA;
      stub_->resolve(config_.target_name, type, [this, alive](const dns::ResolveResult& r) {
        if (alive.expired()) return;
        if (r.status != dns::ResolveStatus::Ok || r.addresses.empty()) {
          fail("dns: " + std::string(dns::to_string(r.status)));
          return;
        }
        learn_server({r.addresses.front(), config_.target_port});
        begin_handshake(kDirectPath);
      });
      break;
    }
    case Mode::Cold:
      owned_association_ = std::make_unique<ProxyAssociation>(env_, *config_.proxy);
      association_ = owned_association_.get();
      association_->open([this, alive, watch_records](bool ok) {
        if (alive.expired()) return;
        if (!ok) {
          fail("association failure: " + association_->error());
          return;
        }
        watch_records();
        begin_handshake(kProxiedPath);
      });
      break;
    case Mode::Warm:
      if (association_ == nullptr || !association_->ready()) {
        fail("association failure: not established");
        return;
      }
      watch_records();
      begin_handshake(kProxiedPath);
      break;
  }
}

void ClientSession::fail(const std::string& why) {
  if (finished_) return;
  record_.ok = false;
  record_.error = why;
  finished_ = true;
}

void ClientSession::begin_handshake(quic::PathId) {
  flush(conn_->start(env_.now_ms()));
  process_events();
  rearm();
}

void ClientSession::on_proxied(const SocketAddress& from, ByteView datagram) {
  if (!association_ || !association_->ready() || from != association_->relay()) return;
  socks::DecodedDatagram d;
  try {
    d = socks::decode_udp_header(datagram);
  } catch (const DecodeError&) {
    return;
  }
  if (d.header.dst.is_domain()) return;
  learn_server(d.header.dst.socket_address());
  if (d.payload.empty()) return;  // resolved-address notification
  deliver(kProxiedPath, d.payload);
}

void ClientSession::on_direct(const SocketAddress& from, ByteView datagram) {
  if (!server_ || from != *server_) return;
  deliver(kDirectPath, datagram);
}

void ClientSession::learn_server(const SocketAddress& server) {
  if (server_) return;
  server_ = server;
  if (!conn_ || config_.mode == Mode::Default || !config_.migrate) return;
  if (config_.probe_early) flush(conn_->probe_path(kDirectPath, env_.now_ms()));
  if (handshake_done_ && !migration_requested_) {
    migration_requested_ = true;
    auto r = conn_->migrate(kDirectPath, env_.now_ms());
    if (r.error) migration_settled_ = true;
    flush(std::move(r.transmits));
  }
  process_events();
  rearm();
}

void ClientSession::deliver(quic::PathId path, ByteView bytes) {
  if (!conn_) return;
  quic::Packet p;
  try {
    p = quic::decode_packet(bytes);
  } catch (const DecodeError&) {
    return;
  }
  flush(conn_->on_packet(path, p, env_.now_ms()));
  process_events();
  rearm();
}

void ClientSession::flush(std::vector<quic::ClientTransmit> tx) {
  for (auto& t : tx) {
    auto bytes = quic::encode_packet(t.packet);
    if (bytes.size() > quic::kMaxDatagramSize) continue;
    if (t.path == kProxiedPath) {
      if (!association_ || !association_->ready() || !proxied_socket_) continue;
      const auto dst = server_ ? socks::SocksAddress::from_socket(*server_)
                               : socks::SocksAddress::from_domain(config_.target_name, config_.target_port);
      env_.send_udp(*proxied_socket_, association_->relay(), socks::encapsulate(dst, bytes));
    } else if (server_ && direct_socket_) {
      env_.send_udp(*direct_socket_, *server_, bytes);
    }
  }
}

void ClientSession::process_events() {
  if (!conn_) return;
  std::weak_ptr<bool> alive = alive_;
  for (const auto& ev : conn_->take_events()) {
    switch (ev.type) {
      case quic::ClientEventType::RetryReceived:
        record_.retry_occurred = true;
        break;
      case quic::ClientEventType::HandshakeComplete:
        handshake_done_ = true;
        if (!finished_) {
          record_.ok = true;
          record_.t_connect_ms = ev.at_ms - t0_;
        }
        if (config_.migrate && config_.mode != Mode::Default && server_ && !migration_requested_) {
          migration_requested_ = true;
          auto r = conn_->migrate(kDirectPath, env_.now_ms());
          if (r.error) migration_settled_ = true;
          flush(std::move(r.transmits));
        }
        if (migration_requested_ && !migration_settled_) {
          migration_timer_ = env_.schedule(config_.migration_timeout_ms, [this, alive] {
            if (alive.expired() || migration_settled_) return;
            migration_settled_ = true;  // soft failure: stay on the proxied path
            maybe_finish();
          });
        }
        break;
      case quic::ClientEventType::PathValidated:
        break;
      case quic::ClientEventType::MigrationComplete:
        record_.migrated = true;
        record_.t_migrate_ms = ev.at_ms - t0_;
        migration_settled_ = true;
        break;
      case quic::ClientEventType::Closed:
        if (!handshake_done_) fail(std::string("handshake: ") + std::string(quic::to_string(ev.reason)));
        break;
    }
  }
  maybe_finish();
}

void ClientSession::maybe_finish() {
  if (finished_ || !handshake_done_) return;
  const bool wants_migration = config_.migrate && config_.mode != Mode::Default;
  if (!wants_migration || migration_settled_) finished_ = true;
}

void ClientSession::rearm() {
  if (!conn_) return;
  if (timer_armed_) env_.cancel(timer_);
  timer_armed_ = false;
  auto next = conn_->next_timeout();
  if (!next) return;
  std::weak_ptr<bool> alive = alive_;
  timer_armed_ = true;
  timer_ = env_.schedule(std::max(0.0, *next - env_.now_ms()), [this, alive] {
    if (alive.expired()) return;
    timer_armed_ = false;
    flush(conn_->on_timer(env_.now_ms()));
    process_events();
    rearm();
  });
}

bool ClientSession::send_app_data(ByteView data) {
  if (!conn_ || !quic::is_forward_secure(conn_->phase())) return false;
  flush(conn_->send_app_data(data, env_.now_ms()));
  rearm();
  return true;
}

std::vector<Bytes> ClientSession::take_app_data() { return conn_ ? conn_->take_app_data() : std::vector<Bytes>{}; }

}  // namespace qsk::endpoint
