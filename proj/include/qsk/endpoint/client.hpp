#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qsk/common/env.hpp"
#include "qsk/dns/resolver.hpp"
#include "qsk/quic/connection.hpp"
#include "qsk/socks/negotiation.hpp"

namespace qsk::endpoint {

enum class Mode { Default, Cold, Warm };
std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

inline constexpr quic::PathId kProxiedPath = 0;
inline constexpr quic::PathId kDirectPath = 1;

struct ConnectConfig {
  std::string target_name;
  std::uint16_t target_port = 4433;
  std::optional<SocketAddress> proxy;  // control address
  Mode mode = Mode::Default;
  bool migrate = false;
  bool probe_early = false;
  SocketAddress resolver;  // default mode only
  dns::StubOptions dns{1000, 2, false, false, 0};
  quic::ClientOptions quic;
  double migration_timeout_ms = 3000;
  quic::RandomFn random = quic::system_random();

  // Throws std::invalid_argument when cold/warm lacks a proxy.
  void validate() const;
};

struct TimingRecord {
  Mode mode = Mode::Default;
  bool ok = false;
  std::string error;
  double t_connect_ms = 0;
  bool retry_occurred = false;
  bool migrated = false;
  std::optional<double> t_migrate_ms;
  std::string to_json() const;
};

// SOCKS control connection plus the relay address it yields.
class ProxyAssociation {
public:
  ProxyAssociation(Environment& env, SocketAddress control);
  ~ProxyAssociation();
  ProxyAssociation(const ProxyAssociation&) = delete;
  ProxyAssociation& operator=(const ProxyAssociation&) = delete;

  void open(std::function<void(bool ok)> done);
  void close();

  bool ready() const noexcept { return handle_.valid(); }
  bool failed() const noexcept { return failed_; }
  std::string error() const;
  // Relay address; an unspecified bound address means the control address.
  SocketAddress relay() const noexcept { return handle_.relay(); }
  const socks::UdpAssociation& handle() const noexcept { return handle_; }

  // Text records the proxy writes after association (one per line).
  using RecordHandler = std::function<void(const std::string& line)>;
  void on_record(RecordHandler h) { on_record_ = std::move(h); }

private:
  Environment& env_;
  SocketAddress control_;
  socks::ClientNegotiator negotiator_;
  std::optional<StreamId> stream_;
  socks::UdpAssociation handle_;
  std::function<void(bool)> done_;
  RecordHandler on_record_;
  std::string pending_text_;
  bool failed_ = false;
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

// One connection attempt per the config. Paths: kProxiedPath runs through
// the proxy's relay socket, kDirectPath straight to the server.
class ClientSession {
public:
  // warm: established association to use in Warm mode; ignored otherwise.
  ClientSession(Environment& env, ConnectConfig config, ProxyAssociation* warm = nullptr);
  ~ClientSession();
  ClientSession(const ClientSession&) = delete;
  ClientSession& operator=(const ClientSession&) = delete;

  void start();

  // Handshake done and migration settled (when requested), or failed.
  bool finished() const noexcept { return finished_; }
  bool handshake_complete() const noexcept { return handshake_done_; }
  const TimingRecord& record() const noexcept { return record_; }

  // Goes out on the active path once forward secure; false otherwise.
  bool send_app_data(ByteView data);
  std::vector<Bytes> take_app_data();

  const quic::ClientConnection* connection() const noexcept { return conn_.get(); }
  std::optional<SocketAddress> server_address() const noexcept { return server_; }
  std::optional<SocketAddress> direct_socket_address() const;
  std::optional<SocketAddress> proxied_socket_address() const;

private:
  void fail(const std::string& why);
  void begin_handshake(quic::PathId path);
  void on_proxied(const SocketAddress& from, ByteView datagram);
  void on_direct(const SocketAddress& from, ByteView datagram);
  void learn_server(const SocketAddress& server);
  void deliver(quic::PathId path, ByteView packet_bytes);
  void flush(std::vector<quic::ClientTransmit> tx);
  void process_events();
  void rearm();
  void maybe_finish();

  Environment& env_;
  ConnectConfig config_;
  ProxyAssociation* association_ = nullptr;
  std::unique_ptr<ProxyAssociation> owned_association_;
  std::unique_ptr<dns::StubResolver> stub_;
  std::unique_ptr<quic::ClientConnection> conn_;
  std::optional<SocketId> proxied_socket_;
  std::optional<SocketId> direct_socket_;
  std::optional<SocketAddress> server_;
  TimerId timer_ = 0;
  bool timer_armed_ = false;
  TimerId migration_timer_ = 0;
  bool migration_requested_ = false;
  bool migration_settled_ = false;
  double t0_ = 0;
  bool started_ = false;
  bool handshake_done_ = false;
  bool finished_ = false;
  TimingRecord record_;
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

}  // namespace qsk::endpoint
