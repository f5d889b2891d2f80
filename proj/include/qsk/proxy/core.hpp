#pragma once

// Relay logic of the proxy with no I/O of its own: every entry point takes
// the event and returns the datagrams to send and resolutions to start.
// Safe to call from several threads; the relay table takes a shared lock for
// lookups and each relay serializes its own transitions.

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "qsk/common/address.hpp"
#include "qsk/common/bytes.hpp"
#include "qsk/quic/wire.hpp"

namespace qsk::proxy {

using AssocId = std::uint64_t;

enum class NotifyMode { Early, OnFirstResponse };
enum class RelayState { Resolving, Forwarded, RetryReplayed, Relaying, Drained };
std::string_view to_string(RelayState s);

struct ProxyConfig {
  NotifyMode notify = NotifyMode::Early;
  double idle_timeout_ms = 30'000;
  std::size_t max_relays = 4096;
};

struct RelayKey {
  AssocId assoc = 0;
  quic::ConnectionId dcid;
  friend auto operator<=>(const RelayKey&, const RelayKey&) = default;
};

struct MetricsSnapshot {
  std::uint64_t relays_created = 0;
  std::uint64_t dns_timeouts = 0;
  std::uint64_t retries_replayed = 0;
  std::uint64_t dropped_auth = 0;
  std::uint64_t dropped_malformed = 0;
  std::uint64_t dropped_table_full = 0;
  std::uint64_t dropped_unmatched = 0;
  std::uint64_t relays_reaped = 0;
  std::string to_json() const;
};

struct Metrics {
  std::atomic<std::uint64_t> relays_created{0};
  std::atomic<std::uint64_t> dns_timeouts{0};
  std::atomic<std::uint64_t> retries_replayed{0};
  std::atomic<std::uint64_t> dropped_auth{0};
  std::atomic<std::uint64_t> dropped_malformed{0};
  std::atomic<std::uint64_t> dropped_table_full{0};
  std::atomic<std::uint64_t> dropped_unmatched{0};
  std::atomic<std::uint64_t> relays_reaped{0};
  MetricsSnapshot snapshot() const;
};

// Out of the association's outbound socket.
struct SendToServer {
  AssocId assoc;
  SocketAddress to;
  Bytes datagram;
};
// Out of the association's relay socket.
struct SendToClient {
  AssocId assoc;
  SocketAddress to;
  Bytes datagram;
};
struct StartResolve {
  RelayKey key;
  std::string name;
};
// Text record for the association's control stream.
struct ReportFailure {
  AssocId assoc;
  std::string record;
};
using Action = std::variant<SendToServer, SendToClient, StartResolve, ReportFailure>;

enum class ResolveOutcome { Ok, NxDomain, Timeout, Failed };
struct Resolution {
  ResolveOutcome outcome = ResolveOutcome::Failed;
  std::optional<IpAddress> address;
};

struct RelayView {
  RelayState state;
  std::string server_name;
  std::uint16_t server_port = 0;
  std::optional<SocketAddress> resolved;
  Bytes cached_initial;
  SocketAddress client;
  double last_activity_ms = 0;
};

class ProxyCore {
public:
  explicit ProxyCore(ProxyConfig config = {});

  AssocId open_association(const IpAddress& client_ip);
  // Drops the association and every relay under it. Returns relays removed.
  std::size_t close_association(AssocId id);

  std::vector<Action> on_client_datagram(AssocId assoc, const SocketAddress& from, ByteView datagram,
                                         double now_ms);
  std::vector<Action> on_resolution(const RelayKey& key, const Resolution& result, double now_ms);
  std::vector<Action> on_server_datagram(AssocId assoc, const SocketAddress& from, ByteView datagram,
                                         double now_ms);
  // Removes relays idle longer than the timeout.
  std::vector<RelayKey> idle_reaper(double now_ms);

  std::optional<RelayView> relay(const RelayKey& key) const;
  std::size_t relay_count() const;
  std::size_t association_count() const;
  const Metrics& metrics() const noexcept { return metrics_; }
  const ProxyConfig& config() const noexcept { return config_; }

private:
  struct Relay {
    mutable std::mutex mu;
    RelayState state = RelayState::Resolving;
    std::string server_name;
    std::uint16_t server_port = 0;
    quic::ConnectionId client_scid;
    std::optional<SocketAddress> resolved;
    Bytes cached_initial;
    Bytes token;
    SocketAddress client;
    double last_activity_ms = 0;
  };
  struct Association {
    IpAddress client_ip;
    std::map<quic::ConnectionId, std::shared_ptr<Relay>> relays;
  };

  std::shared_ptr<Relay> find(const RelayKey& key) const;

  ProxyConfig config_;
  mutable std::shared_mutex mu_;
  std::map<AssocId, Association> assocs_;
  std::size_t relay_total_ = 0;
  AssocId next_assoc_ = 1;
  Metrics metrics_;
};

}  // namespace qsk::proxy
