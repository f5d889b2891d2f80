#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "qsk/common/address.hpp"
#include "qsk/quic/crypto.hpp"
#include "qsk/quic/handshake.hpp"
#include "qsk/quic/token.hpp"
#include "qsk/quic/wire.hpp"

namespace qsk::quic {

// Unvalidated-address send budget: packets the server may send to a new
// client address before that address answers a PATH_CHALLENGE.
inline constexpr int kUnvalidatedSendBudget = 3;
// 1-RTT packets held per connection while the client's FIN is still in
// flight; replayed in arrival order once the handshake completes.
inline constexpr std::size_t kMaxEarlyPackets = 16;

struct ServerConfig {
  ServerSecret secret;
  ServerPolicy policy;
  RandomFn random = system_random();
  bool echo_app_data = true;
};

struct ServerTransmit {
  SocketAddress to;
  Bytes datagram;
};

struct ServerEvent {
  enum class Type { HandshakeComplete, PeerMigrated } type;
  ConnectionId connection;
  SocketAddress old_peer;
  SocketAddress new_peer;
};

struct ServerStats {
  std::uint64_t retries_sent = 0;
  std::uint64_t handshakes_completed = 0;
  std::uint64_t dropped_malformed = 0;
  std::uint64_t dropped_unknown = 0;
  std::uint64_t dropped_oversize = 0;
  std::uint64_t dropped_budget = 0;
  std::uint64_t early_buffered = 0;
  std::uint64_t dropped_early = 0;
};

// Connection table plus per-connection path state, fed whole datagrams.
class ServerEndpoint {
public:
  explicit ServerEndpoint(ServerConfig config);

  std::vector<ServerTransmit> on_datagram(const SocketAddress& from, ByteView datagram, double now_ms);

  // Connections holding state. A tokenless INITIAL answered with RETRY does
  // not change this.
  std::size_t state_store_size() const noexcept { return connections_.size(); }
  const ServerStats& stats() const noexcept { return stats_; }
  std::vector<ServerEvent> take_events() { return std::exchange(events_, {}); }

  struct PathCandidate {
    SocketAddress address;
    PathData challenge{};
    int sent = 0;
    bool validated = false;
  };
  struct Connection {
    std::optional<HandshakeState> handshake;  // always engaged
    SocketAddress peer;
    std::optional<PathCandidate> candidate;
    std::vector<std::pair<SocketAddress, Packet>> early;
  };
  const Connection* find(const ConnectionId& cid) const;

private:
  Connection* lookup(const ConnectionId& dcid);
  void send(std::vector<ServerTransmit>& out, const SocketAddress& to, const Packet& p);
  void on_one_rtt(Connection& c, const SocketAddress& from, const Packet& p, std::vector<ServerTransmit>& out);

  ServerConfig config_;
  std::unordered_map<ConnectionId, Connection> connections_;  // by server cid
  std::unordered_map<ConnectionId, ConnectionId> aliases_;    // original dcid -> server cid
  std::vector<ServerEvent> events_;
  ServerStats stats_;
};

}  // namespace qsk::quic
