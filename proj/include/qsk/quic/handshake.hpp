#pragma once

// Two-flight handshake state machines with optional stateless retry.
//
//   client                                 server
//   INITIAL[CLIENTHELLO]          ---->
//                                 <----    RETRY[token]            (retry on)
//   INITIAL[token, CLIENTHELLO]   ---->
//                                 <----    HANDSHAKE[SERVERHELLO, FIN]
//   HANDSHAKE[FIN]                ---->
//
// The step functions are pure apart from mutating the passed state; all
// randomness is drawn up front (client) or through the supplied RandomFn
// (server).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsk/common/address.hpp"
#include "qsk/quic/crypto.hpp"
#include "qsk/quic/token.hpp"
#include "qsk/quic/wire.hpp"

namespace qsk::quic {

enum class Role { Client, Server };

enum class Phase {
  Idle,
  InitialSent,
  RetryReceived,
  HandshakeKeysReady,
  ForwardSecure,
  Migrating,
  EstablishedOnNewPath,
  Closed,
};

std::string_view to_string(Phase p);

// ForwardSecure, Migrating or EstablishedOnNewPath.
constexpr bool is_forward_secure(Phase p) {
  return p == Phase::ForwardSecure || p == Phase::Migrating || p == Phase::EstablishedOnNewPath;
}

enum class CloseReason { None, HandshakeAuthFailure, ProtocolViolation, HandshakeTimeout };
std::string_view to_string(CloseReason r);

enum class HandshakeEvent { RetryReceived, HandshakeComplete, Closed };

struct HandshakeState {
  Role role = Role::Client;
  Phase phase = Phase::Idle;
  std::string server_name;

  ConnectionId original_dcid;  // first dcid chosen by the client
  ConnectionId local_cid;
  ConnectionId peer_cid;

  Random32 client_random{};
  Random32 server_random{};
  std::optional<Digest> handshake_secret;  // shared secret, set once both randoms are known
  std::optional<Key> forward_secure_key;   // present iff is_forward_secure(phase)

  Bytes transcript;    // encoded handshake frames in order: CH, SH, server FIN
  Bytes client_hello;  // encoded CLIENTHELLO frame, replayed verbatim after RETRY
  Bytes token;         // client: token echoed after RETRY

  std::uint32_t next_packet_number = 0;
  std::optional<std::uint32_t> fin_packet_number;  // client FIN (latest transmission)
  bool handshake_confirmed = false;                // client: server acknowledged our FIN
  CloseReason close_reason = CloseReason::None;

  // Server: the SERVERHELLO+FIN packet, resent when the INITIAL is repeated.
  std::optional<Packet> server_flight;

  static HandshakeState client(std::string server_name, const RandomFn& random);
  std::uint32_t take_packet_number() { return next_packet_number++; }
};

struct HandshakeOutput {
  std::vector<Packet> outgoing;
  std::vector<HandshakeEvent> events;
};

// incoming == nullptr means "send the next flight": from Idle this is the
// first INITIAL, afterwards it retransmits whatever flight is outstanding.
HandshakeOutput client_handshake_step(HandshakeState& state, const Packet* incoming);

struct ServerPolicy {
  bool retry = false;
  std::uint64_t freshness_ms = kDefaultTokenFreshnessMs;
};

struct ServerStepContext {
  const ServerSecret& secret;
  ServerPolicy policy;
  SocketAddress observed_source;
  std::uint64_t now_ms = 0;
  RandomFn random;
};

// state is empty while the server holds nothing for this connection. A
// tokenless INITIAL under retry leaves it empty; invalid tokens and malformed
// packets are dropped without output.
HandshakeOutput server_handshake_step(std::optional<HandshakeState>& state, const Packet& incoming,
                                      const ServerStepContext& ctx);

}  // namespace qsk::quic
