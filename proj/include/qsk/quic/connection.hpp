#pragma once

// Client side of an established-or-establishing connection: handshake driver,
// retransmission timers, RTT sampling, path probing and migration. Paths are
// opaque ids owned by the caller, who maps them to sockets and destinations.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qsk/quic/crypto.hpp"
#include "qsk/quic/handshake.hpp"
#include "qsk/quic/rtt.hpp"
#include "qsk/quic/wire.hpp"

namespace qsk::quic {

using PathId = std::uint32_t;

struct ClientTransmit {
  PathId path = 0;
  Packet packet;
};

enum class ClientEventType { RetryReceived, HandshakeComplete, PathValidated, MigrationComplete, Closed };

struct ClientEvent {
  ClientEventType type;
  double at_ms = 0;
  PathId old_path = 0;
  PathId new_path = 0;
  CloseReason reason = CloseReason::None;
};

enum class MigrateError { TooEarly, AlreadyOnPath };

struct MigrateResult {
  std::optional<MigrateError> error;
  std::vector<ClientTransmit> transmits;
};

struct ClientOptions {
  double retransmit_ms = 300;
  double handshake_timeout_ms = 10'000;
  int max_probe_attempts = 8;
};

class ClientConnection {
public:
  ClientConnection(std::string server_name, PathId initial_path, RandomFn random, ClientOptions options = {});

  std::vector<ClientTransmit> start(double now_ms);
  std::vector<ClientTransmit> on_packet(PathId path, const Packet& packet, double now_ms);
  std::vector<ClientTransmit> on_timer(double now_ms);
  std::optional<double> next_timeout() const;

  // PATH_CHALLENGE on path. Allowed as soon as the INITIAL is out; the
  // result is remembered so a later migrate() to a validated path completes
  // at once.
  std::vector<ClientTransmit> probe_path(PathId path, double now_ms);
  // Only from ForwardSecure or later.
  MigrateResult migrate(PathId new_path, double now_ms);
  // Empty unless forward secure (client FIN sent). Goes out on the active path.
  std::vector<ClientTransmit> send_app_data(ByteView data, double now_ms);

  std::vector<ClientEvent> take_events();
  std::vector<Bytes> take_app_data();

  Phase phase() const noexcept { return hs_.phase; }
  const HandshakeState& handshake() const noexcept { return hs_; }
  const RttEstimator& rtt() const noexcept { return rtt_; }
  PathId active_path() const noexcept { return active_path_; }
  bool path_validated(PathId path) const;

private:
  struct PathState {
    std::vector<PathData> challenges;  // every one still outstanding, newest last
    double challenge_sent_ms = 0;
    int attempts = 0;
    bool validated = false;
  };
  struct SentPacket {
    double sent_ms = 0;
    bool ack_eliciting = false;
  };

  ClientTransmit transmit(PathId path, Packet packet, double now_ms, bool ack_eliciting);
  Packet one_rtt(std::vector<Frame> frames);
  void absorb(HandshakeOutput out, PathId path, double now_ms, std::vector<ClientTransmit>& tx);
  void complete_migration(PathId new_path, double now_ms, std::vector<ClientTransmit>& tx);
  void close(CloseReason reason, double now_ms);

  HandshakeState hs_;
  RandomFn random_;
  ClientOptions options_;
  PathId active_path_;
  std::optional<PathId> pending_migration_;
  std::map<PathId, PathState> paths_;
  std::map<std::uint32_t, SentPacket> sent_;
  std::set<std::uint32_t> fin_pns_;
  std::uint32_t rtt_epoch_pn_ = 0;  // only packets at or above this feed the estimator
  RttEstimator rtt_;
  double start_ms_ = 0;
  double last_flight_ms_ = 0;
  std::vector<ClientEvent> events_;
  std::vector<Bytes> app_data_;
};

}  // namespace qsk::quic
