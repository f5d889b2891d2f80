#include "qsk/quic/connection.hpp"

#include <algorithm>
#include <set>

namespace qsk::quic {

ClientConnection::ClientConnection(std::string server_name, PathId initial_path, RandomFn random,
                                   ClientOptions options)
    : hs_(HandshakeState::client(std::move(server_name), random)),
      random_(std::move(random)),
      options_(options),
      active_path_(initial_path) {
  paths_[initial_path].validated = true;
}

ClientTransmit ClientConnection::transmit(PathId path, Packet packet, double now_ms, bool ack_eliciting) {
  if (ack_eliciting) sent_[packet.packet_number] = {now_ms, true};
  return {path, std::move(packet)};
}

Packet ClientConnection::one_rtt(std::vector<Frame> frames) {
  Packet p;
  p.type = PacketType::OneRtt;
  p.dcid = hs_.peer_cid.empty() ? hs_.original_dcid : hs_.peer_cid;
  p.scid = hs_.local_cid;
  p.packet_number = hs_.take_packet_number();
  p.frames = std::move(frames);
  return p;
}

void ClientConnection::close(CloseReason reason, double now_ms) {
  hs_.phase = Phase::Closed;
  hs_.close_reason = reason;
  hs_.forward_secure_key.reset();
  events_.push_back({ClientEventType::Closed, now_ms, 0, 0, reason});
}

void ClientConnection::absorb(HandshakeOutput out, PathId path, double now_ms, std::vector<ClientTransmit>& tx) {
  for (auto& p : out.outgoing) {
    last_flight_ms_ = now_ms;
    tx.push_back(transmit(path, std::move(p), now_ms, true));
  }
  for (auto ev : out.events) {
    switch (ev) {
      case HandshakeEvent::RetryReceived:
        events_.push_back({ClientEventType::RetryReceived, now_ms});
        break;
      case HandshakeEvent::HandshakeComplete:
        events_.push_back({ClientEventType::HandshakeComplete, now_ms});
        break;
      case HandshakeEvent::Closed:
        events_.push_back({ClientEventType::Closed, now_ms, 0, 0, hs_.close_reason});
        break;
    }
  }
}

std::vector<ClientTransmit> ClientConnection::start(double now_ms) {
  std::vector<ClientTransmit> tx;
  if (hs_.phase != Phase::Idle) return tx;
  start_ms_ = now_ms;
  absorb(client_handshake_step(hs_, nullptr), active_path_, now_ms, tx);
  return tx;
}

std::vector<ClientTransmit> ClientConnection::on_packet(PathId path, const Packet& packet, double now_ms) {
  std::vector<ClientTransmit> tx;
  if (hs_.phase == Phase::Closed || hs_.phase == Phase::Idle) return tx;

  if (packet.type == PacketType::Retry || packet.type == PacketType::Handshake) {
    const bool was_secure = is_forward_secure(hs_.phase);
    // Latest INITIAL is the one the server answered.
    std::optional<double> initial_sent;
    for (auto it = sent_.rbegin(); it != sent_.rend(); ++it) {
      if (!hs_.fin_packet_number || it->first < *hs_.fin_packet_number) {
        initial_sent = it->second.sent_ms;
        break;
      }
    }
    const auto out_count = hs_.next_packet_number;
    absorb(client_handshake_step(hs_, &packet), active_path_, now_ms, tx);
    if (!was_secure && is_forward_secure(hs_.phase) && initial_sent) {
      rtt_.on_sample(now_ms - *initial_sent);
    }
    for (auto pn = out_count; pn < hs_.next_packet_number; ++pn) {
      if (hs_.fin_packet_number && pn == *hs_.fin_packet_number) fin_pns_.insert(pn);
    }
    return tx;
  }

  if (packet.type != PacketType::OneRtt) return tx;

  // Answer challenges before anything else so a validation completing in
  // this same packet cannot race ahead of our PATH_RESPONSE.
  for (const auto& f : packet.frames) {
    if (f.type != FrameType::PathChallenge) continue;
    try {
      auto data = parse_path_data(f);
      tx.push_back(transmit(path, one_rtt({Frame::path_response(data)}), now_ms, false));
    } catch (const DecodeError&) {
    }
  }

  for (const auto& f : packet.frames) {
    try {
      switch (f.type) {
        case FrameType::Ack: {
          const auto pn = parse_ack(f);
          if (fin_pns_.count(pn)) hs_.handshake_confirmed = true;
          auto it = sent_.find(pn);
          if (it != sent_.end()) {
            if (pn >= rtt_epoch_pn_ && it->second.ack_eliciting) rtt_.on_sample(now_ms - it->second.sent_ms);
            sent_.erase(sent_.begin(), std::next(it));
          }
          break;
        }
        case FrameType::PathResponse: {
          auto data = parse_path_data(f);
          auto it = paths_.find(path);
          if (it == paths_.end()) break;
          const auto& outstanding = it->second.challenges;
          if (std::find(outstanding.begin(), outstanding.end(), data) == outstanding.end()) break;
          if (!it->second.validated) {
            it->second.validated = true;
            events_.push_back({ClientEventType::PathValidated, now_ms, active_path_, path});
          }
          if (pending_migration_ == path && is_forward_secure(hs_.phase)) complete_migration(path, now_ms, tx);
          break;
        }
        case FrameType::AppData:
          app_data_.push_back(f.value);
          break;
        default:
          break;
      }
    } catch (const DecodeError&) {
    }
  }
  return tx;
}

void ClientConnection::complete_migration(PathId new_path, double now_ms, std::vector<ClientTransmit>& tx) {
  const PathId old = active_path_;
  active_path_ = new_path;
  pending_migration_.reset();
  rtt_.reset();
  sent_.clear();
  rtt_epoch_pn_ = hs_.next_packet_number;
  hs_.phase = Phase::EstablishedOnNewPath;
  events_.push_back({ClientEventType::MigrationComplete, now_ms, old, new_path});
  // First non-probing packet on the new path; lets the server switch over.
  tx.push_back(transmit(new_path, one_rtt({Frame::ping()}), now_ms, true));
}

std::vector<ClientTransmit> ClientConnection::probe_path(PathId path, double now_ms) {
  std::vector<ClientTransmit> tx;
  if (hs_.phase == Phase::Idle || hs_.phase == Phase::Closed) return tx;
  auto& st = paths_[path];
  if (st.validated) return tx;
  st.challenges.push_back(random_path_data(random_));
  st.challenge_sent_ms = now_ms;
  st.attempts = 1;
  tx.push_back(transmit(path, one_rtt({Frame::path_challenge(st.challenges.back())}), now_ms, false));
  return tx;
}

MigrateResult ClientConnection::migrate(PathId new_path, double now_ms) {
  MigrateResult r;
  if (!is_forward_secure(hs_.phase)) {
    r.error = MigrateError::TooEarly;
    return r;
  }
  if (new_path == active_path_) {
    r.error = MigrateError::AlreadyOnPath;
    return r;
  }
  pending_migration_ = new_path;
  if (path_validated(new_path)) {
    complete_migration(new_path, now_ms, r.transmits);
    return r;
  }
  hs_.phase = Phase::Migrating;
  // Fresh challenge now; earlier ones stay acceptable if still in flight.
  r.transmits = probe_path(new_path, now_ms);
  return r;
}

std::vector<ClientTransmit> ClientConnection::send_app_data(ByteView data, double now_ms) {
  std::vector<ClientTransmit> tx;
  if (!is_forward_secure(hs_.phase)) return tx;
  tx.push_back(transmit(active_path_, one_rtt({Frame::app_data(data)}), now_ms, true));
  return tx;
}

std::vector<ClientTransmit> ClientConnection::on_timer(double now_ms) {
  std::vector<ClientTransmit> tx;
  if (hs_.phase == Phase::Idle || hs_.phase == Phase::Closed) return tx;

  if (!is_forward_secure(hs_.phase) && now_ms >= start_ms_ + options_.handshake_timeout_ms) {
    close(CloseReason::HandshakeTimeout, now_ms);
    return tx;
  }
  const bool flight_outstanding =
      hs_.phase == Phase::InitialSent || hs_.phase == Phase::RetryReceived ||
      (is_forward_secure(hs_.phase) && !hs_.handshake_confirmed);
  if (flight_outstanding && now_ms >= last_flight_ms_ + options_.retransmit_ms) {
    const auto out_count = hs_.next_packet_number;
    absorb(client_handshake_step(hs_, nullptr), active_path_, now_ms, tx);
    for (auto pn = out_count; pn < hs_.next_packet_number; ++pn) {
      if (hs_.fin_packet_number && pn == *hs_.fin_packet_number) fin_pns_.insert(pn);
    }
  }
  for (auto& [id, st] : paths_) {
    if (st.validated || st.challenges.empty() || st.attempts >= options_.max_probe_attempts) continue;
    if (now_ms < st.challenge_sent_ms + options_.retransmit_ms) continue;
    st.challenge_sent_ms = now_ms;
    ++st.attempts;
    tx.push_back(transmit(id, one_rtt({Frame::path_challenge(st.challenges.back())}), now_ms, false));
  }
  return tx;
}

std::optional<double> ClientConnection::next_timeout() const {
  if (hs_.phase == Phase::Idle || hs_.phase == Phase::Closed) return std::nullopt;
  std::optional<double> next;
  auto consider = [&](double t) { next = next ? std::min(*next, t) : t; };
  if (!is_forward_secure(hs_.phase)) consider(start_ms_ + options_.handshake_timeout_ms);
  const bool flight_outstanding =
      hs_.phase == Phase::InitialSent || hs_.phase == Phase::RetryReceived ||
      (is_forward_secure(hs_.phase) && !hs_.handshake_confirmed);
  if (flight_outstanding) consider(last_flight_ms_ + options_.retransmit_ms);
  for (const auto& [id, st] : paths_) {
    if (st.validated || st.challenges.empty() || st.attempts >= options_.max_probe_attempts) continue;
    consider(st.challenge_sent_ms + options_.retransmit_ms);
  }
  return next;
}

bool ClientConnection::path_validated(PathId path) const {
  auto it = paths_.find(path);
  return it != paths_.end() && it->second.validated;
}

std::vector<ClientEvent> ClientConnection::take_events() { return std::exchange(events_, {}); }

std::vector<Bytes> ClientConnection::take_app_data() { return std::exchange(app_data_, {}); }

}  // namespace qsk::quic
