#include "qsk/quic/server.hpp"

#include <algorithm>
#include <utility>

namespace qsk::quic {

ServerEndpoint::ServerEndpoint(ServerConfig config) : config_(std::move(config)) {}

const ServerEndpoint::Connection* ServerEndpoint::find(const ConnectionId& cid) const {
  auto it = connections_.find(cid);
  if (it != connections_.end()) return &it->second;
  auto alias = aliases_.find(cid);
  if (alias == aliases_.end()) return nullptr;
  it = connections_.find(alias->second);
  return it == connections_.end() ? nullptr : &it->second;
}

ServerEndpoint::Connection* ServerEndpoint::lookup(const ConnectionId& dcid) {
  return const_cast<Connection*>(std::as_const(*this).find(dcid));
}

void ServerEndpoint::send(std::vector<ServerTransmit>& out, const SocketAddress& to, const Packet& p) {
  auto bytes = encode_packet(p);
  if (bytes.size() > kMaxDatagramSize) {
    ++stats_.dropped_oversize;
    return;
  }
  out.push_back({to, std::move(bytes)});
}

std::vector<ServerTransmit> ServerEndpoint::on_datagram(const SocketAddress& from, ByteView datagram,
                                                        double now_ms) {
  std::vector<ServerTransmit> out;
  Packet p;
  try {
    p = decode_packet(datagram);
  } catch (const DecodeError&) {
    ++stats_.dropped_malformed;
    return out;
  }

  const ServerStepContext ctx{config_.secret, config_.policy, from, static_cast<std::uint64_t>(now_ms),
                              config_.random};
  Connection* c = lookup(p.dcid);

  if (c == nullptr) {
    if (p.type != PacketType::Initial) {
      ++stats_.dropped_unknown;
      return out;
    }
    std::optional<HandshakeState> state;
    auto step = server_handshake_step(state, p, ctx);
    for (const auto& reply : step.outgoing) {
      if (reply.type == PacketType::Retry) ++stats_.retries_sent;
      send(out, from, reply);
    }
    if (state) {
      const auto cid = state->local_cid;
      aliases_[p.dcid] = cid;
      connections_.emplace(cid, Connection{std::move(state), from, std::nullopt, {}});
    }
    return out;
  }

  switch (p.type) {
    case PacketType::Initial:
    case PacketType::Handshake: {
      const bool was_secure = is_forward_secure(c->handshake->phase);
      auto step = server_handshake_step(c->handshake, p, ctx);
      for (const auto& reply : step.outgoing) send(out, from, reply);
      const bool now_secure = is_forward_secure(c->handshake->phase);
      if (!was_secure && now_secure) {
        ++stats_.handshakes_completed;
        events_.push_back({ServerEvent::Type::HandshakeComplete, c->handshake->local_cid, c->peer, c->peer});
      }
      if (now_secure && p.type == PacketType::Handshake && p.find(FrameType::Fin) != nullptr) {
        Packet ack;
        ack.type = PacketType::OneRtt;
        ack.dcid = c->handshake->peer_cid;
        ack.scid = c->handshake->local_cid;
        ack.packet_number = c->handshake->take_packet_number();
        ack.frames.push_back(Frame::ack(p.packet_number));
        send(out, c->peer, ack);
      }
      if (now_secure) {
        for (auto& [addr, early] : std::exchange(c->early, {})) on_one_rtt(*c, addr, early, out);
      }
      break;
    }
    case PacketType::OneRtt:
      on_one_rtt(*c, from, p, out);
      break;
    case PacketType::Retry:
      ++stats_.dropped_unknown;
      break;
  }
  return out;
}

void ServerEndpoint::on_one_rtt(Connection& c, const SocketAddress& from, const Packet& p,
                                std::vector<ServerTransmit>& out) {
  auto& hs = *c.handshake;
  if (hs.phase == Phase::Closed) return;
  auto make_packet = [&](std::vector<Frame> frames) {
    Packet reply;
    reply.type = PacketType::OneRtt;
    reply.dcid = hs.peer_cid;
    reply.scid = hs.local_cid;
    reply.packet_number = hs.take_packet_number();
    reply.frames = std::move(frames);
    return reply;
  };

  const bool non_probing = std::any_of(p.frames.begin(), p.frames.end(), [](const Frame& f) {
    return f.type != FrameType::PathChallenge && f.type != FrameType::PathResponse;
  });
  if (non_probing && !is_forward_secure(hs.phase)) {
    if (c.early.size() < kMaxEarlyPackets) {
      c.early.emplace_back(from, p);
      ++stats_.early_buffered;
    } else {
      ++stats_.dropped_early;
    }
    return;
  }

  std::vector<Frame> path_frames;
  bool probing_only = true;
  for (const auto& f : p.frames) {
    try {
      switch (f.type) {
        case FrameType::PathChallenge:
          path_frames.push_back(Frame::path_response(parse_path_data(f)));
          break;
        case FrameType::PathResponse:
          if (c.candidate && c.candidate->address == from && parse_path_data(f) == c.candidate->challenge)
            c.candidate->validated = true;
          break;
        default:
          probing_only = false;
          break;
      }
    } catch (const DecodeError&) {
      ++stats_.dropped_malformed;
      return;
    }
  }

  if (from != c.peer) {
    if (!c.candidate || c.candidate->address != from) {
      c.candidate = PathCandidate{from, random_path_data(config_.random), 0, false};
    }
    auto& cand = *c.candidate;
    if (!cand.validated && (!path_frames.empty() || !probing_only))
      path_frames.push_back(Frame::path_challenge(cand.challenge));
    if (!path_frames.empty()) {
      if (cand.validated) {
        send(out, from, make_packet(std::move(path_frames)));
      } else if (cand.sent < kUnvalidatedSendBudget) {
        ++cand.sent;
        send(out, from, make_packet(std::move(path_frames)));
      } else {
        ++stats_.dropped_budget;
      }
    }
    if (!probing_only && cand.validated) {
      const auto old = c.peer;
      c.peer = from;
      c.candidate.reset();
      events_.push_back({ServerEvent::Type::PeerMigrated, hs.local_cid, old, from});
    }
  } else if (!path_frames.empty()) {
    send(out, c.peer, make_packet(std::move(path_frames)));
  }

  if (probing_only) return;
  std::vector<Frame> reply{Frame::ack(p.packet_number)};
  if (config_.echo_app_data) {
    for (const auto& f : p.frames)
      if (f.type == FrameType::AppData) reply.push_back(f);
  }
  send(out, c.peer, make_packet(std::move(reply)));
}

}  // namespace qsk::quic
