#include "qsk/quic/handshake.hpp"

namespace qsk::quic {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Idle: return "Idle";
    case Phase::InitialSent: return "InitialSent";
    case Phase::RetryReceived: return "RetryReceived";
    case Phase::HandshakeKeysReady: return "HandshakeKeysReady";
    case Phase::ForwardSecure: return "ForwardSecure";
    case Phase::Migrating: return "Migrating";
    case Phase::EstablishedOnNewPath: return "EstablishedOnNewPath";
    case Phase::Closed: return "Closed";
  }
  return "?";
}

std::string_view to_string(CloseReason r) {
  switch (r) {
    case CloseReason::None: return "none";
    case CloseReason::HandshakeAuthFailure: return "handshake-auth-failure";
    case CloseReason::ProtocolViolation: return "protocol-violation";
    case CloseReason::HandshakeTimeout: return "handshake-timeout";
  }
  return "?";
}

HandshakeState HandshakeState::client(std::string server_name, const RandomFn& random) {
  HandshakeState s;
  s.role = Role::Client;
  s.server_name = std::move(server_name);
  s.original_dcid = random_connection_id(random);
  s.local_cid = random_connection_id(random);
  s.client_random = random32(random);
  s.client_hello = encode_frame(Frame::client_hello(s.client_random, s.server_name));
  return s;
}

namespace {

void append(Bytes& dst, ByteView src) { dst.insert(dst.end(), src.begin(), src.end()); }

void close(HandshakeState& s, CloseReason reason, HandshakeOutput& out) {
  s.phase = Phase::Closed;
  s.close_reason = reason;
  s.forward_secure_key.reset();
  s.handshake_secret.reset();
  out.events.push_back(HandshakeEvent::Closed);
}

Packet client_initial(HandshakeState& s) {
  Packet p;
  p.type = PacketType::Initial;
  p.dcid = s.original_dcid;
  p.scid = s.local_cid;
  p.token = s.token;
  p.packet_number = s.take_packet_number();
  // The stored frame bytes are re-decoded so the replayed CLIENTHELLO is
  // bytewise identical to the first one.
  ByteReader r(s.client_hello);
  Frame ch;
  ch.type = static_cast<FrameType>(r.u8("frame.type"));
  auto v = r.take(r.u16("frame.length"), "frame.value");
  ch.value.assign(v.begin(), v.end());
  p.frames.push_back(std::move(ch));
  return p;
}

Packet client_fin(HandshakeState& s, const std::array<std::uint8_t, kMacSize>& mac) {
  Packet p;
  p.type = PacketType::Handshake;
  p.dcid = s.peer_cid;
  p.scid = s.local_cid;
  p.packet_number = s.take_packet_number();
  p.frames.push_back(Frame::fin(mac));
  s.fin_packet_number = p.packet_number;
  return p;
}

std::array<std::uint8_t, kMacSize> client_fin_mac(const HandshakeState& s) {
  return fin_mac(*s.forward_secure_key, s.transcript);
}

}  // namespace

HandshakeOutput client_handshake_step(HandshakeState& s, const Packet* in) {
  HandshakeOutput out;
  if (s.phase == Phase::Closed) return out;

  if (in == nullptr) {
    switch (s.phase) {
      case Phase::Idle:
        s.transcript = s.client_hello;
        out.outgoing.push_back(client_initial(s));
        s.phase = Phase::InitialSent;
        break;
      case Phase::InitialSent:
      case Phase::RetryReceived:
        out.outgoing.push_back(client_initial(s));
        break;
      default:
        if (is_forward_secure(s.phase) && !s.handshake_confirmed)
          out.outgoing.push_back(client_fin(s, client_fin_mac(s)));
        break;
    }
    return out;
  }

  const Packet& p = *in;
  if (p.type == PacketType::Retry) {
    if (s.phase == Phase::RetryReceived) {
      close(s, CloseReason::ProtocolViolation, out);
      return out;
    }
    if (s.phase != Phase::InitialSent || p.dcid != s.local_cid || p.token.empty()) return out;
    s.token = p.token;
    s.phase = Phase::RetryReceived;
    out.events.push_back(HandshakeEvent::RetryReceived);
    out.outgoing.push_back(client_initial(s));
    return out;
  }

  if (p.type != PacketType::Handshake) return out;
  const Frame* sh = p.find(FrameType::ServerHello);
  const Frame* fin = p.find(FrameType::Fin);
  if (sh == nullptr || fin == nullptr) return out;

  if (is_forward_secure(s.phase)) {
    // Server repeated its flight, so our FIN was probably lost.
    if (!s.handshake_confirmed) out.outgoing.push_back(client_fin(s, client_fin_mac(s)));
    return out;
  }
  if (s.phase != Phase::InitialSent && s.phase != Phase::RetryReceived) return out;

  Random32 server_random;
  std::array<std::uint8_t, kMacSize> server_mac;
  try {
    server_random = parse_server_hello(*sh);
    server_mac = parse_fin(*fin);
  } catch (const DecodeError&) {
    return out;
  }

  Bytes transcript = s.client_hello;
  append(transcript, encode_frame(*sh));
  const auto shared = derive_shared_secret(s.client_random, server_random);
  const auto key = derive_forward_secure_key(shared);
  if (!constant_time_equal(fin_mac(key, transcript), server_mac)) {
    close(s, CloseReason::HandshakeAuthFailure, out);
    return out;
  }
  append(transcript, encode_frame(*fin));

  s.server_random = server_random;
  s.peer_cid = p.scid;
  s.transcript = std::move(transcript);
  s.handshake_secret = shared;
  s.forward_secure_key = key;
  s.phase = Phase::ForwardSecure;
  out.outgoing.push_back(client_fin(s, client_fin_mac(s)));
  out.events.push_back(HandshakeEvent::HandshakeComplete);
  return out;
}

HandshakeOutput server_handshake_step(std::optional<HandshakeState>& state, const Packet& in,
                                      const ServerStepContext& ctx) {
  HandshakeOutput out;

  if (!state) {
    if (in.type != PacketType::Initial) return out;
    const Frame* ch_frame = in.find(FrameType::ClientHello);
    if (ch_frame == nullptr || in.scid.empty()) return out;
    ClientHello ch;
    try {
      ch = parse_client_hello(*ch_frame);
    } catch (const DecodeError&) {
      return out;
    }
    if (ctx.policy.retry) {
      if (in.token.empty()) {
        out.outgoing.push_back(issue_retry(in, ctx.observed_source, ctx.secret, ctx.now_ms));
        return out;
      }
      if (validate_token(in.token, ctx.observed_source, ctx.secret, ctx.now_ms, ctx.policy.freshness_ms) !=
          TokenVerdict::Accept)
        return out;
    }

    HandshakeState s;
    s.role = Role::Server;
    s.server_name = ch.server_name;
    s.original_dcid = in.dcid;
    s.peer_cid = in.scid;
    s.local_cid = random_connection_id(ctx.random);
    s.client_random = ch.client_random;
    s.server_random = random32(ctx.random);
    s.client_hello = encode_frame(*ch_frame);

    const auto sh = Frame::server_hello(s.server_random);
    s.transcript = s.client_hello;
    append(s.transcript, encode_frame(sh));
    const auto shared = derive_shared_secret(s.client_random, s.server_random);
    // The key is derived transiently to MAC our FIN; it is only retained once
    // the client's FIN proves the client holds it too.
    const auto fin = Frame::fin(fin_mac(derive_forward_secure_key(shared), s.transcript));
    append(s.transcript, encode_frame(fin));
    s.handshake_secret = shared;
    s.phase = Phase::HandshakeKeysReady;

    Packet reply;
    reply.type = PacketType::Handshake;
    reply.dcid = s.peer_cid;
    reply.scid = s.local_cid;
    reply.packet_number = s.take_packet_number();
    reply.frames = {sh, fin};
    s.server_flight = reply;
    out.outgoing.push_back(std::move(reply));
    state = std::move(s);
    return out;
  }

  HandshakeState& s = *state;
  if (s.phase == Phase::Closed) return out;

  if (in.type == PacketType::Initial) {
    if (s.phase == Phase::HandshakeKeysReady && s.server_flight) {
      Packet again = *s.server_flight;
      again.packet_number = s.take_packet_number();
      out.outgoing.push_back(std::move(again));
    }
    return out;
  }

  if (in.type == PacketType::Handshake && s.phase == Phase::HandshakeKeysReady) {
    const Frame* fin = in.find(FrameType::Fin);
    if (fin == nullptr) return out;
    std::array<std::uint8_t, kMacSize> mac;
    try {
      mac = parse_fin(*fin);
    } catch (const DecodeError&) {
      return out;
    }
    const auto key = derive_forward_secure_key(*s.handshake_secret);
    if (!constant_time_equal(fin_mac(key, s.transcript), mac)) {
      close(s, CloseReason::HandshakeAuthFailure, out);
      return out;
    }
    s.forward_secure_key = key;
    s.phase = Phase::ForwardSecure;
    s.server_flight.reset();
    out.events.push_back(HandshakeEvent::HandshakeComplete);
  }
  return out;
}

}  // namespace qsk::quic
