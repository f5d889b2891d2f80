#include "qsk/quic/wire.hpp"

#include <algorithm>

namespace qsk::quic {

namespace {

bool has_token(PacketType t) { return t == PacketType::Initial || t == PacketType::Retry; }

PacketType packet_type(std::uint8_t raw) {
  if (raw < 0x01 || raw > 0x04) throw DecodeError("type", "unknown packet type " + std::to_string(raw));
  return static_cast<PacketType>(raw);
}

FrameType frame_type(std::uint8_t raw) {
  if (raw < 0x01 || raw > 0x08) throw DecodeError("frame.type", "unknown frame type " + std::to_string(raw));
  return static_cast<FrameType>(raw);
}

ConnectionId read_cid(ByteReader& r, const char* len_field, const char* field) {
  const auto len = r.u8(len_field);
  if (len != 0 && len != ConnectionId::kLength)
    throw DecodeError(len_field, "connection id length must be 0 or 8");
  return ConnectionId::from(r.take(len, field));
}

void expect_size(const Frame& f, std::size_t n, const char* field) {
  if (f.value.size() != n) throw DecodeError(field, "bad frame length");
}

template <std::size_t N>
std::array<std::uint8_t, N> to_array(ByteView v) {
  std::array<std::uint8_t, N> out{};
  std::copy_n(v.begin(), N, out.begin());
  return out;
}

PacketHeader read_header(ByteReader& r) {
  PacketHeader h;
  h.type = packet_type(r.u8("type"));
  auto version = r.take(4, "version");
  if (!std::equal(version.begin(), version.end(), kVersion.begin()))
    throw DecodeError("version", "version mismatch");
  h.dcid = read_cid(r, "dcid_len", "dcid");
  h.scid = read_cid(r, "scid_len", "scid");
  if (has_token(h.type)) {
    h.token_offset = r.position();
    const auto len = r.u16("token_len");
    auto tok = r.take(len, "token");
    h.token.assign(tok.begin(), tok.end());
  }
  h.body_offset = r.position();
  return h;
}

}  // namespace

ConnectionId ConnectionId::from(ByteView bytes) {
  if (bytes.empty()) return {};
  if (bytes.size() != kLength) throw DecodeError("cid", "connection id length must be 0 or 8");
  return ConnectionId(to_array<kLength>(bytes));
}

std::string_view to_string(PacketType t) {
  switch (t) {
    case PacketType::Initial: return "INITIAL";
    case PacketType::Retry: return "RETRY";
    case PacketType::Handshake: return "HANDSHAKE";
    case PacketType::OneRtt: return "ONE_RTT";
  }
  return "?";
}

std::string_view to_string(FrameType t) {
  switch (t) {
    case FrameType::ClientHello: return "CLIENTHELLO";
    case FrameType::ServerHello: return "SERVERHELLO";
    case FrameType::Fin: return "FIN";
    case FrameType::PathChallenge: return "PATH_CHALLENGE";
    case FrameType::PathResponse: return "PATH_RESPONSE";
    case FrameType::Ack: return "ACK";
    case FrameType::Ping: return "PING";
    case FrameType::AppData: return "APPDATA";
  }
  return "?";
}

Frame Frame::client_hello(const Random32& client_random, std::string_view server_name) {
  if (server_name.size() > 255) throw EncodeError("quic: server name longer than 255 bytes");
  ByteWriter w;
  w.bytes(client_random);
  w.u8(static_cast<std::uint8_t>(server_name.size()));
  w.text(server_name);
  return {FrameType::ClientHello, std::move(w).take()};
}

Frame Frame::server_hello(const Random32& server_random) {
  return {FrameType::ServerHello, Bytes(server_random.begin(), server_random.end())};
}

Frame Frame::fin(const std::array<std::uint8_t, kMacSize>& mac) {
  return {FrameType::Fin, Bytes(mac.begin(), mac.end())};
}

Frame Frame::path_challenge(const PathData& data) {
  return {FrameType::PathChallenge, Bytes(data.begin(), data.end())};
}

Frame Frame::path_response(const PathData& data) {
  return {FrameType::PathResponse, Bytes(data.begin(), data.end())};
}

Frame Frame::ack(std::uint32_t largest) {
  ByteWriter w;
  w.u32(largest);
  return {FrameType::Ack, std::move(w).take()};
}

ClientHello parse_client_hello(const Frame& f) {
  if (f.type != FrameType::ClientHello) throw DecodeError("frame.type", "not a CLIENTHELLO");
  ByteReader r(f.value);
  ClientHello ch;
  ch.client_random = to_array<kRandomSize>(r.take(kRandomSize, "client_random"));
  const auto len = r.u8("server_name_len");
  auto name = r.take(len, "server_name");
  ch.server_name.assign(name.begin(), name.end());
  if (!r.empty()) throw DecodeError("clienthello", "trailing bytes");
  return ch;
}

Random32 parse_server_hello(const Frame& f) {
  expect_size(f, kRandomSize, "server_random");
  return to_array<kRandomSize>(f.value);
}

std::array<std::uint8_t, kMacSize> parse_fin(const Frame& f) {
  expect_size(f, kMacSize, "fin.mac");
  return to_array<kMacSize>(f.value);
}

PathData parse_path_data(const Frame& f) {
  expect_size(f, kPathDataSize, "path.data");
  return to_array<kPathDataSize>(f.value);
}

std::uint32_t parse_ack(const Frame& f) {
  expect_size(f, 4, "ack.largest");
  ByteReader r(f.value);
  return r.u32("ack.largest");
}

const Frame* Packet::find(FrameType t) const {
  auto it = std::find_if(frames.begin(), frames.end(), [t](const Frame& f) { return f.type == t; });
  return it == frames.end() ? nullptr : &*it;
}

void encode_frame(ByteWriter& w, const Frame& f) {
  if (f.value.size() > 0xffff) throw EncodeError("quic: frame value too large");
  w.u8(static_cast<std::uint8_t>(f.type));
  w.u16(static_cast<std::uint16_t>(f.value.size()));
  w.bytes(f.value);
}

Bytes encode_frame(const Frame& f) {
  ByteWriter w;
  encode_frame(w, f);
  return std::move(w).take();
}

Bytes encode_packet(const Packet& p) {
  if (p.type == PacketType::Retry && (!p.frames.empty() || p.token.empty()))
    throw EncodeError("quic: RETRY must carry a token and no frames");
  if (!has_token(p.type) && !p.token.empty()) throw EncodeError("quic: token on non-INITIAL packet");
  if (p.token.size() > 0xffff) throw EncodeError("quic: token too large");
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(p.type));
  w.bytes(kVersion);
  w.u8(static_cast<std::uint8_t>(p.dcid.size()));
  w.bytes(p.dcid.bytes());
  w.u8(static_cast<std::uint8_t>(p.scid.size()));
  w.bytes(p.scid.bytes());
  if (has_token(p.type)) {
    w.u16(static_cast<std::uint16_t>(p.token.size()));
    w.bytes(p.token);
  }
  w.u32(p.packet_number);
  for (const auto& f : p.frames) encode_frame(w, f);
  return std::move(w).take();
}

Packet decode_packet(ByteView datagram) {
  ByteReader r(datagram);
  auto h = read_header(r);
  Packet p;
  p.type = h.type;
  p.dcid = h.dcid;
  p.scid = h.scid;
  p.token = std::move(h.token);
  p.packet_number = r.u32("packet_number");
  while (!r.empty()) {
    Frame f;
    f.type = frame_type(r.u8("frame.type"));
    const auto len = r.u16("frame.length");
    auto v = r.take(len, "frame.value");
    f.value.assign(v.begin(), v.end());
    p.frames.push_back(std::move(f));
  }
  if (p.type == PacketType::Retry) {
    if (p.token.empty()) throw DecodeError("token", "RETRY without token");
    if (!p.frames.empty()) throw DecodeError("frames", "RETRY must not carry frames");
  }
  return p;
}

PacketHeader peek_header(ByteView datagram) {
  ByteReader r(datagram);
  auto h = read_header(r);
  r.u32("packet_number");
  return h;
}

Bytes with_token(ByteView initial_datagram, ByteView token) {
  auto h = peek_header(initial_datagram);
  if (h.type != PacketType::Initial) throw EncodeError("quic: token replacement needs an INITIAL");
  if (token.size() > 0xffff) throw EncodeError("quic: token too large");
  ByteWriter w(initial_datagram.size() + token.size());
  w.bytes(initial_datagram.first(h.token_offset));
  w.u16(static_cast<std::uint16_t>(token.size()));
  w.bytes(token);
  w.bytes(initial_datagram.subspan(h.body_offset));
  return std::move(w).take();
}

}  // namespace qsk::quic
