#pragma once

// Wire format of the miniature QUIC-like protocol. One packet per UDP datagram:
//
//   type(1) version(4)="QSK1" dcid_len(1) dcid scid_len(1) scid
//   [token_len(2) token]            INITIAL and RETRY only
//   packet_number(4) frames...
//
// Frames are TLV: type(1) length(2, big-endian) value.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsk/common/bytes.hpp"

namespace qsk::quic {

inline constexpr std::array<std::uint8_t, 4> kVersion{0x51, 0x53, 0x4B, 0x31};
inline constexpr std::size_t kMaxDatagramSize = 1350;
inline constexpr std::size_t kRandomSize = 32;
inline constexpr std::size_t kMacSize = 32;
inline constexpr std::size_t kPathDataSize = 8;

using Random32 = std::array<std::uint8_t, kRandomSize>;
using PathData = std::array<std::uint8_t, kPathDataSize>;

class ConnectionId {
public:
  static constexpr std::size_t kLength = 8;

  ConnectionId() = default;  // zero-length
  explicit ConnectionId(std::array<std::uint8_t, kLength> bytes) : bytes_(bytes), present_(true) {}
  // Accepts 0 or 8 bytes, anything else is a DecodeError.
  static ConnectionId from(ByteView bytes);

  bool empty() const noexcept { return !present_; }
  std::size_t size() const noexcept { return present_ ? kLength : 0; }
  ByteView bytes() const noexcept { return {bytes_.data(), size()}; }
  std::string to_hex() const { return qsk::to_hex(bytes()); }

  friend bool operator==(const ConnectionId&, const ConnectionId&) = default;
  friend auto operator<=>(const ConnectionId&, const ConnectionId&) = default;

private:
  std::array<std::uint8_t, kLength> bytes_{};
  bool present_ = false;
};

enum class PacketType : std::uint8_t {
  Initial = 0x01,
  Retry = 0x02,
  Handshake = 0x03,
  OneRtt = 0x04,
};

enum class FrameType : std::uint8_t {
  ClientHello = 0x01,
  ServerHello = 0x02,
  Fin = 0x03,
  PathChallenge = 0x04,
  PathResponse = 0x05,
  Ack = 0x06,
  Ping = 0x07,
  AppData = 0x08,
};

std::string_view to_string(PacketType t);
std::string_view to_string(FrameType t);

struct Frame {
  FrameType type = FrameType::Ping;
  Bytes value;

  static Frame client_hello(const Random32& client_random, std::string_view server_name);
  static Frame server_hello(const Random32& server_random);
  static Frame fin(const std::array<std::uint8_t, kMacSize>& mac);
  static Frame path_challenge(const PathData& data);
  static Frame path_response(const PathData& data);
  static Frame ack(std::uint32_t largest);
  static Frame ping() { return {FrameType::Ping, {}}; }
  static Frame app_data(ByteView data) { return {FrameType::AppData, Bytes(data.begin(), data.end())}; }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct ClientHello {
  Random32 client_random{};
  std::string server_name;
};

// Typed views over frame values; throw DecodeError on malformed values.
ClientHello parse_client_hello(const Frame& f);
Random32 parse_server_hello(const Frame& f);
std::array<std::uint8_t, kMacSize> parse_fin(const Frame& f);
PathData parse_path_data(const Frame& f);
std::uint32_t parse_ack(const Frame& f);

struct Packet {
  PacketType type = PacketType::Initial;
  ConnectionId dcid;
  ConnectionId scid;
  Bytes token;  // INITIAL and RETRY only
  std::uint32_t packet_number = 0;
  std::vector<Frame> frames;

  const Frame* find(FrameType t) const;
  friend bool operator==(const Packet&, const Packet&) = default;
};

void encode_frame(ByteWriter& w, const Frame& f);
Bytes encode_frame(const Frame& f);
Bytes encode_packet(const Packet& p);
// Errors: "version" (mismatch), "dcid_len"/"scid_len" (bad cid length),
// truncation of any field, unknown frame type, frames in RETRY, empty RETRY token.
Packet decode_packet(ByteView datagram);

// Header-only view for middleboxes that must not parse frames.
struct PacketHeader {
  PacketType type = PacketType::Initial;
  ConnectionId dcid;
  ConnectionId scid;
  Bytes token;
  std::size_t token_offset = 0;  // start of the token_len field, 0 if none
  std::size_t body_offset = 0;   // start of the packet number
};
PacketHeader peek_header(ByteView datagram);
// Copy of an INITIAL datagram with its token replaced; frames untouched.
Bytes with_token(ByteView initial_datagram, ByteView token);

}  // namespace qsk::quic

template <>
struct std::hash<qsk::quic::ConnectionId> {
  std::size_t operator()(const qsk::quic::ConnectionId& c) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto b : c.bytes()) h = (h ^ b) * 1099511628211ull;
    return h;
  }
};
