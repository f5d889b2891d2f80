#pragma once

// Stateless retry tokens.
//
//   claimed_ip(16, IPv4-mapped) claimed_port(2) issued_at_ms(8) mac(32)
//
// mac = HMAC-SHA256(server secret, first 26 bytes). Clients and proxies only
// ever echo the token bytes; only the issuing server parses them.

#include <array>
#include <cstdint>
#include <string_view>

#include "qsk/common/address.hpp"
#include "qsk/common/bytes.hpp"
#include "qsk/quic/crypto.hpp"
#include "qsk/quic/wire.hpp"

namespace qsk::quic {

inline constexpr std::uint64_t kDefaultTokenFreshnessMs = 30'000;

struct ServerSecret {
  std::array<std::uint8_t, 32> key{};
  static ServerSecret generate(const RandomFn& random = system_random());
};

struct RetryToken {
  static constexpr std::size_t kMacInputSize = 16 + 2 + 8;
  static constexpr std::size_t kEncodedSize = kMacInputSize + kMacSize;

  std::array<std::uint8_t, 16> claimed_ip{};
  std::uint16_t claimed_port = 0;
  std::uint64_t issued_at_ms = 0;
  std::array<std::uint8_t, kMacSize> mac{};

  static RetryToken issue(const SocketAddress& source, std::uint64_t now_ms, const ServerSecret& secret);
  Bytes mac_input() const;
  Bytes encode() const;
  static RetryToken decode(ByteView bytes);  // throws DecodeError
};

enum class TokenVerdict { Accept, BadMac, AddressMismatch, Stale };
std::string_view to_string(TokenVerdict v);

// RETRY answering a tokenless INITIAL: dcid = initial.scid, scid = initial.dcid.
Packet issue_retry(const Packet& initial, const SocketAddress& observed_source, const ServerSecret& secret,
                   std::uint64_t now_ms);

// Accept iff the MAC verifies, the claimed address:port equals observed_source
// and 0 <= now_ms - issued_at_ms <= freshness_ms. Malformed tokens are BadMac.
TokenVerdict validate_token(ByteView token, const SocketAddress& observed_source, const ServerSecret& secret,
                            std::uint64_t now_ms, std::uint64_t freshness_ms = kDefaultTokenFreshnessMs);

}  // namespace qsk::quic
