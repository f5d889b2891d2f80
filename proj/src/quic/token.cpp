#include "qsk/quic/token.hpp"

#include <algorithm>

namespace qsk::quic {

ServerSecret ServerSecret::generate(const RandomFn& random) {
  ServerSecret s;
  random(s.key);
  return s;
}

RetryToken RetryToken::issue(const SocketAddress& source, std::uint64_t now_ms, const ServerSecret& secret) {
  RetryToken t;
  t.claimed_ip = source.ip.mapped_v6();
  t.claimed_port = source.port;
  t.issued_at_ms = now_ms;
  t.mac = hmac_sha256(secret.key, t.mac_input());
  return t;
}

Bytes RetryToken::mac_input() const {
  ByteWriter w(kMacInputSize);
  w.bytes(claimed_ip);
  w.u16(claimed_port);
  w.u64(issued_at_ms);
  return std::move(w).take();
}

Bytes RetryToken::encode() const {
  ByteWriter w(kEncodedSize);
  w.bytes(mac_input());
  w.bytes(mac);
  return std::move(w).take();
}

RetryToken RetryToken::decode(ByteView bytes) {
  if (bytes.size() != kEncodedSize) throw DecodeError("token", "bad token length");
  ByteReader r(bytes);
  RetryToken t;
  auto ip = r.take(16, "token.claimed_ip");
  std::copy(ip.begin(), ip.end(), t.claimed_ip.begin());
  t.claimed_port = r.u16("token.claimed_port");
  t.issued_at_ms = r.u64("token.issued_at_ms");
  auto mac = r.take(kMacSize, "token.mac");
  std::copy(mac.begin(), mac.end(), t.mac.begin());
  return t;
}

std::string_view to_string(TokenVerdict v) {
  switch (v) {
    case TokenVerdict::Accept: return "accept";
    case TokenVerdict::BadMac: return "bad-mac";
    case TokenVerdict::AddressMismatch: return "address-mismatch";
    case TokenVerdict::Stale: return "stale";
  }
  return "?";
}

Packet issue_retry(const Packet& initial, const SocketAddress& observed_source, const ServerSecret& secret,
                   std::uint64_t now_ms) {
  Packet retry;
  retry.type = PacketType::Retry;
  retry.dcid = initial.scid;
  retry.scid = initial.dcid;
  retry.token = RetryToken::issue(observed_source, now_ms, secret).encode();
  retry.packet_number = 0;
  return retry;
}

TokenVerdict validate_token(ByteView token, const SocketAddress& observed_source, const ServerSecret& secret,
                            std::uint64_t now_ms, std::uint64_t freshness_ms) {
  RetryToken t;
  try {
    t = RetryToken::decode(token);
  } catch (const DecodeError&) {
    return TokenVerdict::BadMac;
  }
  const auto expected = hmac_sha256(secret.key, t.mac_input());
  if (!constant_time_equal(expected, t.mac)) return TokenVerdict::BadMac;
  if (t.claimed_ip != observed_source.ip.mapped_v6() || t.claimed_port != observed_source.port)
    return TokenVerdict::AddressMismatch;
  if (now_ms < t.issued_at_ms || now_ms - t.issued_at_ms > freshness_ms) return TokenVerdict::Stale;
  return TokenVerdict::Accept;
}

}  // namespace qsk::quic
