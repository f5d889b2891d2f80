#pragma once

// RFC 1928 UDP request header:
//
// +----+------+------+----------+----------+----------+
// |RSV | FRAG | ATYP | DST.ADDR | DST.PORT |   DATA   |
// +----+------+------+----------+----------+----------+
// | 2  |  1   |  1   | Variable |    2     | Variable |
// +----+------+------+----------+----------+----------+

#include <cstdint>
#include <string>

#include "qsk/common/address.hpp"
#include "qsk/common/bytes.hpp"

namespace qsk::socks {

inline constexpr std::uint8_t kVersion = 0x05;
inline constexpr std::size_t kMaxDomainLength = 255;

enum class AddressType : std::uint8_t {
  IPv4 = 0x01,
  Domain = 0x03,
  IPv6 = 0x04,
};

class SocksAddress {
public:
  SocksAddress() = default;

  static SocksAddress from_ip(const IpAddress& ip, std::uint16_t port);
  static SocksAddress from_socket(const SocketAddress& addr) { return from_ip(addr.ip, addr.port); }
  // Throws EncodeError for empty, over-long or NUL-containing names.
  static SocksAddress from_domain(std::string name, std::uint16_t port);

  AddressType kind() const noexcept { return kind_; }
  bool is_domain() const noexcept { return kind_ == AddressType::Domain; }
  const IpAddress& ip() const noexcept { return ip_; }
  const std::string& domain() const noexcept { return domain_; }
  std::uint16_t port() const noexcept { return port_; }

  // Only meaningful for IPv4/IPv6 kinds.
  SocketAddress socket_address() const { return {ip_, port_}; }

  // ATYP + ADDR + PORT
  std::size_t encoded_size() const noexcept;
  void encode(ByteWriter& w) const;
  static SocksAddress decode(ByteReader& r);

  std::string to_string() const;

  friend bool operator==(const SocksAddress&, const SocksAddress&) = default;

private:
  AddressType kind_ = AddressType::IPv4;
  IpAddress ip_;
  std::string domain_;
  std::uint16_t port_ = 0;
};

struct SocksUdpHeader {
  SocksAddress dst;

  std::size_t size() const noexcept { return 3 + dst.encoded_size(); }
  friend bool operator==(const SocksUdpHeader&, const SocksUdpHeader&) = default;
};

struct DecodedDatagram {
  SocksUdpHeader header;
  ByteView payload;  // aliases the decoded buffer
};

Bytes encode_udp_header(const SocksAddress& dst);
// Header followed by payload.
Bytes encapsulate(const SocksAddress& dst, ByteView payload);
// Throws DecodeError naming the offending field ("rsv", "frag", "atyp", ...).
DecodedDatagram decode_udp_header(ByteView datagram);

}  // namespace qsk::socks
