#include "qsk/socks/codec.hpp"

#include <algorithm>

namespace qsk::socks {

SocksAddress SocksAddress::from_ip(const IpAddress& ip, std::uint16_t port) {
  SocksAddress a;
  a.kind_ = ip.is_v4() ? AddressType::IPv4 : AddressType::IPv6;
  a.ip_ = ip;
  a.port_ = port;
  return a;
}

SocksAddress SocksAddress::from_domain(std::string name, std::uint16_t port) {
  if (name.empty()) throw EncodeError("socks: empty domain name");
  if (name.size() > kMaxDomainLength) throw EncodeError("socks: domain name longer than 255 bytes");
  if (name.find('\0') != std::string::npos) throw EncodeError("socks: domain name contains NUL");
  SocksAddress a;
  a.kind_ = AddressType::Domain;
  a.domain_ = std::move(name);
  a.port_ = port;
  return a;
}

std::size_t SocksAddress::encoded_size() const noexcept {
  switch (kind_) {
    case AddressType::IPv4: return 1 + 4 + 2;
    case AddressType::IPv6: return 1 + 16 + 2;
    case AddressType::Domain: return 1 + 1 + domain_.size() + 2;
  }
  return 0;
}

void SocksAddress::encode(ByteWriter& w) const {
  w.u8(static_cast<std::uint8_t>(kind_));
  if (kind_ == AddressType::Domain) {
    if (domain_.empty() || domain_.size() > kMaxDomainLength)
      throw EncodeError("socks: invalid domain length");
    w.u8(static_cast<std::uint8_t>(domain_.size()));
    w.text(domain_);
  } else {
    w.bytes(ip_.octets());
  }
  w.u16(port_);
}

SocksAddress SocksAddress::decode(ByteReader& r) {
  const auto atyp = r.u8("atyp");
  SocksAddress a;
  switch (atyp) {
    case static_cast<std::uint8_t>(AddressType::IPv4): {
      auto v = r.take(4, "dst.addr");
      a.kind_ = AddressType::IPv4;
      a.ip_ = IpAddress::v4({v[0], v[1], v[2], v[3]});
      break;
    }
    case static_cast<std::uint8_t>(AddressType::IPv6): {
      auto v = r.take(16, "dst.addr");
      std::array<std::uint8_t, 16> raw{};
      std::copy(v.begin(), v.end(), raw.begin());
      a.kind_ = AddressType::IPv6;
      a.ip_ = IpAddress::v6(raw);
      break;
    }
    case static_cast<std::uint8_t>(AddressType::Domain): {
      const auto len = r.u8("dst.addr.length");
      if (len == 0) throw DecodeError("dst.addr", "empty domain name");
      auto v = r.take(len, "dst.addr");
      if (std::find(v.begin(), v.end(), 0) != v.end())
        throw DecodeError("dst.addr", "domain name contains NUL");
      a.kind_ = AddressType::Domain;
      a.domain_.assign(v.begin(), v.end());
      break;
    }
    default:
      throw DecodeError("atyp", "unknown address type " + std::to_string(atyp));
  }
  a.port_ = r.u16("dst.port");
  return a;
}

std::string SocksAddress::to_string() const {
  if (kind_ == AddressType::Domain) return domain_ + ":" + std::to_string(port_);
  return socket_address().to_string();
}

Bytes encode_udp_header(const SocksAddress& dst) {
  ByteWriter w(3 + dst.encoded_size());
  w.u16(0x0000);  // RSV
  w.u8(0x00);     // FRAG
  dst.encode(w);
  return std::move(w).take();
}

Bytes encapsulate(const SocksAddress& dst, ByteView payload) {
  ByteWriter w(3 + dst.encoded_size() + payload.size());
  w.u16(0x0000);
  w.u8(0x00);
  dst.encode(w);
  w.bytes(payload);
  return std::move(w).take();
}

DecodedDatagram decode_udp_header(ByteView datagram) {
  ByteReader r(datagram);
  if (r.u16("rsv") != 0) throw DecodeError("rsv", "reserved bytes must be zero");
  if (r.u8("frag") != 0) throw DecodeError("frag", "fragmentation unsupported");
  DecodedDatagram out;
  out.header.dst = SocksAddress::decode(r);
  out.payload = r.rest();
  return out;
}

}  // namespace qsk::socks
