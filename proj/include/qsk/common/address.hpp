#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace qsk {

class IpAddress {
public:
  enum class Family : std::uint8_t { V4, V6 };

  IpAddress() = default;  // 0.0.0.0

  static IpAddress v4(std::array<std::uint8_t, 4> octets);
  static IpAddress v6(std::array<std::uint8_t, 16> octets);
  static IpAddress any_v4() { return IpAddress{}; }
  static std::optional<IpAddress> parse(std::string_view text);

  Family family() const noexcept { return family_; }
  bool is_v4() const noexcept { return family_ == Family::V4; }
  bool is_unspecified() const noexcept;

  // 4 significant bytes for V4, 16 for V6.
  std::span<const std::uint8_t> octets() const noexcept {
    return {raw_.data(), is_v4() ? 4u : 16u};
  }
  // ::ffff:a.b.c.d for V4, identity for V6.
  std::array<std::uint8_t, 16> mapped_v6() const noexcept;

  std::string to_string() const;

  friend auto operator<=>(const IpAddress&, const IpAddress&) = default;

private:
  Family family_ = Family::V4;
  std::array<std::uint8_t, 16> raw_{};
};

struct SocketAddress {
  IpAddress ip;
  std::uint16_t port = 0;

  // "1.2.3.4:80" or "[::1]:80"
  static std::optional<SocketAddress> parse(std::string_view text);
  std::string to_string() const;

  friend auto operator<=>(const SocketAddress&, const SocketAddress&) = default;
};

}  // namespace qsk

template <>
struct std::hash<qsk::IpAddress> {
  std::size_t operator()(const qsk::IpAddress& a) const noexcept {
    std::size_t h = a.is_v4() ? 0x9e37u : 0x7f4au;
    for (auto b : a.octets()) h = h * 131 + b;
    return h;
  }
};

template <>
struct std::hash<qsk::SocketAddress> {
  std::size_t operator()(const qsk::SocketAddress& a) const noexcept {
    return std::hash<qsk::IpAddress>{}(a.ip) * 65599 + a.port;
  }
};
