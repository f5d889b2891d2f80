#pragma once

// Sans-I/O state machines for the SOCKS5 control channel, restricted to
// NO-AUTH method selection and the UDP ASSOCIATE command. Both sides are fed
// raw stream bytes as they arrive and hand back the bytes to write.

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "qsk/common/address.hpp"
#include "qsk/common/bytes.hpp"
#include "qsk/common/env.hpp"
#include "qsk/socks/codec.hpp"

namespace qsk::socks {

inline constexpr std::uint8_t kMethodNoAuth = 0x00;
inline constexpr std::uint8_t kMethodRejected = 0xFF;

enum class Command : std::uint8_t {
  Connect = 0x01,
  Bind = 0x02,
  UdpAssociate = 0x03,
};

enum class ReplyCode : std::uint8_t {
  Succeeded = 0x00,
  GeneralFailure = 0x01,
  CommandNotSupported = 0x07,
  AddressTypeNotSupported = 0x08,
};

enum class NegotiationError {
  VersionMismatch,
  MethodRejected,       // server answered 0xFF / client offered no 0x00
  UnsupportedMethod,    // server picked something other than NO-AUTH
  CommandNotSupported,
  AddressTypeNotSupported,
  ReplyFailure,         // non-zero reply code
  StreamClosed,
};

std::string_view to_string(NegotiationError e);

struct NegotiationStep {
  Bytes to_send;
  bool finished = false;  // success or failure; check error()
};

class ClientNegotiator {
public:
  // declared: the client's UDP source as sent in the ASSOCIATE request;
  // all-zeros by default (NAT-friendly "unknown").
  explicit ClientNegotiator(SocksAddress declared = SocksAddress::from_ip(IpAddress::any_v4(), 0));

  Bytes start();
  NegotiationStep feed(ByteView data);
  void on_stream_closed();

  bool done() const noexcept { return state_ == State::Done; }
  const std::optional<NegotiationError>& error() const noexcept { return error_; }
  std::optional<std::uint8_t> reply_code() const noexcept { return reply_code_; }
  // BND.ADDR/BND.PORT from a successful reply.
  const SocketAddress& bound_address() const noexcept { return bound_; }

private:
  enum class State { Idle, AwaitMethod, AwaitReply, Done, Failed };
  NegotiationStep fail(NegotiationError e);

  State state_ = State::Idle;
  SocksAddress declared_;
  Bytes buf_;
  std::optional<NegotiationError> error_;
  std::optional<std::uint8_t> reply_code_;
  SocketAddress bound_;
};

class ServerNegotiator {
public:
  // Called once an ASSOCIATE request is accepted; returns the relay address to
  // advertise, or nullopt if no relay could be allocated.
  using RelayAllocator = std::function<std::optional<SocketAddress>()>;

  explicit ServerNegotiator(RelayAllocator allocate_relay);

  NegotiationStep feed(ByteView data);

  bool associated() const noexcept { return state_ == State::Associated; }
  const std::optional<NegotiationError>& error() const noexcept { return error_; }
  const std::optional<SocksAddress>& declared_client() const noexcept { return declared_; }

private:
  enum class State { AwaitGreeting, AwaitRequest, Associated, Failed };
  NegotiationStep fail(NegotiationError e, Bytes reply = {});

  State state_ = State::AwaitGreeting;
  RelayAllocator allocate_relay_;
  Bytes buf_;
  std::optional<NegotiationError> error_;
  std::optional<SocksAddress> declared_;
};

Bytes encode_reply(ReplyCode code, const SocksAddress& bound);

// Client-side association handle. Shares a liveness flag with whoever owns
// the control stream; once the stream closes every copy reports !valid().
class UdpAssociation {
public:
  UdpAssociation() = default;
  UdpAssociation(SocketAddress relay, StreamId control)
      : relay_(relay), control_(control), alive_(std::make_shared<bool>(true)) {}

  const SocketAddress& relay() const noexcept { return relay_; }
  StreamId control_stream() const noexcept { return control_; }
  bool valid() const noexcept { return alive_ && *alive_; }
  void invalidate() noexcept {
    if (alive_) *alive_ = false;
  }

private:
  SocketAddress relay_;
  StreamId control_ = 0;
  std::shared_ptr<bool> alive_;
};

}  // namespace qsk::socks
