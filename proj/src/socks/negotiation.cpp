#include "qsk/socks/negotiation.hpp"

#include <algorithm>

namespace qsk::socks {

namespace {

// Length of ATYP..PORT starting at offset, nullopt while incomplete.
// Unknown ATYP yields 0.
std::optional<std::size_t> address_length(const Bytes& buf, std::size_t offset) {
  if (buf.size() <= offset) return std::nullopt;
  std::size_t len = 0;
  switch (buf[offset]) {
    case static_cast<std::uint8_t>(AddressType::IPv4): len = 1 + 4 + 2; break;
    case static_cast<std::uint8_t>(AddressType::IPv6): len = 1 + 16 + 2; break;
    case static_cast<std::uint8_t>(AddressType::Domain):
      if (buf.size() <= offset + 1) return std::nullopt;
      len = 1 + 1 + buf[offset + 1] + 2;
      break;
    default: return 0;
  }
  if (buf.size() < offset + len) return std::nullopt;
  return len;
}

void consume(Bytes& buf, std::size_t n) { buf.erase(buf.begin(), buf.begin() + static_cast<long>(n)); }

}  // namespace

std::string_view to_string(NegotiationError e) {
  switch (e) {
    case NegotiationError::VersionMismatch: return "version-mismatch";
    case NegotiationError::MethodRejected: return "method-rejected";
    case NegotiationError::UnsupportedMethod: return "unsupported-method";
    case NegotiationError::CommandNotSupported: return "command-not-supported";
    case NegotiationError::AddressTypeNotSupported: return "address-type-not-supported";
    case NegotiationError::ReplyFailure: return "reply-failure";
    case NegotiationError::StreamClosed: return "stream-closed";
  }
  return "unknown";
}

Bytes encode_reply(ReplyCode code, const SocksAddress& bound) {
  ByteWriter w;
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(code));
  w.u8(0x00);
  bound.encode(w);
  return std::move(w).take();
}

// ---- client ----------------------------------------------------------------

ClientNegotiator::ClientNegotiator(SocksAddress declared) : declared_(std::move(declared)) {}

Bytes ClientNegotiator::start() {
  state_ = State::AwaitMethod;
  return {kVersion, 0x01, kMethodNoAuth};
}

NegotiationStep ClientNegotiator::fail(NegotiationError e) {
  state_ = State::Failed;
  error_ = e;
  return {{}, true};
}

NegotiationStep ClientNegotiator::feed(ByteView data) {
  if (state_ == State::Done || state_ == State::Failed) return {{}, true};
  buf_.insert(buf_.end(), data.begin(), data.end());
  NegotiationStep step;

  if (state_ == State::AwaitMethod) {
    if (buf_.size() < 2) return step;
    const auto ver = buf_[0];
    const auto method = buf_[1];
    consume(buf_, 2);
    if (ver != kVersion) return fail(NegotiationError::VersionMismatch);
    if (method == kMethodRejected) return fail(NegotiationError::MethodRejected);
    if (method != kMethodNoAuth) return fail(NegotiationError::UnsupportedMethod);
    ByteWriter w;
    w.u8(kVersion);
    w.u8(static_cast<std::uint8_t>(Command::UdpAssociate));
    w.u8(0x00);
    declared_.encode(w);
    step.to_send = std::move(w).take();
    state_ = State::AwaitReply;
  }

  if (state_ == State::AwaitReply) {
    if (buf_.size() < 3) return step;
    if (buf_[0] != kVersion) return fail(NegotiationError::VersionMismatch);
    if (buf_[1] != 0x00) {
      reply_code_ = buf_[1];
      return fail(NegotiationError::ReplyFailure);
    }
    auto len = address_length(buf_, 3);
    if (!len) return step;
    if (*len == 0) return fail(NegotiationError::AddressTypeNotSupported);
    ByteReader r(ByteView(buf_).subspan(3, *len));
    SocksAddress bound;
    try {
      bound = SocksAddress::decode(r);
    } catch (const DecodeError&) {
      return fail(NegotiationError::AddressTypeNotSupported);
    }
    consume(buf_, 3 + *len);
    if (bound.is_domain()) return fail(NegotiationError::AddressTypeNotSupported);
    reply_code_ = 0;
    bound_ = bound.socket_address();
    state_ = State::Done;
    step.finished = true;
  }
  return step;
}

void ClientNegotiator::on_stream_closed() {
  if (state_ != State::Done && state_ != State::Failed) fail(NegotiationError::StreamClosed);
}

// ---- server ----------------------------------------------------------------

ServerNegotiator::ServerNegotiator(RelayAllocator allocate_relay)
    : allocate_relay_(std::move(allocate_relay)) {}

NegotiationStep ServerNegotiator::fail(NegotiationError e, Bytes reply) {
  state_ = State::Failed;
  error_ = e;
  return {std::move(reply), true};
}

NegotiationStep ServerNegotiator::feed(ByteView data) {
  if (state_ == State::Associated || state_ == State::Failed) return {{}, true};
  buf_.insert(buf_.end(), data.begin(), data.end());
  NegotiationStep step;
  const auto zero = SocksAddress::from_ip(IpAddress::any_v4(), 0);

  if (state_ == State::AwaitGreeting) {
    if (buf_.size() < 2) return step;
    if (buf_[0] != kVersion) return fail(NegotiationError::VersionMismatch);
    const std::size_t nmethods = buf_[1];
    if (buf_.size() < 2 + nmethods) return step;
    const bool has_noauth =
        std::find(buf_.begin() + 2, buf_.begin() + 2 + static_cast<long>(nmethods), kMethodNoAuth) !=
        buf_.begin() + 2 + static_cast<long>(nmethods);
    consume(buf_, 2 + nmethods);
    if (!has_noauth) return fail(NegotiationError::MethodRejected, {kVersion, kMethodRejected});
    step.to_send = {kVersion, kMethodNoAuth};
    state_ = State::AwaitRequest;
  }

  if (state_ == State::AwaitRequest) {
    if (buf_.size() < 4) return step;
    if (buf_[0] != kVersion) return fail(NegotiationError::VersionMismatch);
    const auto cmd = buf_[1];
    auto len = address_length(buf_, 3);
    if (!len) return step;
    auto append = [&](const Bytes& reply) -> Bytes& {
      step.to_send.insert(step.to_send.end(), reply.begin(), reply.end());
      return step.to_send;
    };
    if (*len == 0)
      return fail(NegotiationError::AddressTypeNotSupported,
                  std::move(append(encode_reply(ReplyCode::AddressTypeNotSupported, zero))));
    ByteReader r(ByteView(buf_).subspan(3, *len));
    try {
      declared_ = SocksAddress::decode(r);
    } catch (const DecodeError&) {
      return fail(NegotiationError::AddressTypeNotSupported,
                  std::move(append(encode_reply(ReplyCode::AddressTypeNotSupported, zero))));
    }
    consume(buf_, 3 + *len);
    if (cmd != static_cast<std::uint8_t>(Command::UdpAssociate))
      return fail(NegotiationError::CommandNotSupported,
                  std::move(append(encode_reply(ReplyCode::CommandNotSupported, zero))));
    auto relay = allocate_relay_ ? allocate_relay_() : std::nullopt;
    if (!relay)
      return fail(NegotiationError::ReplyFailure,
                  std::move(append(encode_reply(ReplyCode::GeneralFailure, zero))));
    append(encode_reply(ReplyCode::Succeeded, SocksAddress::from_socket(*relay)));
    state_ = State::Associated;
    step.finished = true;
  }
  return step;
}

}  // namespace qsk::socks
