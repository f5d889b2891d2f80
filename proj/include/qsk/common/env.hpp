#pragma once

#include <cstdint>
#include <functional>

#include "qsk/common/address.hpp"
#include "qsk/common/bytes.hpp"

namespace qsk {

using SocketId = std::uint32_t;
using StreamId = std::uint32_t;
using TimerId = std::uint64_t;

using DatagramHandler = std::function<void(const SocketAddress& from, ByteView payload)>;

struct StreamHandlers {
  std::function<void(ByteView)> on_data;
  std::function<void()> on_close;
};

// I/O surface that protocol actors are written against. Actors never own
// threads or block; they register callbacks and are driven by whichever
// environment hosts them: the deterministic simulator or the poll()-based
// socket runtime. One environment corresponds to one host (one IP address).
class Environment {
public:
  virtual ~Environment() = default;

  // Milliseconds; logical in the simulator, monotonic wall clock otherwise.
  virtual double now_ms() const = 0;
  virtual IpAddress host_ip() const = 0;

  // port == 0 picks an ephemeral port. Throws std::system_error on bind failure.
  virtual SocketId open_udp(std::uint16_t port, DatagramHandler on_datagram) = 0;
  virtual void close_udp(SocketId id) = 0;
  virtual SocketAddress local_address(SocketId id) const = 0;
  virtual void send_udp(SocketId id, const SocketAddress& to, ByteView payload) = 0;

  virtual TimerId schedule(double delay_ms, std::function<void()> fn) = 0;
  virtual void cancel(TimerId id) = 0;

  // Reliable ordered byte streams (TCP on real hosts).
  using AcceptHandler = std::function<StreamHandlers(StreamId, const SocketAddress& peer)>;
  virtual void listen_stream(std::uint16_t port, AcceptHandler on_accept) = 0;
  virtual StreamId connect_stream(const SocketAddress& to, std::function<void(bool ok)> on_connected,
                                  StreamHandlers handlers) = 0;
  virtual void stream_send(StreamId id, ByteView data) = 0;
  virtual void stream_close(StreamId id) = 0;
  // Peer address of an accepted or connected stream.
  virtual SocketAddress stream_peer(StreamId id) const = 0;
};

}  // namespace qsk
