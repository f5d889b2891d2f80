#pragma once

#include <chrono>
#include <functional>
#include <map>

#include "qsk/common/env.hpp"

namespace qsk::runtime {

// Environment over real sockets, driven by poll(). Single-threaded: every
// callback runs on the thread calling run_*().
class PosixEnv final : public Environment {
public:
  explicit PosixEnv(IpAddress bind_ip = *IpAddress::parse("127.0.0.1"));
  ~PosixEnv() override;
  PosixEnv(const PosixEnv&) = delete;
  PosixEnv& operator=(const PosixEnv&) = delete;

  double now_ms() const override;
  IpAddress host_ip() const override { return bind_ip_; }
  SocketId open_udp(std::uint16_t port, DatagramHandler on_datagram) override;
  void close_udp(SocketId id) override;
  SocketAddress local_address(SocketId id) const override;
  void send_udp(SocketId id, const SocketAddress& to, ByteView payload) override;
  TimerId schedule(double delay_ms, std::function<void()> fn) override;
  void cancel(TimerId id) override;
  void listen_stream(std::uint16_t port, AcceptHandler on_accept) override;
  StreamId connect_stream(const SocketAddress& to, std::function<void(bool)> on_connected,
                          StreamHandlers handlers) override;
  void stream_send(StreamId id, ByteView data) override;
  void stream_close(StreamId id) override;
  SocketAddress stream_peer(StreamId id) const override;

  // Port actually bound by the most recent listen_stream call.
  std::uint16_t last_listen_port() const noexcept { return last_listen_port_; }

  // One poll round: waits at most max_wait_ms, then runs due timers and I/O.
  void run_once(double max_wait_ms);
  // Returns true if pred() became true before the timeout.
  bool run_until(const std::function<bool()>& pred, double timeout_ms);
  void run() { run_until([this] { return stopped_; }, 1e18); }
  void stop() { stopped_ = true; }

private:
  struct Udp {
    int fd = -1;
    SocketAddress local;
    DatagramHandler handler;
  };
  struct Listener {
    int fd = -1;
    AcceptHandler on_accept;
  };
  struct Stream {
    int fd = -1;
    SocketAddress peer;
    StreamHandlers handlers;
    std::function<void(bool)> on_connected;  // set while connecting
    Bytes outbox;
  };
  struct Timer {
    TimerId id;
    std::function<void()> fn;
  };

  void run_timers();
  void drop_stream(StreamId id, bool notify);
  void flush(StreamId id);

  IpAddress bind_ip_;
  std::chrono::steady_clock::time_point origin_;
  std::map<SocketId, Udp> udp_;
  std::map<int, Listener> listeners_;
  std::map<StreamId, Stream> streams_;
  std::multimap<double, Timer> timers_;
  SocketId next_socket_ = 1;
  StreamId next_stream_ = 1;
  TimerId next_timer_ = 1;
  std::uint16_t last_listen_port_ = 0;
  bool stopped_ = false;
};

}  // namespace qsk::runtime
