#pragma once

#include <functional>

#include "qsk/common/env.hpp"
#include "qsk/quic/server.hpp"

namespace qsk::endpoint {

// Demo origin: one UDP socket, miniquic server endpoint, APPDATA echoed.
class DemoServer {
public:
  DemoServer(Environment& env, std::uint16_t port, quic::ServerConfig config);
  ~DemoServer();
  DemoServer(const DemoServer&) = delete;
  DemoServer& operator=(const DemoServer&) = delete;

  SocketAddress address() const { return env_.local_address(socket_); }
  const quic::ServerEndpoint& endpoint() const noexcept { return endpoint_; }
  void on_event(std::function<void(const quic::ServerEvent&)> h) { on_event_ = std::move(h); }

private:
  Environment& env_;
  quic::ServerEndpoint endpoint_;
  SocketId socket_;
  std::function<void(const quic::ServerEvent&)> on_event_;
};

}  // namespace qsk::endpoint
