#include "qsk/endpoint/server.hpp"

namespace qsk::endpoint {

DemoServer::DemoServer(Environment& env, std::uint16_t port, quic::ServerConfig config)
    : env_(env), endpoint_(std::move(config)) {
  socket_ = env_.open_udp(port, [this](const SocketAddress& from, ByteView d) {
    for (auto& t : endpoint_.on_datagram(from, d, env_.now_ms())) env_.send_udp(socket_, t.to, t.datagram);
    for (const auto& ev : endpoint_.take_events())
      if (on_event_) on_event_(ev);
  });
}

DemoServer::~DemoServer() { env_.close_udp(socket_); }

}  // namespace qsk::endpoint
