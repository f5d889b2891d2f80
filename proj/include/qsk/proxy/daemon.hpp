#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "qsk/common/env.hpp"
#include "qsk/dns/resolver.hpp"
#include "qsk/proxy/core.hpp"
#include "qsk/socks/negotiation.hpp"

namespace qsk::proxy {

struct DaemonConfig {
  std::uint16_t control_port = 1080;
  // First relay port; associations take consecutive ports from here.
  // 0 lets the system pick each one.
  std::uint16_t relay_base_port = 0;
  SocketAddress upstream_dns;
  ProxyConfig core;
  dns::StubOptions dns;
  double reap_interval_ms = 1000;
  std::function<void(const std::string&)> log;
};

// Binds the control listener and drives a ProxyCore from an Environment.
// Every association gets a relay socket facing the client and an outbound
// socket facing servers, both on the environment's own address.
class ProxyDaemon {
public:
  ProxyDaemon(Environment& env, DaemonConfig config);
  ~ProxyDaemon();
  ProxyDaemon(const ProxyDaemon&) = delete;
  ProxyDaemon& operator=(const ProxyDaemon&) = delete;

  ProxyCore& core() noexcept { return core_; }
  const ProxyCore& core() const noexcept { return core_; }
  std::size_t associations() const noexcept { return sessions_.size(); }
  const dns::StubResolver& resolver() const noexcept { return stub_; }

private:
  struct Session {
    StreamId control = 0;
    socks::ServerNegotiator negotiator;
    std::optional<AssocId> assoc;
    std::optional<SocketId> relay;
    std::optional<SocketId> outbound;
  };

  StreamHandlers accept(StreamId id, const SocketAddress& peer);
  std::optional<SocketAddress> allocate(StreamId id, const SocketAddress& peer);
  void teardown(StreamId id);
  void execute(std::vector<Action> actions);
  void arm_reaper();

  Environment& env_;
  DaemonConfig config_;
  ProxyCore core_;
  dns::StubResolver stub_;
  std::map<StreamId, std::unique_ptr<Session>> sessions_;
  std::map<AssocId, StreamId> by_assoc_;
  std::uint32_t next_relay_offset_ = 0;
  TimerId reaper_ = 0;
};

}  // namespace qsk::proxy
