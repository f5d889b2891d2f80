#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "qsk/common/env.hpp"

namespace qsk::netsim {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct HostSpec {
  std::string name;
  IpAddress ip;
};

struct LinkProfile {
  std::string a;
  std::string b;
  double delay_ab_ms = 0;
  double delay_ba_ms = 0;
  double loss_rate = 0;
};

// Text form, one item per line, '#' starts a comment:
//   host <name> <ip>
//   link <a> <b> <delay_ab_ms> <delay_ba_ms> [loss]
//   seed <n>
struct TopologySpec {
  std::vector<HostSpec> hosts;
  std::vector<LinkProfile> links;
  std::uint64_t seed = 0;

  static TopologySpec parse(std::string_view text);
  static TopologySpec load(const std::string& path);
  void validate() const;
};

enum class TraceKind { Send, Deliver, Drop };
std::string_view to_string(TraceKind k);

struct TraceEvent {
  double time_ms = 0;
  TraceKind kind = TraceKind::Send;
  SocketAddress src;
  SocketAddress dst;
  std::size_t length = 0;
  std::string tag;
  std::string note;  // drop reason
  bool stream = false;
  Bytes payload;
};

class Trace {
public:
  void append(TraceEvent e) { events_.push_back(std::move(e)); }
  const std::vector<TraceEvent>& events() const noexcept { return events_; }
  bool empty() const noexcept { return events_.empty(); }
  std::size_t size() const noexcept { return events_.size(); }
  // One JSON object per line.
  std::string to_jsonl() const;

private:
  std::vector<TraceEvent> events_;
};

// Payload -> short label stored in trace events.
using Classifier = std::function<std::string(ByteView)>;

struct RunResult {
  bool quiescent = false;
  std::size_t pending = 0;
  double end_ms = 0;
};

class Network;

class Host final : public Environment {
public:
  Host(Network& net, std::string name, IpAddress ip) : net_(net), name_(std::move(name)), ip_(ip) {}

  const std::string& name() const noexcept { return name_; }

  double now_ms() const override;
  IpAddress host_ip() const override { return ip_; }
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

private:
  friend class Network;
  struct Socket {
    std::uint16_t port = 0;
    DatagramHandler handler;
  };
  struct Stream {
    SocketAddress local;
    SocketAddress peer;
    StreamHandlers handlers;
    std::optional<StreamId> remote;  // id on the peer host once known
    bool open = true;
  };

  std::uint16_t allocate_port(std::uint16_t requested, bool stream);
  void deliver_datagram(const SocketAddress& from, const SocketAddress& to, const Bytes& payload);

  Network& net_;
  std::string name_;
  IpAddress ip_;
  std::map<SocketId, Socket> sockets_;
  std::map<std::uint16_t, SocketId> udp_ports_;
  std::map<std::uint16_t, AcceptHandler> listeners_;
  std::map<StreamId, Stream> streams_;
  std::uint16_t next_ephemeral_ = 49152;
  SocketId next_socket_ = 1;
  StreamId next_stream_ = 1;
};

// Deterministic discrete-event network in logical milliseconds. Events at the
// same instant run in insertion order. Unlisted host pairs are unreachable;
// a host always reaches itself with zero delay.
class Network {
public:
  explicit Network(const TopologySpec& spec);
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  Host& host(std::string_view name);
  Host* host_by_ip(const IpAddress& ip);
  double now_ms() const noexcept { return now_; }
  const Trace& trace() const noexcept { return trace_; }
  void set_classifier(Classifier c) { classifier_ = std::move(c); }

  // One-way delay, nullopt if unreachable.
  std::optional<double> delay(const IpAddress& from, const IpAddress& to) const;

  TimerId schedule_at(double at_ms, std::function<void()> fn);
  void cancel(TimerId id);

  RunResult run_until_quiescent(double deadline_ms);
  // Stops as soon as pred() holds after an event, or at the deadline.
  RunResult run_until(const std::function<bool()>& pred, double deadline_ms);
  std::size_t pending() const noexcept { return queue_.size() - cancelled_.size(); }

private:
  friend class Host;
  struct Event {
    double at;
    std::uint64_t seq;
    TimerId id;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& x, const Event& y) const {
      return x.at != y.at ? x.at > y.at : x.seq > y.seq;
    }
  };
  struct Direction {
    double delay_ms = 0;
    double loss_rate = 0;
    std::mt19937_64 rng;
  };

  void send_datagram(const SocketAddress& from, const SocketAddress& to, Bytes payload);
  // Reliable segment; delivered in order on the link, never lost.
  bool send_segment(const SocketAddress& from, const SocketAddress& to, std::size_t length, std::string tag,
                    std::function<void()> on_arrival);
  void purge_cancelled();
  void record(TraceKind kind, const SocketAddress& from, const SocketAddress& to, const Bytes& payload,
              std::string tag, std::string note = {}, bool stream = false, std::size_t length = 0);

  std::vector<std::unique_ptr<Host>> hosts_;
  std::map<std::pair<IpAddress, IpAddress>, Direction> links_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::unordered_set<TimerId> cancelled_;
  std::uint64_t seq_ = 0;
  TimerId next_timer_ = 1;
  double now_ = 0;
  Trace trace_;
  Classifier classifier_;
};

}  // namespace qsk::netsim
