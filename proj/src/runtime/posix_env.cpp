#include "qsk/runtime/posix_env.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <system_error>
#include <vector>

namespace qsk::runtime {

namespace {

[[noreturn]] void throw_errno(const std::string& what) { throw std::system_error(errno, std::generic_category(), what); }

socklen_t to_sockaddr(const SocketAddress& a, sockaddr_storage& ss) {
  std::memset(&ss, 0, sizeof ss);
  if (a.ip.is_v4()) {
    auto* sin = reinterpret_cast<sockaddr_in*>(&ss);
    sin->sin_family = AF_INET;
    sin->sin_port = htons(a.port);
    std::memcpy(&sin->sin_addr, a.ip.octets().data(), 4);
    return sizeof(sockaddr_in);
  }
  auto* sin6 = reinterpret_cast<sockaddr_in6*>(&ss);
  sin6->sin6_family = AF_INET6;
  sin6->sin6_port = htons(a.port);
  std::memcpy(&sin6->sin6_addr, a.ip.octets().data(), 16);
  return sizeof(sockaddr_in6);
}

SocketAddress from_sockaddr(const sockaddr_storage& ss) {
  if (ss.ss_family == AF_INET) {
    const auto* sin = reinterpret_cast<const sockaddr_in*>(&ss);
    std::array<std::uint8_t, 4> o{};
    std::memcpy(o.data(), &sin->sin_addr, 4);
    return {IpAddress::v4(o), ntohs(sin->sin_port)};
  }
  const auto* sin6 = reinterpret_cast<const sockaddr_in6*>(&ss);
  std::array<std::uint8_t, 16> o{};
  std::memcpy(o.data(), &sin6->sin6_addr, 16);
  return {IpAddress::v6(o), ntohs(sin6->sin6_port)};
}

int make_socket(const IpAddress& ip, int type) {
  int fd = ::socket(ip.is_v4() ? AF_INET : AF_INET6, type | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
  if (fd < 0) throw_errno("socket");
  return fd;
}

SocketAddress bound_address(int fd) {
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&ss), &len) < 0) throw_errno("getsockname");
  return from_sockaddr(ss);
}

void bind_or_throw(int fd, const SocketAddress& at) {
  sockaddr_storage ss;
  const auto len = to_sockaddr(at, ss);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&ss), len) < 0) {
    const int err = errno;
    ::close(fd);
    throw std::system_error(err, std::generic_category(), "bind " + at.to_string());
  }
}

}  // namespace

PosixEnv::PosixEnv(IpAddress bind_ip) : bind_ip_(bind_ip), origin_(std::chrono::steady_clock::now()) {}

PosixEnv::~PosixEnv() {
  for (auto& [id, u] : udp_) ::close(u.fd);
  for (auto& [fd, l] : listeners_) ::close(fd);
  for (auto& [id, s] : streams_) ::close(s.fd);
}

double PosixEnv::now_ms() const {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - origin_).count();
}

SocketId PosixEnv::open_udp(std::uint16_t port, DatagramHandler on_datagram) {
  int fd = make_socket(bind_ip_, SOCK_DGRAM);
  bind_or_throw(fd, {bind_ip_, port});
  const SocketId id = next_socket_++;
  udp_[id] = Udp{fd, bound_address(fd), std::move(on_datagram)};
  return id;
}

void PosixEnv::close_udp(SocketId id) {
  auto it = udp_.find(id);
  if (it == udp_.end()) return;
  ::close(it->second.fd);
  udp_.erase(it);
}

SocketAddress PosixEnv::local_address(SocketId id) const { return udp_.at(id).local; }

void PosixEnv::send_udp(SocketId id, const SocketAddress& to, ByteView payload) {
  auto it = udp_.find(id);
  if (it == udp_.end()) return;
  sockaddr_storage ss;
  const auto len = to_sockaddr(to, ss);
  // Datagram loss semantics: a full buffer or unreachable peer drops silently.
  (void)::sendto(it->second.fd, payload.data(), payload.size(), 0, reinterpret_cast<sockaddr*>(&ss), len);
}

TimerId PosixEnv::schedule(double delay_ms, std::function<void()> fn) {
  const TimerId id = next_timer_++;
  timers_.emplace(now_ms() + std::max(0.0, delay_ms), Timer{id, std::move(fn)});
  return id;
}

void PosixEnv::cancel(TimerId id) {
  for (auto it = timers_.begin(); it != timers_.end(); ++it) {
    if (it->second.id == id) {
      timers_.erase(it);
      return;
    }
  }
}

void PosixEnv::listen_stream(std::uint16_t port, AcceptHandler on_accept) {
  int fd = make_socket(bind_ip_, SOCK_STREAM);
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  bind_or_throw(fd, {bind_ip_, port});
  if (::listen(fd, 128) < 0) {
    ::close(fd);
    throw_errno("listen");
  }
  last_listen_port_ = bound_address(fd).port;
  listeners_[fd] = Listener{fd, std::move(on_accept)};
}

StreamId PosixEnv::connect_stream(const SocketAddress& to, std::function<void(bool)> on_connected,
                                  StreamHandlers handlers) {
  int fd = make_socket(to.ip, SOCK_STREAM);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  sockaddr_storage ss;
  const auto len = to_sockaddr(to, ss);
  const StreamId id = next_stream_++;
  const int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&ss), len);
  if (rc < 0 && errno != EINPROGRESS) {
    ::close(fd);
    schedule(0, [on_connected] { on_connected(false); });
    return id;
  }
  streams_[id] = Stream{fd, to, std::move(handlers), std::move(on_connected), {}};
  return id;
}

void PosixEnv::stream_send(StreamId id, ByteView data) {
  auto it = streams_.find(id);
  if (it == streams_.end()) return;
  it->second.outbox.insert(it->second.outbox.end(), data.begin(), data.end());
  if (!it->second.on_connected) flush(id);
}

void PosixEnv::flush(StreamId id) {
  auto it = streams_.find(id);
  if (it == streams_.end()) return;
  auto& s = it->second;
  while (!s.outbox.empty()) {
    const auto n = ::send(s.fd, s.outbox.data(), s.outbox.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) return;
      drop_stream(id, true);
      return;
    }
    s.outbox.erase(s.outbox.begin(), s.outbox.begin() + n);
  }
}

void PosixEnv::stream_close(StreamId id) { drop_stream(id, false); }

void PosixEnv::drop_stream(StreamId id, bool notify) {
  auto it = streams_.find(id);
  if (it == streams_.end()) return;
  ::close(it->second.fd);
  auto handlers = std::move(it->second.handlers);
  auto connecting = std::move(it->second.on_connected);
  streams_.erase(it);
  if (!notify) return;
  if (connecting) {
    connecting(false);
  } else if (handlers.on_close) {
    handlers.on_close();
  }
}

SocketAddress PosixEnv::stream_peer(StreamId id) const { return streams_.at(id).peer; }

void PosixEnv::run_timers() {
  const double now = now_ms();
  while (!timers_.empty() && timers_.begin()->first <= now) {
    auto fn = std::move(timers_.begin()->second.fn);
    timers_.erase(timers_.begin());
    fn();
  }
}

void PosixEnv::run_once(double max_wait_ms) {
  run_timers();
  double wait = max_wait_ms;
  if (!timers_.empty()) wait = std::min(wait, std::max(0.0, timers_.begin()->first - now_ms()));

  enum class Kind { Udp, Listen, Stream };
  struct Entry {
    Kind kind;
    std::uint64_t key;
  };
  std::vector<pollfd> fds;
  std::vector<Entry> entries;
  for (const auto& [id, u] : udp_) {
    fds.push_back({u.fd, POLLIN, 0});
    entries.push_back({Kind::Udp, id});
  }
  for (const auto& [fd, l] : listeners_) {
    fds.push_back({fd, POLLIN, 0});
    entries.push_back({Kind::Listen, static_cast<std::uint64_t>(fd)});
  }
  for (const auto& [id, s] : streams_) {
    short events = POLLIN;
    if (s.on_connected || !s.outbox.empty()) events |= POLLOUT;
    fds.push_back({s.fd, events, 0});
    entries.push_back({Kind::Stream, id});
  }
  // Sub-millisecond waits round up so timers are not spun on.
  const int timeout = wait >= 1e9 ? -1 : static_cast<int>(wait + 0.999);
  const int n = ::poll(fds.data(), fds.size(), timeout);
  if (n < 0 && errno != EINTR) throw_errno("poll");

  for (std::size_t i = 0; n > 0 && i < fds.size(); ++i) {
    if (fds[i].revents == 0) continue;
    const auto& e = entries[i];
    switch (e.kind) {
      case Kind::Udp: {
        std::uint8_t buf[65536];
        for (;;) {
          auto it = udp_.find(static_cast<SocketId>(e.key));
          if (it == udp_.end()) break;
          sockaddr_storage ss{};
          socklen_t len = sizeof ss;
          const auto got = ::recvfrom(it->second.fd, buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&ss), &len);
          if (got < 0) break;
          auto handler = it->second.handler;
          handler(from_sockaddr(ss), ByteView(buf, static_cast<std::size_t>(got)));
        }
        break;
      }
      case Kind::Listen: {
        auto it = listeners_.find(static_cast<int>(e.key));
        if (it == listeners_.end()) break;
        for (;;) {
          sockaddr_storage ss{};
          socklen_t len = sizeof ss;
          int cfd = ::accept4(it->second.fd, reinterpret_cast<sockaddr*>(&ss), &len, SOCK_NONBLOCK | SOCK_CLOEXEC);
          if (cfd < 0) break;
          int one = 1;
          ::setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
          const StreamId id = next_stream_++;
          const auto peer = from_sockaddr(ss);
          streams_[id] = Stream{cfd, peer, {}, {}, {}};
          auto handlers = it->second.on_accept(id, peer);
          if (auto s = streams_.find(id); s != streams_.end()) s->second.handlers = std::move(handlers);
          it = listeners_.find(static_cast<int>(e.key));
          if (it == listeners_.end()) break;
        }
        break;
      }
      case Kind::Stream: {
        const auto id = static_cast<StreamId>(e.key);
        auto it = streams_.find(id);
        if (it == streams_.end()) break;
        if (it->second.on_connected) {
          if (!(fds[i].revents & (POLLOUT | POLLERR | POLLHUP))) break;
          int err = 0;
          socklen_t len = sizeof err;
          ::getsockopt(it->second.fd, SOL_SOCKET, SO_ERROR, &err, &len);
          if (err != 0) {
            drop_stream(id, true);
            break;
          }
          auto cb = std::move(it->second.on_connected);
          it->second.on_connected = nullptr;
          cb(true);
          flush(id);
          break;
        }
        if (fds[i].revents & POLLOUT) flush(id);
        if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) {
          std::uint8_t buf[16384];
          for (;;) {
            it = streams_.find(id);
            if (it == streams_.end()) break;
            const auto got = ::recv(it->second.fd, buf, sizeof buf, 0);
            if (got > 0) {
              auto on_data = it->second.handlers.on_data;
              if (on_data) on_data(ByteView(buf, static_cast<std::size_t>(got)));
              continue;
            }
            if (got == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) drop_stream(id, true);
            break;
          }
        }
        break;
      }
    }
  }
  run_timers();
}

bool PosixEnv::run_until(const std::function<bool()>& pred, double timeout_ms) {
  const double deadline = now_ms() + timeout_ms;
  while (!pred()) {
    const double left = deadline - now_ms();
    if (left <= 0) return false;
    run_once(std::min(left, 50.0));
  }
  return true;
}

}  // namespace qsk::runtime
