#pragma once

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "qsk/common/address.hpp"

namespace qsk::tools {

inline SocketAddress endpoint_arg(const std::string& text, const char* flag) {
  auto a = SocketAddress::parse(text);
  if (!a) throw CLI::ValidationError(flag, "expected addr:port, got '" + text + "'");
  return *a;
}

// "name:port" with the port split off the last colon.
inline std::pair<std::string, std::uint16_t> name_port_arg(const std::string& text, const char* flag) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) throw CLI::ValidationError(flag, "expected name:port");
  const auto port = std::stoul(text.substr(colon + 1));
  if (port == 0 || port > 65535) throw CLI::ValidationError(flag, "bad port");
  return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

// stdout when path is empty or "-".
class Output {
public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw std::runtime_error("cannot open " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
  std::unique_ptr<std::ofstream> file_;
};

inline volatile std::sig_atomic_t g_stop = 0;
inline volatile std::sig_atomic_t g_dump = 0;

inline void install_signals() {
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  std::signal(SIGUSR1, [](int) { g_dump = 1; });
}

}  // namespace qsk::tools
