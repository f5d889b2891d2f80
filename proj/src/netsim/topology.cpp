#include <fstream>
#include <set>
#include <sstream>

#include "qsk/netsim/network.hpp"

namespace qsk::netsim {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ConfigError("topology line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& word, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    double v = std::stod(word, &used);
    if (used != word.size()) fail(line, std::string("bad ") + what + " '" + word + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(line, std::string("bad ") + what + " '" + word + "'");
  }
}

}  // namespace

TopologySpec TopologySpec::parse(std::string_view text) {
  TopologySpec spec;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream words(raw);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty()) continue;
    if (w[0] == "host") {
      if (w.size() != 3) fail(line_no, "expected: host <name> <ip>");
      auto ip = IpAddress::parse(w[2]);
      if (!ip) fail(line_no, "bad address '" + w[2] + "'");
      spec.hosts.push_back({w[1], *ip});
    } else if (w[0] == "link") {
      if (w.size() != 5 && w.size() != 6) fail(line_no, "expected: link <a> <b> <delay_ab> <delay_ba> [loss]");
      LinkProfile l{w[1], w[2], parse_number(w[3], line_no, "delay"), parse_number(w[4], line_no, "delay"), 0};
      if (w.size() == 6) l.loss_rate = parse_number(w[5], line_no, "loss");
      spec.links.push_back(l);
    } else if (w[0] == "seed") {
      if (w.size() != 2) fail(line_no, "expected: seed <n>");
      try {
        spec.seed = std::stoull(w[1]);
      } catch (const std::logic_error&) {
        fail(line_no, "bad seed '" + w[1] + "'");
      }
    } else {
      fail(line_no, "unknown directive '" + w[0] + "'");
    }
  }
  spec.validate();
  return spec;
}

TopologySpec TopologySpec::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open topology file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void TopologySpec::validate() const {
  std::set<std::string> names;
  std::set<IpAddress> ips;
  for (const auto& h : hosts) {
    if (!names.insert(h.name).second) throw ConfigError("duplicate host " + h.name);
    if (!ips.insert(h.ip).second) throw ConfigError("duplicate address " + h.ip.to_string());
  }
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& l : links) {
    if (!names.count(l.a)) throw ConfigError("link to unknown host " + l.a);
    if (!names.count(l.b)) throw ConfigError("link to unknown host " + l.b);
    if (l.a == l.b) throw ConfigError("link from " + l.a + " to itself");
    if (!(l.delay_ab_ms >= 0) || !(l.delay_ba_ms >= 0)) throw ConfigError("negative delay on " + l.a + "-" + l.b);
    if (!(l.loss_rate >= 0 && l.loss_rate <= 1)) throw ConfigError("loss outside [0,1] on " + l.a + "-" + l.b);
    auto key = std::minmax(l.a, l.b);
    if (!pairs.insert({key.first, key.second}).second) throw ConfigError("duplicate link " + l.a + "-" + l.b);
  }
}

}  // namespace qsk::netsim
