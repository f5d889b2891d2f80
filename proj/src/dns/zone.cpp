#include "qsk/dns/zone.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qsk::dns {

Zone Zone::parse(std::string_view text) {
  Zone z;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string name, type, ttl, addr, extra;
    if (!(words >> name)) continue;
    auto bad = [&](const std::string& why) {
      return std::invalid_argument("zone line " + std::to_string(line_no) + ": " + why);
    };
    if (!(words >> type >> ttl >> addr) || (words >> extra)) throw bad("expected: name type ttl address");
    Answer a;
    try {
      a.name = normalize_name(name);
      a.ttl = static_cast<std::uint32_t>(std::stoul(ttl));
    } catch (const std::exception& e) {
      throw bad(e.what());
    }
    if (type == "A") {
      a.type = RecordType::A;
    } else if (type == "AAAA") {
      a.type = RecordType::AAAA;
    } else {
      throw bad("unsupported type " + type);
    }
    auto ip = IpAddress::parse(addr);
    if (!ip || ip->is_v4() != (a.type == RecordType::A)) throw bad("bad address " + addr);
    a.address = *ip;
    z.add(std::move(a));
  }
  return z;
}

Zone Zone::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open zone file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void Zone::add(Answer record) { records_.push_back(std::move(record)); }

Zone::Lookup Zone::lookup(std::string_view name, RecordType type) const {
  auto collect = [&](auto&& match) {
    Lookup out;
    bool exists = false;
    for (const auto& r : records_) {
      if (!match(r.name)) continue;
      exists = true;
      if (r.type != type) continue;
      Answer a = r;
      a.name = std::string(name);
      out.answers.push_back(std::move(a));
    }
    out.outcome = !out.answers.empty() ? Outcome::Found : exists ? Outcome::NoData : Outcome::NxDomain;
    return out;
  };

  auto exact = collect([&](const std::string& n) { return names_equal(n, name); });
  if (exact.outcome != Outcome::NxDomain) return exact;
  return collect([&](const std::string& n) {
    if (n.size() < 2 || n.compare(0, 2, "*.") != 0) return false;
    std::string_view suffix = std::string_view(n).substr(1);  // ".zone"
    return name.size() > suffix.size() &&
           names_equal(name.substr(name.size() - suffix.size()), suffix);
  });
}

}  // namespace qsk::dns
