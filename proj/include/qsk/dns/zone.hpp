#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qsk/dns/message.hpp"

namespace qsk::dns {

// Static record set. Text form, one record per line, '#' comments:
//   <name> <A|AAAA> <ttl> <address>
// A leading "*." label matches any name below the remaining suffix when no
// exact record exists.
class Zone {
public:
  enum class Outcome { Found, NoData, NxDomain };
  struct Lookup {
    Outcome outcome = Outcome::NxDomain;
    std::vector<Answer> answers;
  };

  static Zone parse(std::string_view text);
  static Zone load(const std::string& path);

  void add(Answer record);
  Lookup lookup(std::string_view name, RecordType type) const;
  std::size_t size() const noexcept { return records_.size(); }

private:
  std::vector<Answer> records_;
};

}  // namespace qsk::dns
