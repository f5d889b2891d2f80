#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qsk/common/address.hpp"
#include "qsk/common/bytes.hpp"

namespace qsk::dns {

enum class RecordType : std::uint16_t { A = 1, AAAA = 28 };
enum class Rcode : std::uint8_t { NoError = 0, FormErr = 1, ServFail = 2, NxDomain = 3, NotImp = 4, Refused = 5 };

inline constexpr std::uint16_t kClassIn = 1;
inline constexpr std::size_t kMaxNameLength = 255;  // wire form
inline constexpr std::size_t kMaxLabelLength = 63;

std::string_view to_string(RecordType t);
std::string_view to_string(Rcode r);

struct Question {
  std::string name;  // dotted, no trailing dot
  RecordType type = RecordType::A;
  friend bool operator==(const Question&, const Question&) = default;
};

struct Answer {
  std::string name;
  RecordType type = RecordType::A;
  std::uint32_t ttl = 0;
  IpAddress address;
  friend bool operator==(const Answer&, const Answer&) = default;
};

struct Message {
  std::uint16_t id = 0;
  bool response = false;
  bool authoritative = false;
  bool recursion_desired = false;
  bool recursion_available = false;
  Rcode rcode = Rcode::NoError;
  Question question;
  std::vector<Answer> answers;
  friend bool operator==(const Message&, const Message&) = default;
};

// Case-preserving; trailing dot stripped. Throws EncodeError on a bad name.
std::string normalize_name(std::string_view name);
bool names_equal(std::string_view a, std::string_view b);

Message make_query(std::uint16_t id, std::string_view name, RecordType type, bool recursion_desired = true);
Message make_response(const Message& query, Rcode rcode, std::vector<Answer> answers, bool authoritative);

// Never emits compression pointers.
Bytes encode(const Message& m);
// Accepts compression pointers. Exactly one question. Answers of types
// other than A/AAAA (or class other than IN) are skipped. Authority and
// additional sections are ignored.
Message decode(ByteView wire);

}  // namespace qsk::dns
